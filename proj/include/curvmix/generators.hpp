#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "curvmix/chain.hpp"
#include "curvmix/numeric.hpp"
#include "curvmix/rng.hpp"

namespace curvmix {

enum class CurvatureExpectation { NonNegative, Negative, Unknown };

// A corpus chain with its ground-truth structural tags. Structural tags
// (lazy / reversible / transitive) must hold on the generated object; the
// curvature expectation is checked by the certifier, never assumed.
struct TaggedChain {
    std::string name;
    std::string family;
    std::string params;
    Chain<Rat> chain;
    bool expect_lazy = false;
    bool expect_reversible = false;
    bool expect_transitive = false;
    bool transitive_by_construction = false;  // bypasses the generic search
    CurvatureExpectation expect_curvature = CurvatureExpectation::Unknown;
};

// --- generator families ------------------------------------------------------

// simple random walk on the n-cycle, optionally lazified (n >= 3)
Chain<Rat> cycle_walk(int n, bool lazy);

// lazy SRW on the Cartesian product Z_2^d x Z_n (2^d * n <= 64)
Chain<Rat> hypercube_times_cycle(int d, int n, bool lazy);

// random walk on Z_{m1} x ... x Z_{mk} with increment law uniform on
// the multiset of generators; throws NotGeneratingError when the multiset
// does not generate the group
Chain<Rat> abelian_cayley(const std::vector<int>& moduli,
                          const std::vector<std::vector<int>>& generators, bool lazy);

// degree-many draws (with replacement) from the non-identity elements,
// redrawn until the multiset generates; deterministic given the rng state
std::vector<std::vector<int>> random_generating_multiset(const std::vector<int>& moduli,
                                                         int degree, Rng& rng);

// walk on the symmetric group S_m with increments uniform on all
// transpositions, optionally lazified (m in {3,4})
Chain<Rat> transposition_walk(int m, bool lazy);

// lazy birth-death chain on {0..n-1}: up with probability up/2, down with
// (1-up)/2, reflected mass folded into the endpoint self-loops
Chain<Rat> biased_segment(int n, const Rat& up_prob);

// P(x,x) = 1/2, P(x,x+1 mod n) = 1/2: non-reversible, genuinely asymmetric
// directed metric (n >= 3)
Chain<Rat> directed_lazy_cycle(int n);

// lazy SRW on two adjacent hubs with `arms` pendant leaves each; the
// smallest chain in the corpus with negative curvature at the hub edge
Chain<Rat> double_star(int arms);

// --- corpora -----------------------------------------------------------------

std::vector<TaggedChain> default_corpus(uint64_t seed);
std::vector<TaggedChain> smoke_corpus(uint64_t seed);
std::vector<TaggedChain> corpus_by_name(const std::string& name, uint64_t seed);

// permutation helpers shared with tests
std::vector<std::vector<int>> all_permutations(int m);
std::vector<int> compose_perm(const std::vector<int>& outer, const std::vector<int>& inner);
std::vector<int> invert_perm(const std::vector<int>& p);

}  // namespace curvmix
