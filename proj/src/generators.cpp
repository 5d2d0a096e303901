#include "curvmix/generators.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

namespace curvmix {

namespace {

Rat frac(long num, long den) { return rat_of(num, den); }

std::string join_ints(const std::vector<int>& v, char sep) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += sep;
        out += std::to_string(v[i]);
    }
    return out;
}

}  // namespace

// =============================================================================
// Families
// =============================================================================

Chain<Rat> cycle_walk(int n, bool lazy) {
    if (n < 3) throw SizeError("cycle needs n >= 3");
    Mat<Rat> P(n, n, Rat(0));
    for (int x = 0; x < n; ++x) {
        P(x, (x + 1) % n) += frac(1, 2);
        P(x, (x + n - 1) % n) += frac(1, 2);
    }
    auto chain = Chain<Rat>::build(std::move(P));
    return lazy ? lazify(chain) : chain;
}

Chain<Rat> hypercube_times_cycle(int d, int n, bool lazy) {
    if (d < 1 || n < 3) throw SizeError("need d >= 1 and n >= 3");
    const long states = (1L << d) * n;
    if (states > 64) throw SizeError("2^d * n exceeds 64 states");
    const int N = static_cast<int>(states);
    const int degree = d + 2;
    Mat<Rat> P(N, N, Rat(0));
    for (int bits = 0; bits < (1 << d); ++bits)
        for (int c = 0; c < n; ++c) {
            const int idx = bits * n + c;
            for (int i = 0; i < d; ++i) P(idx, (bits ^ (1 << i)) * n + c) += frac(1, degree);
            P(idx, bits * n + (c + 1) % n) += frac(1, degree);
            P(idx, bits * n + (c + n - 1) % n) += frac(1, degree);
        }
    auto chain = Chain<Rat>::build(std::move(P));
    return lazy ? lazify(chain) : chain;
}

namespace {

long group_order(const std::vector<int>& moduli) {
    long order = 1;
    for (int m : moduli) order *= m;
    return order;
}

int element_index(const std::vector<int>& moduli, const std::vector<int>& el) {
    int idx = 0;
    for (size_t i = 0; i < moduli.size(); ++i) idx = idx * moduli[i] + el[i];
    return idx;
}

std::vector<int> element_of_index(const std::vector<int>& moduli, int idx) {
    std::vector<int> el(moduli.size());
    for (size_t i = moduli.size(); i-- > 0;) {
        el[i] = idx % moduli[i];
        idx /= moduli[i];
    }
    return el;
}

bool generates(const std::vector<int>& moduli, const std::vector<std::vector<int>>& gens) {
    const long order = group_order(moduli);
    std::set<int> reached{0};
    std::vector<int> frontier{0};
    while (!frontier.empty()) {
        std::vector<int> next;
        for (int idx : frontier) {
            std::vector<int> el = element_of_index(moduli, idx);
            for (const auto& g : gens) {
                std::vector<int> sum(el.size());
                for (size_t i = 0; i < el.size(); ++i) sum[i] = (el[i] + g[i]) % moduli[i];
                int sidx = element_index(moduli, sum);
                if (reached.insert(sidx).second) next.push_back(sidx);
            }
        }
        frontier = std::move(next);
    }
    return static_cast<long>(reached.size()) == order;
}

}  // namespace

Chain<Rat> abelian_cayley(const std::vector<int>& moduli,
                          const std::vector<std::vector<int>>& generators, bool lazy) {
    if (moduli.empty()) throw SizeError("empty group");
    for (int m : moduli)
        if (m < 2) throw SizeError("cyclic factors need modulus >= 2");
    const long order = group_order(moduli);
    if (order > 64) throw SizeError("group order exceeds 64");
    if (generators.empty()) throw NotGeneratingError("empty generating multiset");
    for (const auto& g : generators)
        if (g.size() != moduli.size()) throw ParseError("generator arity mismatch");
    if (!generates(moduli, generators))
        throw NotGeneratingError("multiset does not generate the group");

    const int N = static_cast<int>(order);
    const int deg = static_cast<int>(generators.size());
    Mat<Rat> P(N, N, Rat(0));
    for (int idx = 0; idx < N; ++idx) {
        std::vector<int> el = element_of_index(moduli, idx);
        for (const auto& g : generators) {
            std::vector<int> sum(el.size());
            for (size_t i = 0; i < el.size(); ++i) sum[i] = (el[i] + g[i]) % moduli[i];
            P(idx, element_index(moduli, sum)) += frac(1, deg);
        }
    }
    auto chain = Chain<Rat>::build(std::move(P));
    return lazy ? lazify(chain) : chain;
}

std::vector<std::vector<int>> random_generating_multiset(const std::vector<int>& moduli,
                                                         int degree, Rng& rng) {
    const long order = group_order(moduli);
    if (degree < 1) throw NotGeneratingError("degree must be >= 1");
    for (int attempt = 0; attempt < 1000; ++attempt) {
        std::vector<std::vector<int>> gens;
        for (int i = 0; i < degree; ++i) {
            int idx = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(order - 1)));
            gens.push_back(element_of_index(moduli, idx));
        }
        if (generates(moduli, gens)) return gens;
    }
    throw NotGeneratingError("no generating multiset found (degree too small?)");
}

// =============================================================================
// Symmetric group
// =============================================================================

std::vector<std::vector<int>> all_permutations(int m) {
    std::vector<int> id(m);
    std::iota(id.begin(), id.end(), 0);
    std::vector<std::vector<int>> perms;
    do {
        perms.push_back(id);
    } while (std::next_permutation(id.begin(), id.end()));
    return perms;
}

std::vector<int> compose_perm(const std::vector<int>& outer, const std::vector<int>& inner) {
    std::vector<int> out(inner.size());
    for (size_t i = 0; i < inner.size(); ++i) out[i] = outer[inner[i]];
    return out;
}

std::vector<int> invert_perm(const std::vector<int>& p) {
    std::vector<int> out(p.size());
    for (size_t i = 0; i < p.size(); ++i) out[p[i]] = static_cast<int>(i);
    return out;
}

Chain<Rat> transposition_walk(int m, bool lazy) {
    if (m != 3 && m != 4) throw SizeError("transposition walk supports m in {3,4}");
    const auto perms = all_permutations(m);
    const int N = static_cast<int>(perms.size());
    std::map<std::vector<int>, int> rank;
    for (int i = 0; i < N; ++i) rank[perms[i]] = i;

    std::vector<std::vector<int>> transpositions;
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) {
            std::vector<int> tau(m);
            std::iota(tau.begin(), tau.end(), 0);
            std::swap(tau[i], tau[j]);
            transpositions.push_back(tau);
        }
    const int deg = static_cast<int>(transpositions.size());

    Mat<Rat> P(N, N, Rat(0));
    std::vector<std::string> labels(N);
    for (int x = 0; x < N; ++x) {
        for (int v : perms[x]) labels[x] += std::to_string(v);
        for (const auto& tau : transpositions)
            P(x, rank[compose_perm(tau, perms[x])]) += frac(1, deg);
    }
    auto chain = Chain<Rat>::build(std::move(P), labels);
    return lazy ? lazify(chain) : chain;
}

// =============================================================================
// Segments, directed cycles, stars
// =============================================================================

Chain<Rat> biased_segment(int n, const Rat& up_prob) {
    if (n < 2) throw SizeError("segment needs n >= 2");
    if (!(up_prob > Rat(0)) || !(up_prob < Rat(1)))
        throw ParseError("up probability must lie strictly between 0 and 1");
    const Rat up = up_prob / 2;
    const Rat down = (Rat(1) - up_prob) / 2;
    Mat<Rat> P(n, n, Rat(0));
    for (int x = 0; x < n; ++x) {
        P(x, x) += frac(1, 2);
        if (x + 1 < n)
            P(x, x + 1) += up;
        else
            P(x, x) += up;  // reflected
        if (x > 0)
            P(x, x - 1) += down;
        else
            P(x, x) += down;  // reflected
    }
    return Chain<Rat>::build(std::move(P));
}

Chain<Rat> directed_lazy_cycle(int n) {
    if (n < 3) throw SizeError("cycle needs n >= 3");
    Mat<Rat> P(n, n, Rat(0));
    for (int x = 0; x < n; ++x) {
        P(x, x) = frac(1, 2);
        P(x, (x + 1) % n) = frac(1, 2);
    }
    return Chain<Rat>::build(std::move(P));
}

Chain<Rat> double_star(int arms) {
    if (arms < 1) throw SizeError("double star needs at least one leaf per hub");
    const int n = 2 + 2 * arms;  // 0 = u, 1 = v, then u-leaves, then v-leaves
    Mat<Rat> P(n, n, Rat(0));
    const int hub_deg = arms + 1;
    P(0, 1) = frac(1, hub_deg);
    P(1, 0) = frac(1, hub_deg);
    for (int leaf = 0; leaf < arms; ++leaf) {
        const int a = 2 + leaf, b = 2 + arms + leaf;
        P(0, a) = frac(1, hub_deg);
        P(a, 0) = Rat(1);
        P(1, b) = frac(1, hub_deg);
        P(b, 1) = Rat(1);
    }
    return lazify(Chain<Rat>::build(std::move(P)));
}

// =============================================================================
// Corpora
// =============================================================================

namespace {

TaggedChain tag(std::string name, std::string family, std::string params, Chain<Rat> chain,
                bool lazy, bool reversible, bool transitive, bool by_construction,
                CurvatureExpectation curv) {
    return TaggedChain{std::move(name), std::move(family), std::move(params),
                       std::move(chain), lazy,  reversible,  transitive,
                       by_construction,  curv};
}

bool multiset_symmetric(const std::vector<int>& moduli,
                        const std::vector<std::vector<int>>& gens) {
    std::map<std::vector<int>, int> count;
    for (const auto& g : gens) ++count[g];
    for (const auto& [g, c] : count) {
        std::vector<int> neg(g.size());
        for (size_t i = 0; i < g.size(); ++i) neg[i] = (moduli[i] - g[i]) % moduli[i];
        auto it = count.find(neg);
        if (it == count.end() || it->second != c) return false;
    }
    return true;
}

}  // namespace

std::vector<TaggedChain> default_corpus(uint64_t seed) {
    Rng root(seed);
    std::vector<TaggedChain> corpus;
    const auto nonneg = CurvatureExpectation::NonNegative;

    for (int n : {4, 5, 8, 12, 16})
        corpus.push_back(tag("cycle-" + std::to_string(n) + "-lazy", "cycle",
                             "n=" + std::to_string(n) + " lazy", cycle_walk(n, true), true,
                             true, true, true, nonneg));
    corpus.push_back(
        tag("cycle-5-plain", "cycle", "n=5", cycle_walk(5, false), false, true, true, true,
            nonneg));

    corpus.push_back(tag("hc-1x8-lazy", "hypercube_times_cycle", "d=1 n=8 lazy",
                         hypercube_times_cycle(1, 8, true), true, true, true, true, nonneg));
    corpus.push_back(tag("hc-2x3-lazy", "hypercube_times_cycle", "d=2 n=3 lazy",
                         hypercube_times_cycle(2, 3, true), true, true, true, true, nonneg));

    {
        std::vector<std::vector<int>> gens{{0, 1}, {1, 0}, {1, 1}};
        corpus.push_back(tag("cayley-z2xz2-full", "abelian_cayley",
                             "group=2,2 S=all non-identity lazy",
                             abelian_cayley({2, 2}, gens, true), true, true, true, true,
                             nonneg));
    }
    {
        Rng stream = root.fork("cayley-z8");
        auto gens = random_generating_multiset({8}, 3, stream);
        std::string desc;
        for (const auto& g : gens) desc += (desc.empty() ? "" : ",") + std::to_string(g[0]);
        corpus.push_back(tag("cayley-z8-rand", "abelian_cayley",
                             "group=8 degree=3 S={" + desc + "} lazy",
                             abelian_cayley({8}, gens, true), true,
                             multiset_symmetric({8}, gens), true, true, nonneg));
    }
    {
        Rng stream = root.fork("cayley-z2xz4");
        auto gens = random_generating_multiset({2, 4}, 3, stream);
        std::string desc;
        for (const auto& g : gens)
            desc += (desc.empty() ? "(" : ",(") + join_ints(g, ';') + ")";
        corpus.push_back(tag("cayley-z2xz4-rand", "abelian_cayley",
                             "group=2,4 degree=3 S=" + desc + " lazy",
                             abelian_cayley({2, 4}, gens, true), true,
                             multiset_symmetric({2, 4}, gens), true, true, nonneg));
    }

    corpus.push_back(tag("transposition-3", "transposition_walk", "m=3 lazy",
                         transposition_walk(3, true), true, true, true, true, nonneg));
    corpus.push_back(tag("transposition-4", "transposition_walk", "m=4 lazy",
                         transposition_walk(4, true), true, true, true, true, nonneg));

    for (int n : {3, 8, 16, 28})
        corpus.push_back(tag("biased-" + std::to_string(n), "biased_segment",
                             "n=" + std::to_string(n) + " up=3/4",
                             biased_segment(n, rat_of(3, 4)), true, true, false, false,
                             nonneg));

    for (int n : {3, 5, 8})
        corpus.push_back(tag("dcycle-" + std::to_string(n), "directed_lazy_cycle",
                             "n=" + std::to_string(n), directed_lazy_cycle(n), true, false,
                             true, true, nonneg));

    corpus.push_back(tag("double-star-2", "double_star", "arms=2", double_star(2), true,
                         true, false, false, CurvatureExpectation::Negative));
    return corpus;
}

std::vector<TaggedChain> smoke_corpus(uint64_t seed) {
    (void)seed;
    std::vector<TaggedChain> corpus;
    const auto nonneg = CurvatureExpectation::NonNegative;
    corpus.push_back(tag("cycle-4-lazy", "cycle", "n=4 lazy", cycle_walk(4, true), true,
                         true, true, true, nonneg));
    corpus.push_back(tag("biased-3", "biased_segment", "n=3 up=3/4",
                         biased_segment(3, rat_of(3, 4)), true, true, false, false, nonneg));
    corpus.push_back(tag("dcycle-3", "directed_lazy_cycle", "n=3", directed_lazy_cycle(3),
                         true, false, true, true, nonneg));
    corpus.push_back(tag("double-star-2", "double_star", "arms=2", double_star(2), true,
                         true, false, false, CurvatureExpectation::Negative));
    return corpus;
}

std::vector<TaggedChain> corpus_by_name(const std::string& name, uint64_t seed) {
    if (name == "default") return default_corpus(seed);
    if (name == "smoke") return smoke_corpus(seed);
    if (name == "none") return {};
    throw ParseError("unknown corpus '" + name + "' (expected default, smoke, or none)");
}

}  // namespace curvmix
