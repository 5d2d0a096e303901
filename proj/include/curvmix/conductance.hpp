#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "curvmix/chain.hpp"
#include "curvmix/matrix.hpp"
#include "curvmix/numeric.hpp"
#include "curvmix/threads.hpp"

namespace curvmix {

// =============================================================================
// Conductance of P^t by exhaustive subset enumeration
// =============================================================================
//
// Phi(P^t) = min over A with 0 < pi(A) <= 1/2 of
//            (1/pi(A)) sum_{x in A, y notin A} pi(x) P^t(x,y).
//
// Enumeration walks all nonempty proper subsets in Gray-code order with O(n)
// incremental cut/mass updates. Exact mode clears denominators once and works
// on integers: a signed 128-bit fast path when magnitudes permit, GMP integers
// otherwise. The boundary case pi(A) = 1/2 is admissible.

template <typename T>
struct ConductanceValue {
    long t = 1;
    T phi = T(0);
    uint32_t argmin_mask = 0;
    std::vector<int> argmin_set;  // sorted indices, for audit
    bool upper_bound_only = false;
};

inline constexpr int kConductanceEnumLimit = 24;  // hard cap: 16.7M subsets

namespace detail {

struct GrayBest {
    bool found = false;
    uint32_t mask = 0;
};

// Generic Gray-code scan. Weight ops are provided by the Acc policy:
//   Acc::Cut   additive cut accumulator
//   Acc::Mass  additive mass accumulator
//   better(cut_a, mass_a, cut_b, mass_b): cut_a/mass_a < cut_b/mass_b
template <typename Acc>
GrayBest gray_scan(int n, const Acc& acc, typename Acc::Cut& best_cut,
                   typename Acc::Mass& best_mass) {
    using Cut = typename Acc::Cut;
    using Mass = typename Acc::Mass;
    GrayBest best;
    Cut cut = acc.zero_cut();
    Mass mass = acc.zero_mass();
    uint32_t mask = 0;
    const uint64_t total = 1ull << n;
    for (uint64_t i = 1; i < total; ++i) {
        const int b = std::countr_zero(i);
        const bool inserting = !(mask >> b & 1u);
        mask ^= (1u << b);
        acc.apply_flip(b, inserting, mask, cut, mass);
        if (acc.is_admissible(mass)) {
            if (!best.found || acc.better(cut, mass, best_cut, best_mass) ||
                (acc.equal(cut, mass, best_cut, best_mass) && mask < best.mask)) {
                best.found = true;
                best.mask = mask;
                best_cut = cut;
                best_mass = mass;
            }
        }
    }
    return best;
}

// --- exact integer accumulators ---------------------------------------------

struct AccI128 {
    using Cut = __int128;
    using Mass = uint64_t;
    int n;
    const std::vector<__int128>* q;  // n*n numerators over common denominator
    const std::vector<uint64_t>* m;  // pi numerators over mass denominator
    uint64_t mass_den;

    Cut zero_cut() const { return 0; }
    Mass zero_mass() const { return 0; }
    void apply_flip(int b, bool inserting, uint32_t mask, Cut& cut, Mass& mass) const {
        const auto& Q = *q;
        const size_t bn = static_cast<size_t>(b) * n;
        if (inserting) {
            for (int y = 0; y < n; ++y) {
                if (y == b) continue;
                if (mask >> y & 1u)
                    cut -= Q[static_cast<size_t>(y) * n + b];
                else
                    cut += Q[bn + y];
            }
            mass += (*m)[b];
        } else {
            for (int y = 0; y < n; ++y) {
                if (y == b) continue;
                if (mask >> y & 1u)
                    cut += Q[static_cast<size_t>(y) * n + b];
                else
                    cut -= Q[bn + y];
            }
            mass -= (*m)[b];
        }
    }
    bool is_admissible(Mass mass) const { return mass > 0 && 2 * mass <= mass_den; }
    bool better(Cut c1, Mass m1, Cut c2, Mass m2) const {
        return c1 * static_cast<Cut>(m2) < c2 * static_cast<Cut>(m1);
    }
    bool equal(Cut c1, Mass m1, Cut c2, Mass m2) const {
        return c1 * static_cast<Cut>(m2) == c2 * static_cast<Cut>(m1);
    }
};

struct AccMpz {
    using Cut = mpz_class;
    using Mass = uint64_t;
    int n;
    const std::vector<mpz_class>* q;
    const std::vector<uint64_t>* m;
    uint64_t mass_den;

    Cut zero_cut() const { return mpz_class(0); }
    Mass zero_mass() const { return 0; }
    void apply_flip(int b, bool inserting, uint32_t mask, Cut& cut, Mass& mass) const {
        const auto& Q = *q;
        const size_t bn = static_cast<size_t>(b) * n;
        if (inserting) {
            for (int y = 0; y < n; ++y) {
                if (y == b) continue;
                if (mask >> y & 1u)
                    cut -= Q[static_cast<size_t>(y) * n + b];
                else
                    cut += Q[bn + y];
            }
            mass += (*m)[b];
        } else {
            for (int y = 0; y < n; ++y) {
                if (y == b) continue;
                if (mask >> y & 1u)
                    cut += Q[static_cast<size_t>(y) * n + b];
                else
                    cut -= Q[bn + y];
            }
            mass -= (*m)[b];
        }
    }
    bool is_admissible(Mass mass) const { return mass > 0 && 2 * mass <= mass_den; }
    bool better(const Cut& c1, Mass m1, const Cut& c2, Mass m2) const {
        return c1 * mpz_class(static_cast<unsigned long>(m2)) <
               c2 * mpz_class(static_cast<unsigned long>(m1));
    }
    bool equal(const Cut& c1, Mass m1, const Cut& c2, Mass m2) const {
        return c1 * mpz_class(static_cast<unsigned long>(m2)) ==
               c2 * mpz_class(static_cast<unsigned long>(m1));
    }
};

struct AccDouble {
    using Cut = double;
    using Mass = double;
    int n;
    const std::vector<double>* q;
    const std::vector<double>* m;

    Cut zero_cut() const { return 0.0; }
    Mass zero_mass() const { return 0.0; }
    void apply_flip(int b, bool inserting, uint32_t mask, Cut& cut, Mass& mass) const {
        const auto& Q = *q;
        const size_t bn = static_cast<size_t>(b) * n;
        if (inserting) {
            for (int y = 0; y < n; ++y) {
                if (y == b) continue;
                if (mask >> y & 1u)
                    cut -= Q[static_cast<size_t>(y) * n + b];
                else
                    cut += Q[bn + y];
            }
            mass += (*m)[b];
        } else {
            for (int y = 0; y < n; ++y) {
                if (y == b) continue;
                if (mask >> y & 1u)
                    cut += Q[static_cast<size_t>(y) * n + b];
                else
                    cut -= Q[bn + y];
            }
            mass -= (*m)[b];
        }
    }
    bool is_admissible(Mass mass) const { return mass > 1e-15 && mass <= 0.5 + 1e-12; }
    bool better(Cut c1, Mass m1, Cut c2, Mass m2) const { return c1 * m2 < c2 * m1; }
    bool equal(Cut c1, Mass m1, Cut c2, Mass m2) const { return c1 * m2 == c2 * m1; }
};

inline std::vector<int> mask_to_set(uint32_t mask, int n) {
    std::vector<int> out;
    for (int i = 0; i < n; ++i)
        if (mask >> i & 1u) out.push_back(i);
    return out;
}

}  // namespace detail

// Exact conductance from stationary masses and the rows of P^t.
inline ConductanceValue<Rat> conductance_from_rows(const std::vector<Rat>& pi,
                                                   const Mat<Rat>& rows, long t,
                                                   int enum_limit = kConductanceEnumLimit) {
    const int n = rows.rows();
    if (n <= 1) throw TooLargeError("conductance needs at least two states");
    if (n > std::min(enum_limit, kConductanceEnumLimit))
        throw TooLargeError("state count " + std::to_string(n) +
                            " exceeds the subset enumeration limit");

    // common denominators for masses and for the weighted flow matrix
    mpz_class mass_den(1);
    for (const Rat& p : pi) mpz_lcm(mass_den.get_mpz_t(), mass_den.get_mpz_t(),
                                    p.get_den().get_mpz_t());
    if (mpz_sizeinbase(mass_den.get_mpz_t(), 2) > 62)
        throw TooLargeError("stationary denominators too large for enumeration");

    std::vector<uint64_t> masses(n);
    for (int x = 0; x < n; ++x) {
        mpz_class num = pi[x].get_num() * (mass_den / pi[x].get_den());
        masses[x] = mpz_get_ui(num.get_mpz_t());
    }
    const uint64_t mass_den_u = mpz_get_ui(mass_den.get_mpz_t());

    mpz_class flow_den(1);
    std::vector<Rat> weighted(static_cast<size_t>(n) * n);
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y) {
            weighted[static_cast<size_t>(x) * n + y] = pi[x] * rows(x, y);
            mpz_lcm(flow_den.get_mpz_t(), flow_den.get_mpz_t(),
                    weighted[static_cast<size_t>(x) * n + y].get_den().get_mpz_t());
        }

    std::vector<mpz_class> q(static_cast<size_t>(n) * n);
    for (size_t idx = 0; idx < q.size(); ++idx)
        q[idx] = weighted[idx].get_num() * (flow_den / weighted[idx].get_den());

    const size_t flow_bits = mpz_sizeinbase(flow_den.get_mpz_t(), 2);
    const size_t mass_bits = mpz_sizeinbase(mass_den.get_mpz_t(), 2);

    ConductanceValue<Rat> out;
    out.t = t;
    uint32_t best_mask;
    mpz_class best_cut_z;
    uint64_t best_mass = 0;

    if (flow_bits + mass_bits + 8 <= 126) {
        std::vector<__int128> q128(q.size());
        for (size_t idx = 0; idx < q.size(); ++idx) {
            __int128 v = 0;
            // export limbs manually; entries are non-negative
            const mpz_class& z = q[idx];
            for (size_t limb = mpz_size(z.get_mpz_t()); limb-- > 0;)
                v = (v << 64) | static_cast<unsigned long long>(
                                    mpz_getlimbn(z.get_mpz_t(), limb));
            q128[idx] = v;
        }
        detail::AccI128 acc{n, &q128, &masses, mass_den_u};
        __int128 best_cut = 0;
        auto best = detail::gray_scan(n, acc, best_cut, best_mass);
        if (!best.found) throw TooLargeError("no admissible subset");
        best_mask = best.mask;
        // back to mpz for the exact ratio
        bool neg = best_cut < 0;
        unsigned __int128 mag = neg ? -best_cut : best_cut;
        mpz_import(best_cut_z.get_mpz_t(), 2, -1, 8, 0, 0, &mag);
        if (neg) best_cut_z = -best_cut_z;
    } else {
        detail::AccMpz acc{n, &q, &masses, mass_den_u};
        mpz_class best_cut = 0;
        auto best = detail::gray_scan(n, acc, best_cut, best_mass);
        if (!best.found) throw TooLargeError("no admissible subset");
        best_mask = best.mask;
        best_cut_z = best_cut;
    }

    // phi = (cut/flow_den) / (mass/mass_den)
    Rat phi(best_cut_z * mass_den, flow_den * mpz_class(static_cast<unsigned long>(best_mass)));
    phi.canonicalize();
    out.phi = phi;
    out.argmin_mask = best_mask;
    out.argmin_set = detail::mask_to_set(best_mask, n);
    return out;
}

// Double-precision enumeration, chunk-parallel over bitmask ranges with a
// deterministic min-reduction (chunk boundaries are fixed, results combined in
// chunk order). CURVMIX_THREADS caps the worker count.
inline ConductanceValue<double> conductance_from_rows(const std::vector<double>& pi,
                                                      const Mat<double>& rows, long t,
                                                      int enum_limit = kConductanceEnumLimit) {
    const int n = rows.rows();
    if (n <= 1) throw TooLargeError("conductance needs at least two states");
    if (n > std::min(enum_limit, kConductanceEnumLimit))
        throw TooLargeError("state count " + std::to_string(n) +
                            " exceeds the subset enumeration limit");
    std::vector<double> q(static_cast<size_t>(n) * n);
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y) q[static_cast<size_t>(x) * n + y] = pi[x] * rows(x, y);
    detail::AccDouble acc{n, &q, &pi};

    struct ChunkBest {
        bool found = false;
        uint32_t mask = 0;
        double cut = 0, mass = 0;
    };
    const int64_t total = (int64_t(1) << n) - 1;  // subset indices 1 .. 2^n-1
    const int64_t chunk = std::max<int64_t>(int64_t(1) << 18, (total + 63) / 64);
    std::vector<ChunkBest> bests(static_cast<size_t>((total + chunk - 1) / chunk));

    parallel_chunks(total, chunk, [&](int c, int64_t lo, int64_t hi) {
        // subset index range [lo+1, hi]; seed the Gray state at index lo
        uint32_t mask = static_cast<uint32_t>(lo ^ (lo >> 1));
        double cut = 0, mass = 0;
        for (int x = 0; x < n; ++x) {
            if (!(mask >> x & 1u)) continue;
            mass += pi[x];
            for (int y = 0; y < n; ++y)
                if (!(mask >> y & 1u)) cut += q[static_cast<size_t>(x) * n + y];
        }
        ChunkBest best;
        for (int64_t i = lo + 1; i <= hi; ++i) {
            const int b = std::countr_zero(static_cast<uint64_t>(i));
            const bool inserting = !(mask >> b & 1u);
            mask ^= (1u << b);
            acc.apply_flip(b, inserting, mask, cut, mass);
            if (!acc.is_admissible(mass)) continue;
            if (!best.found || acc.better(cut, mass, best.cut, best.mass) ||
                (acc.equal(cut, mass, best.cut, best.mass) && mask < best.mask)) {
                best = {true, mask, cut, mass};
            }
        }
        bests[c] = best;
    });

    ChunkBest overall;
    for (const ChunkBest& b : bests) {
        if (!b.found) continue;
        if (!overall.found || acc.better(b.cut, b.mass, overall.cut, overall.mass) ||
            (acc.equal(b.cut, b.mass, overall.cut, overall.mass) && b.mask < overall.mask))
            overall = b;
    }
    if (!overall.found) throw TooLargeError("no admissible subset");
    ConductanceValue<double> out;
    out.t = t;
    out.phi = overall.cut / overall.mass;
    out.argmin_mask = overall.mask;
    out.argmin_set = detail::mask_to_set(overall.mask, n);
    return out;
}

template <typename T>
ConductanceValue<T> conductance(const Chain<T>& chain, long t,
                                int enum_limit = kConductanceEnumLimit,
                                size_t bit_budget = kDefaultBitBudget) {
    if (t < 1) throw ParseError("conductance needs t >= 1");
    const int n = chain.size();
    const std::vector<T> pi = stationary(chain);
    Mat<T> rows(n, n, T(0));
    for (int x = 0; x < n; ++x) {
        std::vector<T> row = matrix_power_row(chain, x, t, bit_budget);
        for (int y = 0; y < n; ++y) rows(x, y) = row[y];
    }
    return conductance_from_rows(pi, rows, t, enum_limit);
}

// Sweep heuristic for chains beyond the enumeration limit: checks only the
// prefix cuts of one state ordering, so the result is an UPPER bound on Phi.
template <typename T>
ConductanceValue<T> conductance_upper_bound_sweep(const Chain<T>& chain, long t,
                                                  size_t bit_budget = kDefaultBitBudget) {
    const int n = chain.size();
    if (n <= 1) throw TooLargeError("conductance needs at least two states");
    const std::vector<T> pi = stationary(chain);
    Mat<T> rows(n, n, T(0));
    for (int x = 0; x < n; ++x) {
        std::vector<T> row = matrix_power_row(chain, x, t, bit_budget);
        for (int y = 0; y < n; ++y) rows(x, y) = row[y];
    }
    // order states by stationary mass (ascending, index tiebreak)
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return pi[a] < pi[b]; });

    ConductanceValue<T> out;
    out.t = t;
    out.upper_bound_only = true;
    bool found = false;
    T best_phi(0);
    std::vector<int> prefix;
    for (int len = 1; len < n; ++len) {
        prefix.push_back(order[len - 1]);
        T mass(0);
        for (int x : prefix) mass += pi[x];
        bool admissible;
        if constexpr (NumTraits<T>::exact)
            admissible = mass > T(0) && 2 * mass <= T(1);
        else
            admissible = mass > 0 && mass <= 0.5 + 1e-12;
        if (!admissible) continue;
        std::vector<char> inside(n, 0);
        for (int x : prefix) inside[x] = 1;
        T cut(0);
        for (int x : prefix)
            for (int y = 0; y < n; ++y)
                if (!inside[y]) cut += pi[x] * rows(x, y);
        T phi = cut / mass;
        if (!found || phi < best_phi) {
            found = true;
            best_phi = phi;
            out.argmin_set = prefix;
            std::sort(out.argmin_set.begin(), out.argmin_set.end());
        }
    }
    if (!found) throw TooLargeError("no admissible prefix cut");
    out.phi = best_phi;
    return out;
}

// =============================================================================
// Spectral profile (reversible chains)
// =============================================================================

struct SpectralProfile {
    std::vector<double> eigenvalues;  // descending; first is 1
    double lambda2 = 0;
    double t_rel = 0;  // 1/(1 - lambda2), carries ~1e-9 eigensolver error
};

template <typename T>
SpectralProfile spectral_profile(const Chain<T>& chain, const std::vector<T>& pi) {
    const int n = chain.size();
    if (n < 2) throw SizeError("spectral profile needs at least two states");
    if (!is_reversible(chain, pi))
        throw NotReversibleError("detailed balance fails; spectrum may be complex");

    // symmetrize: S = D^{1/2} P D^{-1/2}
    Eigen::MatrixXd S(n, n);
    std::vector<double> sqrt_pi(n);
    for (int i = 0; i < n; ++i) sqrt_pi[i] = std::sqrt(NumTraits<T>::to_double(pi[i]));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            S(i, j) = sqrt_pi[i] * NumTraits<T>::to_double(chain.at(i, j)) / sqrt_pi[j];

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (S + S.transpose()));
    if (solver.info() != Eigen::Success)
        throw NumericalFailure("symmetric eigensolver failed");

    SpectralProfile out;
    out.eigenvalues.resize(n);
    for (int i = 0; i < n; ++i) out.eigenvalues[i] = solver.eigenvalues()(n - 1 - i);
    out.lambda2 = out.eigenvalues[1];
    if (out.lambda2 >= 1.0 - 1e-14)
        throw NumericalFailure("spectral gap numerically zero");
    out.t_rel = 1.0 / (1.0 - out.lambda2);
    return out;
}

// =============================================================================
// Functional-inequality records
// =============================================================================

struct InequalityRecord {
    double lhs = 0;
    double rhs = 0;
    bool holds = false;
};

inline InequalityRecord make_record(double lhs, double rhs) {
    InequalityRecord r;
    r.lhs = lhs;
    r.rhs = rhs;
    r.holds = lhs <= rhs + 1e-9 * std::max(1.0, std::abs(rhs));
    return r;
}

// sum pi|f| <= (1/Phi(P^t)) sum pi(x) P^t(x,y) |f(y)-f(x)| for centered f.
// Observables are floats; pi and P^t may be exact and are demoted here.
inline InequalityRecord l1_cheeger_record(const std::vector<double>& pi,
                                          const Mat<double>& rows_pt, double phi_pt,
                                          const std::vector<double>& f) {
    const int n = static_cast<int>(pi.size());
    double mean = 0;
    for (int x = 0; x < n; ++x) mean += pi[x] * f[x];
    if (std::abs(mean) > 1e-9) throw NotCenteredError("observable is not centered");
    double lhs = 0, grad = 0;
    for (int x = 0; x < n; ++x) {
        lhs += pi[x] * std::abs(f[x]);
        for (int y = 0; y < n; ++y)
            if (rows_pt(x, y) > 0) grad += pi[x] * rows_pt(x, y) * std::abs(f[y] - f[x]);
    }
    return make_record(lhs, grad / phi_pt);
}

template <typename T>
InequalityRecord check_l1_cheeger(const Chain<T>& chain, long t, std::vector<double> f,
                                  int enum_limit = kConductanceEnumLimit) {
    const int n = chain.size();
    const std::vector<T> pi = stationary(chain);
    std::vector<double> pi_d(n);
    for (int i = 0; i < n; ++i) pi_d[i] = NumTraits<T>::to_double(pi[i]);
    double mean = 0;
    for (int i = 0; i < n; ++i) mean += pi_d[i] * f[i];
    for (int i = 0; i < n; ++i) f[i] -= mean;  // centering enforced

    Mat<double> rows(n, n, 0.0);
    for (int x = 0; x < n; ++x) {
        std::vector<T> row = matrix_power_row(chain, x, t);
        for (int y = 0; y < n; ++y) rows(x, y) = NumTraits<T>::to_double(row[y]);
    }
    auto phi = conductance(chain, t, enum_limit);
    return l1_cheeger_record(pi_d, rows, NumTraits<T>::to_double(phi.phi), f);
}

// pi(f >= pi f + a) <= (1/(a Phi)) min(max up-increment, max down-increment)
// over directed edges, plus the lower tail; lazy chains also satisfy the
// variant with 2 Phi (apply the bound to 2P - I).
struct ConcentrationRecord {
    InequalityRecord upper, lower;
    std::optional<InequalityRecord> upper_sharp, lower_sharp;
    double up_increment = 0, down_increment = 0;
};

inline ConcentrationRecord concentration_record(const std::vector<double>& pi,
                                                const std::vector<std::pair<int, int>>& edges,
                                                double phi, bool lazy,
                                                const std::vector<double>& f, double a) {
    const int n = static_cast<int>(pi.size());
    double mean = 0;
    for (int x = 0; x < n; ++x) mean += pi[x] * f[x];
    double up = 0, down = 0;
    for (auto [x, y] : edges) {
        up = std::max(up, f[y] - f[x]);
        down = std::max(down, f[x] - f[y]);
    }
    double upper_mass = 0, lower_mass = 0;
    for (int x = 0; x < n; ++x) {
        if (f[x] >= mean + a) upper_mass += pi[x];
        if (f[x] <= mean - a) lower_mass += pi[x];
    }
    ConcentrationRecord out;
    out.up_increment = up;
    out.down_increment = down;
    const double bound = std::min(up, down) / (a * phi);
    out.upper = make_record(upper_mass, bound);
    out.lower = make_record(lower_mass, bound);
    if (lazy) {
        out.upper_sharp = make_record(upper_mass, bound / 2);
        out.lower_sharp = make_record(lower_mass, bound / 2);
    }
    return out;
}

template <typename T>
ConcentrationRecord check_concentration(const Chain<T>& chain, const std::vector<double>& f,
                                        double a, int enum_limit = kConductanceEnumLimit) {
    if (!(a > 0)) throw ParseError("concentration level a must be positive");
    const int n = chain.size();
    const std::vector<T> pi = stationary(chain);
    std::vector<double> pi_d(n);
    for (int i = 0; i < n; ++i) pi_d[i] = NumTraits<T>::to_double(pi[i]);
    std::vector<std::pair<int, int>> edges;
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            if (x != y && chain.at(x, y) > T(0)) edges.push_back({x, y});
    auto phi = conductance(chain, 1, enum_limit);
    return concentration_record(pi_d, edges, NumTraits<T>::to_double(phi.phi),
                                chain.is_lazy(), f, a);
}

}  // namespace curvmix
