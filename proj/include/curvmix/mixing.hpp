#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <vector>

#include "curvmix/chain.hpp"
#include "curvmix/matrix.hpp"
#include "curvmix/numeric.hpp"

namespace curvmix {

// =============================================================================
// Total variation
// =============================================================================

template <typename T>
T tv_distance(const std::vector<T>& p, const std::vector<T>& q) {
    T acc(0);
    for (size_t i = 0; i < p.size(); ++i) {
        T d = p[i] - q[i];
        if (d < T(0)) d = -d;
        acc += d;
    }
    return acc / T(2);
}

// per-row TV distances to pi given the rows of P^t
template <typename T>
std::vector<T> row_tv_to_stationary(const Mat<T>& rows, const std::vector<T>& pi) {
    const int n = rows.rows();
    std::vector<T> out(n, T(0));
    for (int x = 0; x < n; ++x) {
        T acc(0);
        for (int y = 0; y < n; ++y) {
            T d = rows(x, y) - pi[y];
            if (d < T(0)) d = -d;
            acc += d;
        }
        out[x] = acc / T(2);
    }
    return out;
}

// =============================================================================
// Mixing profile
// =============================================================================
//
// d_tv(t)  = max_x |P^t(x,.) - pi|_tv          (worst case)
// d_tv#(t) = sum_x pi(x) |P^t(x,.) - pi|_tv    (stationary average)
// t_mix / t_mix# are the first times the curves drop to the threshold
// (1/4 unless overridden). The iteration stops there or at the horizon,
// whichever comes first; hitting the horizon sets the truncated flag.

struct MixingProfile {
    std::vector<Value> tv_curve;      // index t
    std::vector<Value> avg_tv_curve;  // index t
    std::optional<long> t_mix;
    std::optional<long> t_mix_sharp;
    long horizon = 0;
    bool truncated = false;
    std::optional<long> float_switch_t;  // exact sweep degraded at this step
};

inline long default_horizon(int diam, const Rat& p_min) {
    // 32 diam^2 / P_min, rounded up; comfortably past the curvature-based
    // mixing guarantees at desk scale
    Rat h = rat_of(32) * rat_of(diam) * rat_of(diam) / p_min;
    mpz_class q;
    mpz_cdiv_q(q.get_mpz_t(), h.get_num().get_mpz_t(), h.get_den().get_mpz_t());
    long v = mpz_get_si(q.get_mpz_t());
    return std::max(1L, v);
}

inline MixingProfile mixing_profile(const Chain<Rat>& chain, long horizon,
                                    const std::vector<Rat>& pi,
                                    size_t bit_budget = kDefaultBitBudget,
                                    const Rat& threshold = Rat(1, 4)) {
    if (horizon < 1) throw ParseError("horizon must be >= 1");
    MixingProfile out;
    out.horizon = horizon;
    std::vector<double> pi_d(pi.size());
    for (size_t i = 0; i < pi.size(); ++i) pi_d[i] = pi[i].get_d();

    PowerSweep sweep(chain, bit_budget);
    for (long t = 0; t <= horizon; ++t) {
        if (t > 0) sweep.step();
        Value worst, avg;
        if (sweep.exact()) {
            std::vector<Rat> tv = row_tv_to_stationary(sweep.exact_rows(), pi);
            Rat w(0), a(0);
            for (size_t x = 0; x < tv.size(); ++x) {
                if (tv[x] > w) w = tv[x];
                a += pi[x] * tv[x];
            }
            worst = Value(w);
            avg = Value(a);
        } else {
            std::vector<double> tv = row_tv_to_stationary(sweep.float_rows(), pi_d);
            double w = 0, a = 0;
            for (size_t x = 0; x < tv.size(); ++x) {
                w = std::max(w, tv[x]);
                a += pi_d[x] * tv[x];
            }
            worst = Value(w);
            avg = Value(a);
        }
        out.tv_curve.push_back(worst);
        out.avg_tv_curve.push_back(avg);
        if (!out.t_mix && dominates(worst, Value(threshold))) out.t_mix = t;
        if (!out.t_mix_sharp && dominates(avg, Value(threshold))) out.t_mix_sharp = t;
        if (out.t_mix && out.t_mix_sharp) break;
    }
    out.float_switch_t = sweep.switch_t();
    out.truncated = !(out.t_mix && out.t_mix_sharp);
    return out;
}

inline MixingProfile mixing_profile(const Chain<Rat>& chain, long horizon,
                                    size_t bit_budget = kDefaultBitBudget) {
    return mixing_profile(chain, horizon, stationary(chain), bit_budget);
}

// =============================================================================
// Displacement
// =============================================================================

struct DisplacementCurve {
    std::vector<Value> values;  // index t: E[dist(X_0, X_t)] under stationarity
    Value diam_sharp;           // sum pi(x) pi(y) dist(x,y)
};

template <typename T>
T effective_diameter(const std::vector<T>& pi, const DirectedMetric& metric) {
    const int n = metric.size();
    T acc(0);
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            if (metric(x, y) > 0) acc += pi[x] * pi[y] * T(metric(x, y));
    return acc;
}

// E[dist(X_0,X_t)] from the rows of P^t
template <typename T>
T mean_displacement(const std::vector<T>& pi, const Mat<T>& rows,
                    const DirectedMetric& metric) {
    const int n = metric.size();
    T acc(0);
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            if (metric(x, y) > 0 && rows(x, y) > T(0))
                acc += pi[x] * rows(x, y) * T(metric(x, y));
    return acc;
}

inline DisplacementCurve displacement_curve(const Chain<Rat>& chain,
                                            const DirectedMetric& metric, long horizon,
                                            size_t bit_budget = kDefaultBitBudget) {
    if (horizon < 0) throw ParseError("horizon must be >= 0");
    const std::vector<Rat> pi = stationary(chain);
    std::vector<double> pi_d(pi.size());
    for (size_t i = 0; i < pi.size(); ++i) pi_d[i] = pi[i].get_d();

    DisplacementCurve out;
    out.diam_sharp = Value(effective_diameter(pi, metric));
    PowerSweep sweep(chain, bit_budget);
    for (long t = 0; t <= horizon; ++t) {
        if (t > 0) sweep.step();
        if (sweep.exact())
            out.values.push_back(Value(mean_displacement(pi, sweep.exact_rows(), metric)));
        else
            out.values.push_back(Value(mean_displacement(pi_d, sweep.float_rows(), metric)));
    }
    return out;
}

// =============================================================================
// Transitivity
// =============================================================================
//
// P is transitive when every state can be mapped to every other by a
// kernel-preserving bijection. Exact backtracking search; the orbit of state 0
// under such bijections must be everything. Capped at n = 12; constructions
// that are transitive by design skip the generic search.

inline constexpr int kTransitivitySearchLimit = 12;

namespace detail {

template <typename T>
bool entries_equal(const T& a, const T& b) {
    if constexpr (NumTraits<T>::exact)
        return a == b;
    else
        return std::abs(a - b) <= 1e-12;
}

template <typename T>
bool extend_automorphism(const Chain<T>& chain, std::vector<int>& image,
                         std::vector<char>& used, int next) {
    const int n = chain.size();
    if (next == n) return true;
    for (int cand = 0; cand < n; ++cand) {
        if (used[cand]) continue;
        bool ok = true;
        for (int u = 0; u <= next && ok; ++u) {
            const int img_u = (u == next) ? cand : image[u];
            if (img_u < 0) continue;
            if (!entries_equal(chain.at(next, u), chain.at(cand, img_u)) ||
                !entries_equal(chain.at(u, next), chain.at(img_u, cand)))
                ok = false;
        }
        if (!ok) continue;
        image[next] = cand;
        used[cand] = 1;
        if (extend_automorphism(chain, image, used, next + 1)) return true;
        image[next] = -1;
        used[cand] = 0;
    }
    return false;
}

}  // namespace detail

template <typename T>
bool is_transitive(const Chain<T>& chain) {
    const int n = chain.size();
    if (n > kTransitivitySearchLimit)
        throw TooLargeError("generic transitivity search is capped at n = " +
                            std::to_string(kTransitivitySearchLimit));
    if (n == 1) return true;
    for (int target = 1; target < n; ++target) {
        std::vector<int> image(n, -1);
        std::vector<char> used(n, 0);
        image[0] = target;
        used[target] = 1;
        // image[0] fixed; consistency of pair (0,0) is plain entry equality
        if (!detail::entries_equal(chain.at(0, 0), chain.at(target, target))) return false;
        if (!detail::extend_automorphism(chain, image, used, 1)) return false;
    }
    return true;
}

}  // namespace curvmix
