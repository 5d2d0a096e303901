#pragma once

// Brute-force oracles for the unit and acceptance suites. Nothing here shares
// code with the library's solver path: W1 is recomputed from the dual side by
// integer potential enumeration and from the primal side by spanning-tree
// vertex enumeration, and conductance by a direct per-subset double sum.

#include <algorithm>
#include <optional>
#include <vector>

#include "curvmix/chain.hpp"
#include "curvmix/matrix.hpp"
#include "curvmix/numeric.hpp"
#include "curvmix/rng.hpp"

namespace curvmix::testing {

// --- random instances --------------------------------------------------------

// strongly connected digraph: a random permutation cycle plus extra arcs
inline DirectedMetric random_metric(int n, Rng& rng) {
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    for (int i = n - 1; i > 0; --i)
        std::swap(order[i], order[rng.below(static_cast<uint64_t>(i + 1))]);

    std::vector<char> adj(static_cast<size_t>(n) * n, 0);
    for (int i = 0; i < n; ++i) adj[static_cast<size_t>(order[i]) * n + order[(i + 1) % n]] = 1;
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            if (x != y && rng.below(3) == 0) adj[static_cast<size_t>(x) * n + y] = 1;

    // BFS distances
    std::vector<int> d(static_cast<size_t>(n) * n, -1);
    for (int src = 0; src < n; ++src) {
        d[static_cast<size_t>(src) * n + src] = 0;
        std::vector<int> frontier{src};
        while (!frontier.empty()) {
            std::vector<int> next;
            for (int u : frontier)
                for (int v = 0; v < n; ++v)
                    if (adj[static_cast<size_t>(u) * n + v] &&
                        d[static_cast<size_t>(src) * n + v] < 0) {
                        d[static_cast<size_t>(src) * n + v] =
                            d[static_cast<size_t>(src) * n + u] + 1;
                        next.push_back(v);
                    }
            frontier = std::move(next);
        }
    }
    return DirectedMetric(n, std::move(d));
}

// rational distribution with small denominators; zero entries allowed
inline std::vector<Rat> random_distribution(int n, Rng& rng) {
    std::vector<long> weights(n, 0);
    long total = 0;
    while (total == 0) {
        for (int i = 0; i < n; ++i) {
            weights[i] = static_cast<long>(rng.below(9));
            total += weights[i];
        }
    }
    std::vector<Rat> mu(n);
    for (int i = 0; i < n; ++i) mu[i] = rat_of(weights[i], total);
    return mu;
}

// --- dual oracle: integer Kantorovich potentials ------------------------------
//
// The feasible set {f : f(y)-f(x) <= d(x,y), f(0)=0} is a bounded polytope cut
// out by difference constraints with integer right-hand sides, so its vertices
// are integer points with |f(z)| <= diam. Enumerating all integer points in
// the box and keeping the feasible ones therefore covers every vertex, and the
// maximum of nu f - mu f over them is exactly W1.

namespace detail {

inline void enumerate_potentials(const DirectedMetric& metric, const std::vector<Rat>& mu,
                                 const std::vector<Rat>& nu, std::vector<long>& f, int next,
                                 Rat& best) {
    const int n = metric.size();
    if (next == n) {
        Rat obj(0);
        for (int z = 0; z < n; ++z) obj += (nu[z] - mu[z]) * Rat(f[z]);
        if (obj > best) best = obj;
        return;
    }
    for (long v = -metric(next, 0); v <= metric(0, next); ++v) {
        bool ok = true;
        for (int u = 0; u < next && ok; ++u) {
            if (v - f[u] > metric(u, next)) ok = false;
            if (f[u] - v > metric(next, u)) ok = false;
        }
        if (!ok) continue;
        f[next] = v;
        enumerate_potentials(metric, mu, nu, f, next + 1, best);
    }
}

}  // namespace detail

inline Rat dual_oracle_w1(const DirectedMetric& metric, const std::vector<Rat>& mu,
                          const std::vector<Rat>& nu) {
    const int n = metric.size();
    std::vector<long> f(n, 0);
    Rat best(0);  // f = 0 is feasible, so W1 >= 0 is always attained
    detail::enumerate_potentials(metric, mu, nu, f, 1, best);
    return best;
}

// --- primal oracle: spanning-tree vertex enumeration --------------------------
//
// Vertices of the transportation polytope are the basic solutions whose
// support is a spanning tree of the bipartite support graph. This enumerates
// every (m+k-1)-subset of arcs, keeps the spanning trees whose tree solve is
// non-negative, and scans all resulting vertices. Feasible only for small
// supports; returns nullopt above 4x4.

struct VertexScan {
    Rat min_cost;            // W1
    Rat max_gamma_at_min;    // max chi(Gamma) among minimum-cost vertices
    bool found = false;
};

inline std::optional<VertexScan> vertex_oracle(const DirectedMetric& metric,
                                               const std::vector<Rat>& mu,
                                               const std::vector<Rat>& nu,
                                               std::optional<int> gamma_threshold) {
    std::vector<int> src, dst;
    const int n = metric.size();
    for (int i = 0; i < n; ++i) {
        if (mu[i] > Rat(0)) src.push_back(i);
        if (nu[i] > Rat(0)) dst.push_back(i);
    }
    const int m = static_cast<int>(src.size()), k = static_cast<int>(dst.size());
    if (m > 4 || k > 4) return std::nullopt;

    const int arcs = m * k;
    const int tree_arcs = m + k - 1;
    std::vector<int> pick(tree_arcs);
    VertexScan scan;

    // iterate over all arc subsets of size m+k-1
    for (long mask = 0; mask < (1L << arcs); ++mask) {
        if (__builtin_popcountll(static_cast<unsigned long long>(mask)) != tree_arcs) continue;

        // acyclicity + connectivity via union-find over m+k nodes
        std::vector<int> parent(m + k);
        for (int i = 0; i < m + k; ++i) parent[i] = i;
        auto find = [&](int v) {
            while (parent[v] != v) v = parent[v] = parent[parent[v]];
            return v;
        };
        bool tree = true;
        for (int a = 0; a < arcs && tree; ++a) {
            if (!(mask >> a & 1)) continue;
            int i = a / k, j = m + a % k;
            int ri = find(i), rj = find(j);
            if (ri == rj)
                tree = false;
            else
                parent[ri] = rj;
        }
        if (!tree) continue;

        // tree solve by repeated leaf elimination
        std::vector<Rat> rem_supply, rem_demand;
        for (int i = 0; i < m; ++i) rem_supply.push_back(mu[src[i]]);
        for (int j = 0; j < k; ++j) rem_demand.push_back(nu[dst[j]]);
        std::vector<char> used(arcs, 0);
        std::vector<Rat> flow(arcs, Rat(0));
        for (int a = 0; a < arcs; ++a) used[a] = (mask >> a & 1) != 0;
        bool feasible = true;
        for (int round = 0; round < tree_arcs && feasible; ++round) {
            // find a node with exactly one live incident arc
            int leaf_arc = -1;
            for (int i = 0; i < m && leaf_arc < 0; ++i) {
                int count = 0, last = -1;
                for (int j = 0; j < k; ++j)
                    if (used[i * k + j]) {
                        ++count;
                        last = i * k + j;
                    }
                if (count == 1) leaf_arc = last;
            }
            for (int j = 0; j < k && leaf_arc < 0; ++j) {
                int count = 0, last = -1;
                for (int i = 0; i < m; ++i)
                    if (used[i * k + j]) {
                        ++count;
                        last = i * k + j;
                    }
                if (count == 1) leaf_arc = last;
            }
            if (leaf_arc < 0) {
                feasible = false;
                break;
            }
            const int i = leaf_arc / k, j = leaf_arc % k;
            // the leaf side determines the flow
            int live_i = 0, live_j = 0;
            for (int jj = 0; jj < k; ++jj) live_i += used[i * k + jj];
            for (int ii = 0; ii < m; ++ii) live_j += used[ii * k + j];
            Rat f = (live_i == 1) ? rem_supply[i] : rem_demand[j];
            if (f < Rat(0)) {
                feasible = false;
                break;
            }
            flow[leaf_arc] = f;
            rem_supply[i] -= f;
            rem_demand[j] -= f;
            used[leaf_arc] = 0;
            if (rem_supply[i] < Rat(0) || rem_demand[j] < Rat(0)) feasible = false;
        }
        if (!feasible) continue;

        Rat cost(0), gamma(0);
        for (int a = 0; a < arcs; ++a) {
            if (!(mask >> a & 1) || flow[a] == Rat(0)) continue;
            const int d = metric(src[a / k], dst[a % k]);
            cost += flow[a] * Rat(d);
            if (gamma_threshold && d < *gamma_threshold) gamma += flow[a];
        }
        if (!scan.found || cost < scan.min_cost) {
            scan.found = true;
            scan.min_cost = cost;
            scan.max_gamma_at_min = gamma;
        } else if (cost == scan.min_cost && gamma > scan.max_gamma_at_min) {
            scan.max_gamma_at_min = gamma;
        }
    }
    if (!scan.found) return std::nullopt;
    return scan;
}

// --- conductance: direct per-subset double sum --------------------------------

inline Rat bruteforce_conductance(const std::vector<Rat>& pi, const Mat<Rat>& rows) {
    const int n = rows.rows();
    bool found = false;
    Rat best;
    for (uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
        Rat mass(0);
        for (int x = 0; x < n; ++x)
            if (mask >> x & 1u) mass += pi[x];
        if (!(mass > Rat(0)) || 2 * mass > Rat(1)) continue;
        Rat cut(0);
        for (int x = 0; x < n; ++x) {
            if (!(mask >> x & 1u)) continue;
            for (int y = 0; y < n; ++y)
                if (!(mask >> y & 1u)) cut += pi[x] * rows(x, y);
        }
        Rat ratio = cut / mass;
        if (!found || ratio < best) {
            found = true;
            best = ratio;
        }
    }
    return best;
}

}  // namespace curvmix::testing
