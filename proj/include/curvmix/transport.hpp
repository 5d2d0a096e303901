#pragma once

#include <compare>
#include <optional>
#include <utility>
#include <vector>

#include "curvmix/chain.hpp"
#include "curvmix/matrix.hpp"
#include "curvmix/numeric.hpp"

namespace curvmix {

// =============================================================================
// Transportation simplex
// =============================================================================
//
// Exact primal simplex specialized to the transportation polytope, with
// Bland's rule on both the entering and the leaving arc. Costs are integers
// (metric distances) or lexicographic integer pairs, so pivot selection is
// exact in float mode too; only flows carry the scalar type T.

// Lexicographic cost pair: 'primary' is the transport distance, 'secondary'
// an infinitesimally weighted tiebreak objective. operator<=> gives the
// lexicographic order (primary first).
struct LexCost {
    long primary = 0;
    long secondary = 0;

    friend LexCost operator+(LexCost x, LexCost y) {
        return {x.primary + y.primary, x.secondary + y.secondary};
    }
    friend LexCost operator-(LexCost x, LexCost y) {
        return {x.primary - y.primary, x.secondary - y.secondary};
    }
    auto operator<=>(const LexCost&) const = default;
};

template <typename T, typename Cost>
class TransportationSimplex {
  public:
    TransportationSimplex(std::vector<T> supply, std::vector<T> demand, Mat<Cost> cost)
        : m_(static_cast<int>(supply.size())),
          k_(static_cast<int>(demand.size())),
          a_(std::move(supply)),
          b_(std::move(demand)),
          c_(std::move(cost)),
          flow_(m_, k_, T(0)),
          basic_(m_, k_, char(0)) {}

    void solve() {
        northwest_init();
        const long pivot_limit = 10000 + 100L * m_ * k_;
        for (pivots_ = 0;; ++pivots_) {
            if (pivots_ > pivot_limit)
                throw SolverStall("transportation simplex exceeded pivot limit");
            compute_potentials();
            int ei = -1, ej = -1;
            for (int i = 0; i < m_ && ei < 0; ++i)
                for (int j = 0; j < k_; ++j) {
                    if (basic_(i, j)) continue;
                    if (c_(i, j) - u_[i] - v_[j] < Cost{}) {
                        ei = i;
                        ej = j;
                        break;
                    }
                }
            if (ei < 0) break;
            pivot(ei, ej);
        }
    }

    const Mat<T>& flow() const { return flow_; }
    const std::vector<Cost>& row_potentials() const { return u_; }
    const std::vector<Cost>& col_potentials() const { return v_; }
    long pivots() const { return pivots_; }

  private:
    void northwest_init() {
        std::vector<T> a_rem = a_, b_rem = b_;
        int i = 0, j = 0;
        for (;;) {
            T f = std::min(a_rem[i], b_rem[j]);
            flow_(i, j) = f;
            basic_(i, j) = 1;
            a_rem[i] -= f;
            b_rem[j] -= f;
            if (i == m_ - 1 && j == k_ - 1) break;
            // staircase advance keeps exactly m+k-1 basic cells
            if (!(a_rem[i] > T(0)) && i < m_ - 1)
                ++i;
            else
                ++j;
        }
    }

    void compute_potentials() {
        // node ids: rows 0..m-1, cols m..m+k-1; basic arcs form a spanning tree
        const int nodes = m_ + k_;
        u_.assign(m_, Cost{});
        v_.assign(k_, Cost{});
        std::vector<char> seen(nodes, 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        int visited = 1;
        while (!stack.empty()) {
            int node = stack.back();
            stack.pop_back();
            if (node < m_) {
                for (int j = 0; j < k_; ++j)
                    if (basic_(node, j) && !seen[m_ + j]) {
                        v_[j] = c_(node, j) - u_[node];
                        seen[m_ + j] = 1;
                        ++visited;
                        stack.push_back(m_ + j);
                    }
            } else {
                int j = node - m_;
                for (int i = 0; i < m_; ++i)
                    if (basic_(i, j) && !seen[i]) {
                        u_[i] = c_(i, j) - v_[j];
                        seen[i] = 1;
                        ++visited;
                        stack.push_back(i);
                    }
            }
        }
        if (visited != nodes) throw SolverStall("basis lost spanning-tree structure");
    }

    void pivot(int ei, int ej) {
        // unique tree path from row node ei to col node m_+ej
        const int nodes = m_ + k_;
        std::vector<int> parent(nodes, -1);
        std::vector<char> seen(nodes, 0);
        std::vector<int> queue{ei};
        seen[ei] = 1;
        while (!queue.empty()) {
            std::vector<int> next;
            for (int node : queue) {
                if (node == m_ + ej) break;
                if (node < m_) {
                    for (int j = 0; j < k_; ++j)
                        if (basic_(node, j) && !seen[m_ + j]) {
                            seen[m_ + j] = 1;
                            parent[m_ + j] = node;
                            next.push_back(m_ + j);
                        }
                } else {
                    int j = node - m_;
                    for (int i = 0; i < m_; ++i)
                        if (basic_(i, j) && !seen[i]) {
                            seen[i] = 1;
                            parent[i] = node;
                            next.push_back(i);
                        }
                }
            }
            queue = std::move(next);
        }

        std::vector<int> path;  // nodes from m_+ej back to ei
        for (int node = m_ + ej; node != -1; node = parent[node]) path.push_back(node);

        // cycle arcs in order: entering, then path arcs; signs alternate +,-,+,...
        struct Arc {
            int i, j, sign;
        };
        std::vector<Arc> cycle{{ei, ej, +1}};
        for (size_t q = 0; q + 1 < path.size(); ++q) {
            int x = path[q], y = path[q + 1];
            int i = x < m_ ? x : y;
            int j = (x < m_ ? y : x) - m_;
            cycle.push_back({i, j, (q % 2 == 0) ? -1 : +1});
        }

        // ratio test over the -theta arcs, Bland tie-break by cell index
        int leave = -1;
        for (size_t q = 0; q < cycle.size(); ++q) {
            if (cycle[q].sign != -1) continue;
            if (leave < 0 || flow_(cycle[q].i, cycle[q].j) < flow_(cycle[leave].i, cycle[leave].j) ||
                (flow_(cycle[q].i, cycle[q].j) == flow_(cycle[leave].i, cycle[leave].j) &&
                 cycle[q].i * k_ + cycle[q].j < cycle[leave].i * k_ + cycle[leave].j))
                leave = static_cast<int>(q);
        }
        T theta = flow_(cycle[leave].i, cycle[leave].j);
        for (const Arc& arc : cycle) {
            if (arc.sign > 0)
                flow_(arc.i, arc.j) += theta;
            else
                flow_(arc.i, arc.j) -= theta;
        }
        basic_(cycle[leave].i, cycle[leave].j) = 0;
        flow_(cycle[leave].i, cycle[leave].j) = T(0);
        basic_(ei, ej) = 1;
    }

    int m_, k_;
    std::vector<T> a_, b_;
    Mat<Cost> c_;
    Mat<T> flow_;
    Mat<char> basic_;
    std::vector<Cost> u_, v_;
    long pivots_ = 0;
};

// =============================================================================
// W1 under the directed metric
// =============================================================================

template <typename T>
struct Coupling {
    Mat<T> chi;  // n x n joint distribution
    std::vector<T> source_marginal, target_marginal;
    T cost = T(0);
};

// Integer Kantorovich potential; f(y) - f(x) <= 1 on every directed edge.
struct DualCertificate {
    std::vector<long> f;
};

template <typename T>
struct W1Result {
    T cost = T(0);
    Coupling<T> coupling;
    DualCertificate dual;
};

namespace detail {

template <typename T>
std::vector<int> support(const std::vector<T>& mu) {
    std::vector<int> s;
    for (int i = 0; i < static_cast<int>(mu.size()); ++i)
        if (mu[i] > T(0)) s.push_back(i);
    return s;
}

template <typename T>
void check_probability_vector(const std::vector<T>& mu, int n) {
    if (static_cast<int>(mu.size()) != n) throw ParseError("marginal has wrong length");
    T total(0);
    for (const T& v : mu) {
        if (v < T(0)) throw NegativeEntryError("negative mass in marginal");
        total += v;
    }
    if constexpr (NumTraits<T>::exact) {
        if (total != T(1)) throw RowSumError("marginal does not sum to 1");
    } else {
        if (std::abs(total - 1.0) > 1e-9) throw RowSumError("marginal does not sum to 1");
    }
}

}  // namespace detail

template <typename T>
W1Result<T> w1(const DirectedMetric& metric, const std::vector<T>& mu,
               const std::vector<T>& nu) {
    const int n = metric.size();
    detail::check_probability_vector(mu, n);
    detail::check_probability_vector(nu, n);

    W1Result<T> out;
    out.coupling.chi = Mat<T>(n, n, T(0));
    out.coupling.source_marginal = mu;
    out.coupling.target_marginal = nu;
    out.dual.f.assign(n, 0);

    if (mu == nu) {  // identity coupling
        for (int i = 0; i < n; ++i) out.coupling.chi(i, i) = mu[i];
        out.cost = T(0);
        out.coupling.cost = T(0);
        return out;
    }

    const std::vector<int> src = detail::support(mu);
    const std::vector<int> dst = detail::support(nu);
    const int m = static_cast<int>(src.size()), k = static_cast<int>(dst.size());

    std::vector<T> supply(m), demand(k);
    for (int i = 0; i < m; ++i) supply[i] = mu[src[i]];
    for (int j = 0; j < k; ++j) demand[j] = nu[dst[j]];
    Mat<long> cost(m, k, 0);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < k; ++j) cost(i, j) = metric(src[i], dst[j]);

    TransportationSimplex<T, long> simplex(supply, demand, cost);
    simplex.solve();

    T total_cost(0);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < k; ++j) {
            const T& f = simplex.flow()(i, j);
            if (f > T(0)) {
                out.coupling.chi(src[i], dst[j]) = f;
                total_cost += f * T(cost(i, j));
            }
        }
    out.cost = total_cost;
    out.coupling.cost = total_cost;

    // potential on all of V: f(z) = min over sources of d(src_i, z) - u_i.
    // 1-Lipschitz by the triangle inequality; attains the transport cost.
    const std::vector<long>& u = simplex.row_potentials();
    for (int z = 0; z < n; ++z) {
        long best = metric(src[0], z) - u[0];
        for (int i = 1; i < m; ++i)
            best = std::min(best, static_cast<long>(metric(src[i], z)) - u[i]);
        out.dual.f[z] = best;
    }

    // dual feasibility and strong duality, verified post hoc
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            if (x != y && metric(x, y) == 1 && out.dual.f[y] - out.dual.f[x] > 1)
                throw SolverStall("dual certificate violates the Lipschitz constraint");
    T dual_value(0);
    for (int z = 0; z < n; ++z) dual_value += (nu[z] - mu[z]) * T(out.dual.f[z]);
    if constexpr (NumTraits<T>::exact) {
        if (dual_value != out.cost) throw SolverStall("strong duality gap is nonzero");
    } else {
        if (std::abs(dual_value - out.cost) > 1e-9)
            throw SolverStall("strong duality gap exceeds float tolerance");
    }
    return out;
}

// =============================================================================
// Curvature certification
// =============================================================================

enum class CurvatureVerdict { NonNegative, Negative, Indeterminate };

inline const char* verdict_name(CurvatureVerdict v) {
    switch (v) {
        case CurvatureVerdict::NonNegative: return "non-negative";
        case CurvatureVerdict::Negative: return "negative";
        default: return "indeterminate";
    }
}

template <typename T>
struct CurvatureCertificate {
    CurvatureVerdict verdict = CurvatureVerdict::NonNegative;
    // populated on a negative verdict: the first offending neighbor pair
    struct Witness {
        int x = 0, y = 0;
        T w1_value = T(0);
        DualCertificate dual;
    };
    std::optional<Witness> witness;
};

// Checks W(P(x,.),P(y,.)) <= 1 on every ordered pair with dist(x,y) = 1.
// Exact comparison in rational mode; float mode declares non-negative only
// when every W <= 1 + 1e-9, negative only when some W > 1 + 1e-6, and
// indeterminate in between.
template <typename T>
CurvatureCertificate<T> certify_curvature(const Chain<T>& chain,
                                          const DirectedMetric& metric) {
    const int n = chain.size();
    CurvatureCertificate<T> cert;
    bool saw_band = false;
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y) {
            if (x == y || metric(x, y) != 1) continue;
            auto res = w1(metric, chain.matrix().row(x), chain.matrix().row(y));
            bool bad;
            if constexpr (NumTraits<T>::exact) {
                bad = res.cost > T(1);
            } else {
                if (res.cost > 1.0 + 1e-9 && res.cost <= 1.0 + 1e-6) saw_band = true;
                bad = res.cost > 1.0 + 1e-6;
            }
            if (bad) {
                cert.verdict = CurvatureVerdict::Negative;
                cert.witness = {x, y, res.cost, res.dual};
                return cert;
            }
        }
    cert.verdict = saw_band ? CurvatureVerdict::Indeterminate : CurvatureVerdict::NonNegative;
    return cert;
}

// Full cross-validation over all ordered pairs: W(P(x,.),P(y,.)) <= dist(x,y).
// Implied by the neighbor check (convexity plus the triangle inequality), so a
// failure here indicates a solver bug rather than genuine curvature.
template <typename T>
bool curvature_full_pair_check(const Chain<T>& chain, const DirectedMetric& metric) {
    const int n = chain.size();
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y) {
            if (x == y) continue;
            auto res = w1(metric, chain.matrix().row(x), chain.matrix().row(y));
            if (!NumTraits<T>::le(res.cost, T(metric(x, y)))) return false;
        }
    return true;
}

// =============================================================================
// Good optimal couplings
// =============================================================================
//
// Two-stage optimization: minimize transport cost, then maximize the mass of
// the good set Gamma = {(u,v): dist(u,v) < dist(x,y)} over the optimal face.
// Realized as one simplex run with lexicographic costs (distance first, then
// -1 on Gamma cells); vertices of the optimal face are vertices of the
// transportation polytope, so the lexicographic optimum solves the
// constrained second stage exactly.

template <typename T>
struct GoodCoupling {
    Coupling<T> coupling;
    T gamma_mass = T(0);  // chi(Gamma)
    bool lazy_hypothesis = false;
};

template <typename T>
GoodCoupling<T> good_optimal_coupling(const Chain<T>& chain, const DirectedMetric& metric,
                                      int x, int y) {
    if (x == y) throw HypothesisError("good coupling requires x != y");
    const int n = chain.size();
    const int dxy = metric(x, y);
    const std::vector<T> mu = chain.matrix().row(x);
    const std::vector<T> nu = chain.matrix().row(y);

    const std::vector<int> src = detail::support(mu);
    const std::vector<int> dst = detail::support(nu);
    const int m = static_cast<int>(src.size()), k = static_cast<int>(dst.size());

    std::vector<T> supply(m), demand(k);
    for (int i = 0; i < m; ++i) supply[i] = mu[src[i]];
    for (int j = 0; j < k; ++j) demand[j] = nu[dst[j]];
    Mat<LexCost> cost(m, k);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < k; ++j) {
            int d = metric(src[i], dst[j]);
            cost(i, j) = LexCost{d, d < dxy ? -1 : 0};
        }

    TransportationSimplex<T, LexCost> simplex(supply, demand, cost);
    simplex.solve();

    GoodCoupling<T> out;
    out.lazy_hypothesis = chain.is_lazy();
    out.coupling.chi = Mat<T>(n, n, T(0));
    out.coupling.source_marginal = mu;
    out.coupling.target_marginal = nu;
    T total_cost(0), gamma(0);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < k; ++j) {
            const T& f = simplex.flow()(i, j);
            if (f > T(0)) {
                out.coupling.chi(src[i], dst[j]) = f;
                total_cost += f * T(cost(i, j).primary);
                if (cost(i, j).secondary < 0) gamma += f;
            }
        }
    out.coupling.cost = total_cost;
    out.gamma_mass = gamma;
    return out;
}

// =============================================================================
// Coupling kernel on V x V
// =============================================================================
//
// Off-diagonal rows hold the good optimal coupling of P(x,.) and P(y,.);
// diagonal rows couple P(x,.) with itself identically, so merged trajectories
// never split.

template <typename T>
struct CouplingKernel {
    int n = 0;
    // row (x,y) -> sparse list of ((u,v), weight)
    std::vector<std::vector<std::pair<std::pair<int, int>, T>>> rows;

    const std::vector<std::pair<std::pair<int, int>, T>>& row(int x, int y) const {
        return rows[static_cast<size_t>(x) * n + y];
    }

    // one kernel step applied to a distribution on V x V
    std::vector<T> evolve(const std::vector<T>& dist) const {
        std::vector<T> out(static_cast<size_t>(n) * n, T(0));
        for (int x = 0; x < n; ++x)
            for (int y = 0; y < n; ++y) {
                const T& mass = dist[static_cast<size_t>(x) * n + y];
                if (!(mass > T(0))) continue;
                for (const auto& [uv, w] : row(x, y))
                    out[static_cast<size_t>(uv.first) * n + uv.second] += mass * w;
            }
        return out;
    }
};

template <typename T>
CouplingKernel<T> coupling_kernel(const Chain<T>& chain, const DirectedMetric& metric) {
    const int n = chain.size();
    CouplingKernel<T> kernel;
    kernel.n = n;
    kernel.rows.resize(static_cast<size_t>(n) * n);
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y) {
            auto& row = kernel.rows[static_cast<size_t>(x) * n + y];
            if (x == y) {
                for (int u = 0; u < n; ++u)
                    if (chain.at(x, u) > T(0)) row.push_back({{u, u}, chain.at(x, u)});
            } else {
                auto good = good_optimal_coupling(chain, metric, x, y);
                for (int u = 0; u < n; ++u)
                    for (int v = 0; v < n; ++v)
                        if (good.coupling.chi(u, v) > T(0))
                            row.push_back({{u, v}, good.coupling.chi(u, v)});
            }
        }
    return kernel;
}

}  // namespace curvmix
