#pragma once

#include <algorithm>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "curvmix/matrix.hpp"
#include "curvmix/numeric.hpp"

namespace curvmix {

// =============================================================================
// Chain
// =============================================================================
//
// A finite irreducible stochastic matrix. T is Rat (exact mode) or double
// (float mode, row sums within 1e-12). Validation happens once at build; all
// downstream code may assume the invariants.

template <typename T>
class Chain {
  public:
    static Chain build(Mat<T> P, std::vector<std::string> labels = {}) {
        const int n = P.rows();
        if (n <= 0 || P.cols() != n) throw ParseError("transition matrix must be square");
        for (int i = 0; i < n; ++i) {
            T row_sum(0);
            for (int j = 0; j < n; ++j) {
                if (P(i, j) < T(0))
                    throw NegativeEntryError("negative entry at (" + std::to_string(i) +
                                             "," + std::to_string(j) + ")");
                row_sum += P(i, j);
            }
            if constexpr (NumTraits<T>::exact) {
                if (row_sum != T(1))
                    throw RowSumError("row " + std::to_string(i) + " sums to " +
                                      ratio_string(row_sum));
            } else {
                if (std::abs(row_sum - 1.0) > 1e-12)
                    throw RowSumError("row " + std::to_string(i) + " sums to " +
                                      decimal_string(row_sum, 17));
            }
        }
        if (!strongly_connected(P))
            throw ReducibleError("support digraph is not strongly connected");
        if (!labels.empty() && static_cast<int>(labels.size()) != n)
            throw ParseError("label count does not match state count");
        return Chain(std::move(P), std::move(labels));
    }

    int size() const { return P_.rows(); }
    const Mat<T>& matrix() const { return P_; }
    const T& at(int i, int j) const { return P_(i, j); }
    const std::vector<std::string>& labels() const { return labels_; }

    bool is_lazy() const {
        for (int i = 0; i < size(); ++i)
            if (P_(i, i) < half()) return false;
        return true;
    }

    // smallest strictly positive entry
    T p_min() const {
        std::optional<T> best;
        for (int i = 0; i < size(); ++i)
            for (int j = 0; j < size(); ++j) {
                const T& v = P_(i, j);
                if (v > T(0) && (!best || v < *best)) best = v;
            }
        return *best;  // a stochastic matrix has at least one positive entry
    }

  private:
    explicit Chain(Mat<T> P, std::vector<std::string> labels)
        : P_(std::move(P)), labels_(std::move(labels)) {}

    static T half() {
        if constexpr (NumTraits<T>::exact)
            return rat_of(1, 2);
        else
            return 0.5;
    }

    static bool strongly_connected(const Mat<T>& P) {
        const int n = P.rows();
        auto reach = [&](bool transpose) {
            std::vector<char> seen(n, 0);
            std::deque<int> queue{0};
            seen[0] = 1;
            int count = 1;
            while (!queue.empty()) {
                int u = queue.front();
                queue.pop_front();
                for (int v = 0; v < n; ++v) {
                    const T& p = transpose ? P(v, u) : P(u, v);
                    if (u != v && p > T(0) && !seen[v]) {
                        seen[v] = 1;
                        ++count;
                        queue.push_back(v);
                    }
                }
            }
            return count == n;
        };
        return reach(false) && reach(true);
    }

    Mat<T> P_;
    std::vector<std::string> labels_;
};

// =============================================================================
// Directed metric
// =============================================================================
//
// dist(x,y) = fewest transitions from x to y along the support digraph.
// Finite everywhere by irreducibility; satisfies the triangle inequality but
// not symmetry.

class DirectedMetric {
  public:
    DirectedMetric() = default;
    DirectedMetric(int n, std::vector<int> d) : n_(n), d_(std::move(d)) {
        diam_ = 0;
        for (int v : d_) diam_ = std::max(diam_, v);
    }

    int size() const { return n_; }
    int operator()(int x, int y) const { return d_[static_cast<size_t>(x) * n_ + y]; }
    int diam() const { return diam_; }

  private:
    int n_ = 0;
    std::vector<int> d_;
    int diam_ = 0;
};

template <typename T>
DirectedMetric directed_metric(const Chain<T>& chain) {
    const int n = chain.size();
    std::vector<std::vector<int>> out_arcs(n);
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            if (x != y && chain.at(x, y) > T(0)) out_arcs[x].push_back(y);

    std::vector<int> d(static_cast<size_t>(n) * n, -1);
    for (int src = 0; src < n; ++src) {
        d[static_cast<size_t>(src) * n + src] = 0;
        std::deque<int> queue{src};
        while (!queue.empty()) {
            int u = queue.front();
            queue.pop_front();
            for (int v : out_arcs[u]) {
                if (d[static_cast<size_t>(src) * n + v] < 0) {
                    d[static_cast<size_t>(src) * n + v] =
                        d[static_cast<size_t>(src) * n + u] + 1;
                    queue.push_back(v);
                }
            }
        }
    }
    return DirectedMetric(n, std::move(d));
}

// =============================================================================
// Stationary distribution
// =============================================================================
//
// Kernel of (P^T - I) via Gaussian elimination; the kernel is one-dimensional
// for irreducible chains, so back-substitution with the free variable pinned
// to 1 and normalization by the sum yields pi. Exact in rational mode, checked
// to residual 1e-12 in float mode.

template <typename T>
std::vector<T> stationary(const Chain<T>& chain) {
    const int n = chain.size();
    if (n == 1) return {T(1)};

    Mat<T> M(n, n, T(0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) M(i, j) = chain.at(j, i) - (i == j ? T(1) : T(0));

    std::vector<int> pivot_col_of_row;
    std::vector<char> col_is_pivot(n, 0);
    int row = 0;
    for (int col = 0; col < n && row < n; ++col) {
        int sel = -1;
        if constexpr (NumTraits<T>::exact) {
            for (int r = row; r < n; ++r)
                if (M(r, col) != T(0)) {
                    sel = r;
                    break;
                }
        } else {
            double best = 0;
            for (int r = row; r < n; ++r)
                if (std::abs(M(r, col)) > best) {
                    best = std::abs(M(r, col));
                    sel = r;
                }
            if (sel >= 0 && best < 1e-13) sel = -1;  // treat as numerically zero
        }
        if (sel < 0) continue;
        for (int j = 0; j < n; ++j) std::swap(M(sel, j), M(row, j));
        for (int r = 0; r < n; ++r) {
            if (r == row || M(r, col) == T(0)) continue;
            T factor = M(r, col) / M(row, col);
            for (int j = col; j < n; ++j) M(r, j) -= factor * M(row, j);
            M(r, col) = T(0);
        }
        pivot_col_of_row.push_back(col);
        col_is_pivot[col] = 1;
        ++row;
    }
    if (row != n - 1) throw NumericalFailure("stationary solve: unexpected rank");

    int free_col = 0;
    while (col_is_pivot[free_col]) ++free_col;

    std::vector<T> pi(n, T(0));
    pi[free_col] = T(1);
    for (int r = row - 1; r >= 0; --r) {
        int pc = pivot_col_of_row[r];
        pi[pc] = -M(r, free_col) / M(r, pc);
    }

    T total(0);
    for (const T& v : pi) total += v;
    if (NumTraits<T>::is_zero(total)) throw NumericalFailure("stationary solve: zero sum");
    for (T& v : pi) v = v / total;

    // post hoc: pi P = pi, entries positive
    std::vector<T> piP = vec_mat(pi, chain.matrix());
    for (int i = 0; i < n; ++i) {
        if constexpr (NumTraits<T>::exact) {
            if (piP[i] != pi[i]) throw NumericalFailure("stationary solve: pi P != pi");
            if (pi[i] <= T(0)) throw NumericalFailure("stationary solve: nonpositive mass");
        } else {
            if (std::abs(piP[i] - pi[i]) > 1e-12)
                throw NumericalFailure("stationary solve: residual above 1e-12");
            if (pi[i] <= 0) throw NumericalFailure("stationary solve: nonpositive mass");
        }
    }
    return pi;
}

template <typename T>
bool is_reversible(const Chain<T>& chain, const std::vector<T>& pi) {
    const int n = chain.size();
    for (int x = 0; x < n; ++x)
        for (int y = x + 1; y < n; ++y) {
            T a = pi[x] * chain.at(x, y);
            T b = pi[y] * chain.at(y, x);
            if constexpr (NumTraits<T>::exact) {
                if (a != b) return false;
            } else {
                if (std::abs(a - b) > 1e-12) return false;
            }
        }
    return true;
}

// =============================================================================
// Matrix powers
// =============================================================================

inline constexpr size_t kDefaultBitBudget = 4096;

// Row x of P^t by repeated vector-matrix products. Exact in rational mode;
// throws OverflowError once any denominator exceeds the bit budget so the
// caller can fall back to float.
template <typename T>
std::vector<T> matrix_power_row(const Chain<T>& chain, int x, long t,
                                size_t bit_budget = kDefaultBitBudget) {
    const int n = chain.size();
    if (t < 0) throw ParseError("negative step count");
    std::vector<T> row(n, T(0));
    row[x] = T(1);
    for (long s = 0; s < t; ++s) {
        row = vec_mat(row, chain.matrix());
        if constexpr (NumTraits<T>::exact) {
            for (const T& v : row)
                if (denominator_bits(v) > bit_budget)
                    throw OverflowError("denominator exceeds bit budget at t=" +
                                        std::to_string(s + 1));
        }
    }
    return row;
}

// Iterates all rows of P^t for t = 0,1,2,... In exact mode the sweep degrades
// to double arithmetic once any denominator crosses the bit budget; the switch
// step is recorded and exposed to callers so comparisons past it can widen.
class PowerSweep {
  public:
    PowerSweep(const Chain<Rat>& chain, size_t bit_budget = kDefaultBitBudget)
        : chain_(&chain), bit_budget_(bit_budget) {
        const int n = chain.size();
        exact_ = Mat<Rat>(n, n, Rat(0));
        for (int i = 0; i < n; ++i) exact_(i, i) = Rat(1);
    }

    long t() const { return t_; }
    bool exact() const { return !switched_; }
    std::optional<long> switch_t() const {
        return switched_ ? std::optional<long>(switch_t_) : std::nullopt;
    }

    const Mat<Rat>& exact_rows() const { return exact_; }
    const Mat<double>& float_rows() const { return approx_; }

    // advance to P^{t+1}
    void step() {
        const int n = chain_->size();
        if (!switched_) {
            Mat<Rat> next;
            mat_mul(exact_, chain_->matrix(), next);
            bool over = false;
            for (const Rat& v : next.data())
                if (denominator_bits(v) > bit_budget_) {
                    over = true;
                    break;
                }
            if (!over) {
                exact_ = std::move(next);
                ++t_;
                return;
            }
            // degrade: convert the state *before* the step, then step in double
            switched_ = true;
            switch_t_ = t_ + 1;
            approx_ = Mat<double>(n, n, 0.0);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) approx_(i, j) = exact_(i, j).get_d();
            exact_ = Mat<Rat>();
            pfloat_ = Mat<double>(n, n, 0.0);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) pfloat_(i, j) = chain_->at(i, j).get_d();
        }
        Mat<double> next;
        mat_mul(approx_, pfloat_, next);
        approx_ = std::move(next);
        ++t_;
    }

  private:
    const Chain<Rat>* chain_;
    size_t bit_budget_;
    long t_ = 0;
    bool switched_ = false;
    long switch_t_ = 0;
    Mat<Rat> exact_;
    Mat<double> approx_;
    Mat<double> pfloat_;
};

// =============================================================================
// Lazification
// =============================================================================

template <typename T>
Chain<T> lazify(const Chain<T>& chain) {
    const int n = chain.size();
    Mat<T> Q(n, n, T(0));
    T half;
    if constexpr (NumTraits<T>::exact)
        half = rat_of(1, 2);
    else
        half = 0.5;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Q(i, j) = chain.at(i, j) * half;
            if (i == j) Q(i, j) += half;
        }
    return Chain<T>::build(std::move(Q), chain.labels());
}

}  // namespace curvmix
