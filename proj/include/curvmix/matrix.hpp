#pragma once

#include <cassert>
#include <vector>

namespace curvmix {

// Minimal dense row-major matrix. Square in almost all uses here.
template <typename T>
class Mat {
  public:
    Mat() = default;
    Mat(int rows, int cols, const T& fill = T())
        : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    T& operator()(int i, int j) { return data_[static_cast<size_t>(i) * cols_ + j]; }
    const T& operator()(int i, int j) const {
        return data_[static_cast<size_t>(i) * cols_ + j];
    }

    const std::vector<T>& data() const { return data_; }
    std::vector<T>& data() { return data_; }

    std::vector<T> row(int i) const {
        return std::vector<T>(data_.begin() + static_cast<size_t>(i) * cols_,
                              data_.begin() + static_cast<size_t>(i + 1) * cols_);
    }

    bool operator==(const Mat& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

  private:
    int rows_ = 0, cols_ = 0;
    std::vector<T> data_;
};

// dst = a * b, all square of the same size. Accumulates in place of dst.
template <typename T>
void mat_mul(const Mat<T>& a, const Mat<T>& b, Mat<T>& dst) {
    const int n = a.rows();
    assert(b.rows() == n && a.cols() == n);
    dst = Mat<T>(n, n, T(0));
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            const T& aik = a(i, k);
            if (aik == T(0)) continue;
            for (int j = 0; j < n; ++j) {
                if (b(k, j) == T(0)) continue;
                dst(i, j) += aik * b(k, j);
            }
        }
}

// row vector times matrix.
template <typename T>
std::vector<T> vec_mat(const std::vector<T>& v, const Mat<T>& m) {
    const int n = m.rows();
    std::vector<T> out(n, T(0));
    for (int i = 0; i < n; ++i) {
        if (v[i] == T(0)) continue;
        for (int j = 0; j < n; ++j) {
            if (m(i, j) == T(0)) continue;
            out[j] += v[i] * m(i, j);
        }
    }
    return out;
}

template <typename T>
T dot(const std::vector<T>& a, const std::vector<T>& b) {
    T s(0);
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace curvmix
