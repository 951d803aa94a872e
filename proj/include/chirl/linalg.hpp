#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace chirl {

using numvec = std::vector<double>;

/// Dense row-major matrix. Small helper used for features, Q-tables and
/// network weights; not meant to compete with a real linear algebra library.
class Matrix {
public:
    Matrix() : rows_(0), cols_(0) {}
    Matrix(int rows, int cols, double fill = 0.0) : rows_(rows), cols_(cols) {
        if (rows < 0 || cols < 0) throw std::invalid_argument("Matrix: negative shape");
        data_.assign(static_cast<size_t>(rows) * cols, fill);
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }

    double* row_ptr(int r) { return data_.data() + static_cast<size_t>(r) * cols_; }
    const double* row_ptr(int r) const { return data_.data() + static_cast<size_t>(r) * cols_; }

    numvec row(int r) const {
        return numvec(row_ptr(r), row_ptr(r) + cols_);
    }

    numvec& data() { return data_; }
    const numvec& data() const { return data_; }

    bool operator==(const Matrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

private:
    int rows_, cols_;
    numvec data_;
};

inline bool all_finite(const numvec& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

inline double max_abs_diff(const numvec& a, const numvec& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline double l1_norm(const numvec& v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
}

inline double l2_norm_sq(const numvec& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

inline double dot(const numvec& a, const numvec& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// log(sum_i exp(x_i)) with the usual max shift so large inputs do not overflow.
inline double logsumexp(const double* x, int n) {
    double m = x[0];
    for (int i = 1; i < n; ++i) m = std::max(m, x[i]);
    if (!std::isfinite(m)) return m;  // all -inf stays -inf
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::exp(x[i] - m);
    return m + std::log(s);
}

inline double logsumexp(const numvec& x) { return logsumexp(x.data(), static_cast<int>(x.size())); }

}  // namespace chirl
