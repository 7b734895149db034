#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sparseiter/errors.hpp"

namespace sparseiter {

namespace detail {

inline void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

inline void require_finite(const std::vector<double>& v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x))
            throw std::invalid_argument(std::string(what) + ": entries must be finite");
}

} // namespace detail

/// Dense real vector. Entries are finite; length is fixed at construction.
class DenseVector {
public:
    DenseVector() = default;

    explicit DenseVector(std::vector<double> values) : v_(std::move(values)) {
        detail::require_finite(v_, "DenseVector");
    }

    DenseVector(std::initializer_list<double> values)
        : DenseVector(std::vector<double>(values)) {}

    static DenseVector zeros(std::size_t n) { return DenseVector(std::vector<double>(n, 0.0)); }

    std::size_t size() const noexcept { return v_.size(); }
    double operator[](std::size_t i) const { return v_[i]; }
    double& operator[](std::size_t i) { return v_[i]; }

    const std::vector<double>& values() const noexcept { return v_; }

    auto begin() const noexcept { return v_.begin(); }
    auto end() const noexcept { return v_.end(); }

    double norm2() const {
        double s = 0.0;
        for (double x : v_) s += x * x;
        return std::sqrt(s);
    }

    double norm1() const {
        double s = 0.0;
        for (double x : v_) s += std::abs(x);
        return s;
    }

    double norm_inf() const {
        double m = 0.0;
        for (double x : v_) m = std::max(m, std::abs(x));
        return m;
    }

    friend bool operator==(const DenseVector& a, const DenseVector& b) { return a.v_ == b.v_; }

private:
    std::vector<double> v_;
};

inline DenseVector operator-(const DenseVector& a, const DenseVector& b) {
    detail::require(a.size() == b.size(), "vector difference: size mismatch");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return DenseVector(std::move(out));
}

/// Dense real matrix, row-major. n >= 1 rows, N >= 1 columns, finite entries.
class DenseMatrix {
public:
    DenseMatrix() : rows_(0), cols_(0) {}

    DenseMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), a_(rows * cols, 0.0) {
        detail::require(rows >= 1 && cols >= 1, "DenseMatrix: dimensions must be >= 1");
    }

    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
        : rows_(rows), cols_(cols), a_(std::move(entries)) {
        detail::require(rows >= 1 && cols >= 1, "DenseMatrix: dimensions must be >= 1");
        detail::require(a_.size() == rows * cols, "DenseMatrix: entry count mismatch");
        detail::require_finite(a_, "DenseMatrix");
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }

    const std::vector<double>& entries() const noexcept { return a_; }

    /// y = A x
    DenseVector apply(const DenseVector& x) const {
        detail::require(x.size() == cols_, "matrix apply: dimension mismatch");
        std::vector<double> y(rows_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i) {
            double s = 0.0;
            const double* row = a_.data() + i * cols_;
            for (std::size_t j = 0; j < cols_; ++j) s += row[j] * x[j];
            y[i] = s;
        }
        return DenseVector(std::move(y));
    }

    /// y = A^T x
    DenseVector apply_transpose(const DenseVector& x) const {
        detail::require(x.size() == rows_, "matrix apply_transpose: dimension mismatch");
        std::vector<double> y(cols_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i) {
            const double xi = x[i];
            const double* row = a_.data() + i * cols_;
            for (std::size_t j = 0; j < cols_; ++j) y[j] += row[j] * xi;
        }
        return DenseVector(std::move(y));
    }

    double column_dot(std::size_t j1, std::size_t j2) const {
        double s = 0.0;
        for (std::size_t i = 0; i < rows_; ++i) s += (*this)(i, j1) * (*this)(i, j2);
        return s;
    }

    DenseVector column(std::size_t j) const {
        std::vector<double> c(rows_);
        for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
        return DenseVector(std::move(c));
    }

    friend bool operator==(const DenseMatrix& a, const DenseMatrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.a_ == b.a_;
    }

private:
    std::size_t rows_, cols_;
    std::vector<double> a_;
};

/// Strictly increasing set of column indices.
class SupportSet {
public:
    SupportSet() = default;

    explicit SupportSet(std::vector<std::size_t> indices) : idx_(std::move(indices)) {
        for (std::size_t i = 1; i < idx_.size(); ++i)
            detail::require(idx_[i - 1] < idx_[i], "SupportSet: indices must be strictly increasing");
    }

    static SupportSet from_unsorted(std::vector<std::size_t> indices) {
        std::sort(indices.begin(), indices.end());
        return SupportSet(std::move(indices));
    }

    static SupportSet support_of(const DenseVector& x) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (x[i] != 0.0) idx.push_back(i);
        return SupportSet(std::move(idx));
    }

    std::size_t size() const noexcept { return idx_.size(); }
    bool empty() const noexcept { return idx_.empty(); }
    std::size_t operator[](std::size_t i) const { return idx_[i]; }

    bool contains(std::size_t j) const {
        return std::binary_search(idx_.begin(), idx_.end(), j);
    }

    SupportSet united(const SupportSet& other) const {
        std::vector<std::size_t> out;
        out.reserve(idx_.size() + other.idx_.size());
        std::set_union(idx_.begin(), idx_.end(), other.idx_.begin(), other.idx_.end(),
                       std::back_inserter(out));
        return SupportSet(std::move(out));
    }

    const std::vector<std::size_t>& indices() const noexcept { return idx_; }

    auto begin() const noexcept { return idx_.begin(); }
    auto end() const noexcept { return idx_.end(); }

    friend bool operator==(const SupportSet& a, const SupportSet& b) { return a.idx_ == b.idx_; }

private:
    std::vector<std::size_t> idx_;
};

} // namespace sparseiter
