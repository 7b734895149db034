#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "sparseiter/core.hpp"
#include "sparseiter/rng.hpp"
#include "sparseiter/types.hpp"

namespace sparseiter {

/// Exact maximum of |<phi_i, phi_j>| over all distinct column pairs.
inline double coherence(const DenseMatrix& m) {
    detail::require(m.cols() >= 2, "coherence: need at least two columns");
    double mu = 0.0;
    for (std::size_t i = 0; i + 1 < m.cols(); ++i)
        for (std::size_t j = i + 1; j < m.cols(); ++j)
            mu = std::max(mu, std::abs(m.column_dot(i, j)));
    return mu;
}

/// Measurement matrix with unit-norm columns and cached coherence.
struct Dictionary {
    DenseMatrix matrix;
    double mu = 0.0;
    std::string label;

    std::size_t rows() const noexcept { return matrix.rows(); }
    std::size_t cols() const noexcept { return matrix.cols(); }
};

/// Wrap a matrix as a Dictionary, checking column normalization and caching mu.
inline Dictionary make_dictionary(DenseMatrix m, std::string label,
                                  double norm_tol = 1e-9) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
        double norm = std::sqrt(m.column_dot(j, j));
        detail::require(std::abs(norm - 1.0) <= norm_tol,
                        "Dictionary: columns must have unit l2 norm");
    }
    double mu = m.cols() >= 2 ? coherence(m) : 0.0;
    return Dictionary{std::move(m), mu, std::move(label)};
}

/// i.i.d. standard normal entries (row-major fill order), columns scaled to
/// unit l2 norm. Identical (n, N, seed) reproduce identical matrices.
inline Dictionary gen_gaussian(std::size_t n, std::size_t N, std::uint64_t seed) {
    detail::require(n >= 1, "gen_gaussian: n must be >= 1");
    detail::require(n <= N, "gen_gaussian: need n <= N");
    Rng rng(seed);
    DenseMatrix m(n, N);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < N; ++j) m(i, j) = rng.normal();
    for (std::size_t j = 0; j < N; ++j) {
        double norm = std::sqrt(m.column_dot(j, j));
        for (std::size_t i = 0; i < n; ++i) m(i, j) /= norm;
    }
    return make_dictionary(std::move(m), "gaussian");
}

namespace detail {

inline bool is_power_of_two(std::size_t n) { return n >= 1 && (n & (n - 1)) == 0; }

} // namespace detail

/// [I | H_n/sqrt(n)]: identity basis next to the Sylvester-Hadamard basis.
/// N = 2n, coherence exactly 1/sqrt(n).
inline Dictionary gen_identity_plus_hadamard(std::size_t n) {
    detail::require(detail::is_power_of_two(n),
                    "gen_identity_plus_hadamard: n must be a power of 2");
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    DenseMatrix m(n, 2 * n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    // Sylvester recursion: H(i,j) = (-1)^{popcount(i & j)}.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            int bits = std::popcount(i & j);
            m(i, n + j) = (bits & 1) ? -scale : scale;
        }
    return make_dictionary(std::move(m), "id_hadamard");
}

/// n = N identity matrix; mu = 0. Degenerate orthonormal ensemble for tests.
inline Dictionary gen_identity(std::size_t n) {
    detail::require(n >= 2, "gen_identity: n must be >= 2");
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return make_dictionary(std::move(m), "identity");
}

struct SignalEntry {
    std::size_t index;
    double value;

    friend bool operator==(const SignalEntry& a, const SignalEntry& b) {
        return a.index == b.index && a.value == b.value;
    }
};

/// Ground-truth sparse vector as (index, value) pairs, sorted by descending
/// magnitude (ties by ascending index). Values are nonzero, indices distinct.
struct SparseSignal {
    std::size_t dim = 0;
    std::vector<SignalEntry> entries;

    std::size_t k() const noexcept { return entries.size(); }

    DenseVector to_dense() const {
        std::vector<double> x(dim, 0.0);
        for (const auto& e : entries) x[e.index] = e.value;
        return DenseVector(std::move(x));
    }

    SupportSet support() const {
        std::vector<std::size_t> idx;
        idx.reserve(entries.size());
        for (const auto& e : entries) idx.push_back(e.index);
        return SupportSet::from_unsorted(std::move(idx));
    }

    /// Magnitude of the smallest (k-th) entry.
    double min_magnitude() const {
        return entries.empty() ? 0.0 : std::abs(entries.back().value);
    }

    friend bool operator==(const SparseSignal& a, const SparseSignal& b) {
        return a.dim == b.dim && a.entries == b.entries;
    }
};

inline SparseSignal make_sparse_signal(std::size_t dim, std::vector<SignalEntry> entries) {
    std::vector<bool> seen(dim, false);
    for (const auto& e : entries) {
        detail::require(e.index < dim, "SparseSignal: index out of range");
        detail::require(e.value != 0.0, "SparseSignal: values must be nonzero");
        detail::require(!seen[e.index], "SparseSignal: duplicate index");
        seen[e.index] = true;
    }
    std::stable_sort(entries.begin(), entries.end(), [](const SignalEntry& a, const SignalEntry& b) {
        double ma = std::abs(a.value), mb = std::abs(b.value);
        if (ma != mb) return ma > mb;
        return a.index < b.index;
    });
    return SparseSignal{dim, std::move(entries)};
}

/// k distinct uniform indices; magnitudes form a geometric sequence with
/// consecutive ratio magnitude_ratio (largest first, smallest 1) and uniform
/// random signs. Deterministic given (N, k, magnitude_ratio, seed).
inline SparseSignal gen_signal(std::size_t N, std::size_t k, double magnitude_ratio,
                               std::uint64_t seed) {
    detail::require(k >= 1 && k <= N, "gen_signal: need 1 <= k <= N");
    detail::require(magnitude_ratio >= 1.0, "gen_signal: magnitude_ratio must be >= 1");
    Rng rng(seed);

    // Partial Fisher-Yates over [0, N).
    std::vector<std::size_t> pool(N);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.below(N - i));
        std::swap(pool[i], pool[j]);
    }

    // Powers of the ratio built by repeated multiplication from 1, so the
    // consecutive-ratio invariant holds bit-exactly whenever the products do.
    std::vector<double> mag(k);
    mag[k - 1] = 1.0;
    for (std::size_t i = k - 1; i-- > 0;) mag[i] = mag[i + 1] * magnitude_ratio;

    std::vector<SignalEntry> entries(k);
    for (std::size_t i = 0; i < k; ++i)
        entries[i] = SignalEntry{pool[i], rng.sign() * mag[i]};
    return make_sparse_signal(N, std::move(entries));
}

} // namespace sparseiter
