#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "sparseiter/errors.hpp"
#include "sparseiter/types.hpp"

namespace sparseiter {

/// Hard threshold: keep entries with |v_i| strictly above lam, zero the rest.
inline DenseVector hard_threshold(const DenseVector& v, double lam) {
    detail::require(lam >= 0.0, "hard_threshold: lam must be nonnegative");
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out[i] = (std::abs(v[i]) > lam) ? v[i] : 0.0;
    return DenseVector(std::move(out));
}

/// Soft threshold: shrink magnitudes by lam and clamp at zero, keeping sign.
inline DenseVector soft_threshold(const DenseVector& v, double lam) {
    detail::require(lam >= 0.0, "soft_threshold: lam must be nonnegative");
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        double m = std::abs(v[i]) - lam;
        out[i] = (m > 0.0) ? (v[i] < 0.0 ? -m : m) : 0.0;
    }
    return DenseVector(std::move(out));
}

/// Gradient move z = x + Phi^T (y - Phi x), the point fed to the threshold.
inline DenseVector landweber_step(const DenseMatrix& phi, const DenseVector& y,
                                  const DenseVector& x) {
    detail::require(y.size() == phi.rows(), "landweber_step: y has wrong dimension");
    detail::require(x.size() == phi.cols(), "landweber_step: x has wrong dimension");
    DenseVector r = y - phi.apply(x);
    DenseVector g = phi.apply_transpose(r);
    std::vector<double> z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] + g[i];
    return DenseVector(std::move(z));
}

/// Magnitude of the (k+1)-th largest coefficient of z; 0 when k >= dim(z).
inline double top_k_threshold_value(const DenseVector& z, std::size_t k) {
    if (k >= z.size()) return 0.0;
    std::vector<double> mags(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) mags[i] = std::abs(z[i]);
    // (k+1)-th largest == element at index k in descending order.
    std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(k), mags.end(),
                     std::greater<double>());
    return mags[k];
}

/// f_s = alpha^1 + ... + alpha^s + beta * alpha^{s+1}  (empty sum when s = 0).
inline double lemma_sequence(double alpha, double beta, std::size_t s) {
    detail::require(alpha > 0.0 && alpha < 1.0, "lemma_sequence: alpha must lie in (0,1)");
    detail::require(beta >= 0.0, "lemma_sequence: beta must be nonnegative");
    double sum = 0.0;
    double pow_a = 1.0;
    for (std::size_t i = 1; i <= s; ++i) {
        pow_a *= alpha;
        sum += pow_a;
    }
    return sum + beta * pow_a * alpha;
}

namespace detail {

inline bool is_symmetric(const DenseMatrix& a, double tol) {
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j)
            if (std::abs(a(i, j) - a(j, i)) > tol) return false;
    return true;
}

inline std::vector<double> sym_apply(const DenseMatrix& a, const std::vector<double>& v) {
    std::vector<double> out(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * v[j];
        out[i] = s;
    }
    return out;
}

inline double vec_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

} // namespace detail

/// Largest absolute eigenvalue of a symmetric matrix, by power iteration on
/// A^2 (sign-proof) from a deterministic start. Start vectors: normalized
/// all-ones, then an index ramp, then basis vectors, in case an earlier one
/// is annihilated by A^2.
inline double spectral_norm_symmetric(const DenseMatrix& a) {
    detail::require(a.rows() == a.cols(), "spectral_norm_symmetric: matrix must be square");
    detail::require(detail::is_symmetric(a, 1e-10),
                    "spectral_norm_symmetric: matrix must be symmetric");
    const std::size_t n = a.rows();

    double max_abs = 0.0;
    for (double x : a.entries()) max_abs = std::max(max_abs, std::abs(x));
    if (max_abs == 0.0) return 0.0;

    // Work on A / max|A| so A^2 cannot under- or overflow.
    DenseMatrix scaled(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) scaled(i, j) = a(i, j) / max_abs;

    constexpr std::size_t kMaxIters = 10000;
    constexpr double kRelTol = 1e-10;

    auto run = [&](std::vector<double> v) -> double {
        double nv = detail::vec_norm(v);
        if (nv == 0.0) return -1.0;
        for (double& x : v) x /= nv;
        for (std::size_t it = 0; it < kMaxIters; ++it) {
            std::vector<double> av = detail::sym_apply(scaled, v);
            std::vector<double> bv = detail::sym_apply(scaled, av); // A^2 v
            double lambda = 0.0;                                    // Rayleigh quotient of A^2
            for (std::size_t i = 0; i < n; ++i) lambda += v[i] * bv[i];
            double nb = detail::vec_norm(bv);
            if (nb == 0.0) return -1.0; // start was annihilated; try another
            // Eigen-residual bound: for symmetric B, ||Bv - lambda v|| small
            // puts lambda within that distance of a true eigenvalue.
            double resid2 = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double r = bv[i] - lambda * v[i];
                resid2 += r * r;
            }
            if (std::sqrt(resid2) <= kRelTol * lambda)
                return max_abs * std::sqrt(std::max(lambda, 0.0));
            for (std::size_t i = 0; i < n; ++i) v[i] = bv[i] / nb;
        }
        throw numerical_error("spectral_norm_symmetric: power iteration did not converge");
    };

    std::vector<double> start(n, 1.0);
    double result = run(start);
    if (result >= 0.0) return result;

    for (std::size_t i = 0; i < n; ++i) start[i] = static_cast<double>(i + 1);
    result = run(start);
    if (result >= 0.0) return result;

    for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> e(n, 0.0);
        e[j] = 1.0;
        result = run(e);
        if (result >= 0.0) return result;
    }
    // Unreachable for nonzero symmetric A: some basis vector survives A^2.
    throw numerical_error("spectral_norm_symmetric: no admissible start vector");
}

namespace detail {

/// ||Phi||_2^2 (largest eigenvalue of Phi^T Phi) by power iteration on the
/// matvec pair v -> Phi^T (Phi v), deterministic all-ones start with the
/// same fallbacks as spectral_norm_symmetric.
inline double operator_norm_squared(const DenseMatrix& phi) {
    const std::size_t N = phi.cols();
    double max_abs = 0.0;
    for (double x : phi.entries()) max_abs = std::max(max_abs, std::abs(x));
    if (max_abs == 0.0) return 0.0;

    constexpr std::size_t kMaxIters = 10000;
    constexpr double kRelTol = 1e-10;

    auto run = [&](DenseVector v) -> double {
        double nv = v.norm2();
        if (nv == 0.0) return -1.0;
        std::vector<double> vv(v.values());
        for (double& x : vv) x /= nv;
        DenseVector vcur{std::move(vv)};
        for (std::size_t it = 0; it < kMaxIters; ++it) {
            DenseVector w = phi.apply_transpose(phi.apply(vcur));
            double lambda = 0.0;
            for (std::size_t i = 0; i < N; ++i) lambda += vcur[i] * w[i];
            double nw = w.norm2();
            if (nw == 0.0) return -1.0;
            double resid2 = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                double r = w[i] - lambda * vcur[i];
                resid2 += r * r;
            }
            if (std::sqrt(resid2) <= kRelTol * lambda) return std::max(lambda, 0.0);
            std::vector<double> next(N);
            for (std::size_t i = 0; i < N; ++i) next[i] = w[i] / nw;
            vcur = DenseVector(std::move(next));
        }
        throw numerical_error("operator_norm_squared: power iteration did not converge");
    };

    double result = run(DenseVector(std::vector<double>(N, 1.0)));
    if (result >= 0.0) return result;
    std::vector<double> ramp(N);
    for (std::size_t i = 0; i < N; ++i) ramp[i] = static_cast<double>(i + 1);
    result = run(DenseVector(std::move(ramp)));
    if (result >= 0.0) return result;
    for (std::size_t j = 0; j < N; ++j) {
        std::vector<double> e(N, 0.0);
        e[j] = 1.0;
        result = run(DenseVector(std::move(e)));
        if (result >= 0.0) return result;
    }
    throw numerical_error("operator_norm_squared: no admissible start vector");
}

/// ||I - Phi_L^T Phi_L||_{2,2} for the columns of phi indexed by L.
inline double gram_deviation(const DenseMatrix& phi, std::span<const std::size_t> L) {
    const std::size_t m = L.size();
    require(m >= 1, "gram deviation: support must be nonempty");
    DenseMatrix dev(m, m);
    for (std::size_t a_i = 0; a_i < m; ++a_i) {
        for (std::size_t b_i = a_i; b_i < m; ++b_i) {
            double g = phi.column_dot(L[a_i], L[b_i]);
            double v = (a_i == b_i ? 1.0 - g : -g);
            dev(a_i, b_i) = v;
            dev(b_i, a_i) = v;
        }
    }
    return spectral_norm_symmetric(dev);
}

} // namespace detail

} // namespace sparseiter
