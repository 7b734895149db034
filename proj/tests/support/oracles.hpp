#pragma once

// Independent oracles for the test suite. These deliberately use different
// machinery from the library (Eigen's dense solvers, closed-form roots,
// exhaustive enumeration) so that each check runs over two disjoint routes.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "sparseiter/dictionaries.hpp"
#include "sparseiter/types.hpp"

namespace oracles {

inline Eigen::MatrixXd to_eigen(const sparseiter::DenseMatrix& m) {
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
    return out;
}

inline Eigen::VectorXd to_eigen(const sparseiter::DenseVector& v) {
    Eigen::VectorXd out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out(i) = v[i];
    return out;
}

/// Largest |eigenvalue| of a symmetric matrix via Eigen's dense eigensolver.
inline double eigen_spectral_norm(const sparseiter::DenseMatrix& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(m));
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Eigenvalues of a symmetric 3x3 via the closed-form (trigonometric) cubic
/// solve; returns the largest absolute value.
inline double cubic_spectral_norm_3x3(const sparseiter::DenseMatrix& a) {
    const double p1 = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
    const double q = (a(0, 0) + a(1, 1) + a(2, 2)) / 3.0;
    const double p2 = (a(0, 0) - q) * (a(0, 0) - q) + (a(1, 1) - q) * (a(1, 1) - q) +
                      (a(2, 2) - q) * (a(2, 2) - q) + 2.0 * p1;
    if (p2 == 0.0) return std::abs(q); // scalar multiple of identity
    const double p = std::sqrt(p2 / 6.0);
    // B = (A - q I) / p; r = det(B) / 2 lies in [-1, 1] for symmetric A.
    double b00 = (a(0, 0) - q) / p, b11 = (a(1, 1) - q) / p, b22 = (a(2, 2) - q) / p;
    double b01 = a(0, 1) / p, b02 = a(0, 2) / p, b12 = a(1, 2) / p;
    double detb = b00 * (b11 * b22 - b12 * b12) - b01 * (b01 * b22 - b12 * b02) +
                  b02 * (b01 * b12 - b11 * b02);
    double r = detb / 2.0;
    r = std::clamp(r, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double e1 = q + 2.0 * p * std::cos(phi);
    const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * 3.14159265358979323846 / 3.0);
    const double e2 = 3.0 * q - e1 - e3;
    return std::max({std::abs(e1), std::abs(e2), std::abs(e3)});
}

/// Least-squares residual of y against the columns of d indexed by support.
inline double support_residual(const sparseiter::Dictionary& d, const sparseiter::DenseVector& y,
                               const std::vector<std::size_t>& support) {
    Eigen::MatrixXd cols(d.rows(), support.size());
    for (std::size_t c = 0; c < support.size(); ++c)
        for (std::size_t i = 0; i < d.rows(); ++i) cols(i, c) = d.matrix(i, support[c]);
    Eigen::VectorXd ye = to_eigen(y);
    Eigen::VectorXd a = cols.colPivHouseholderQr().solve(ye);
    return (ye - cols * a).norm();
}

/// Exhaustive minimum-residual support of size k (first minimizer in
/// lexicographic order). Residuals are evaluated through the precomputed
/// Gram matrix: ||y - Phi_S a||^2 = y'y - 2 a'b_S + a' G_S a. Only sensible
/// at micro scale.
inline std::vector<std::size_t> best_support(const sparseiter::Dictionary& d,
                                             const sparseiter::DenseVector& y, std::size_t k) {
    const std::size_t N = d.cols();
    Eigen::MatrixXd phi = to_eigen(d.matrix);
    Eigen::MatrixXd G = phi.transpose() * phi;
    Eigen::VectorXd b = phi.transpose() * to_eigen(y);
    const double yty = to_eigen(y).squaredNorm();

    std::vector<std::size_t> comb(k);
    for (std::size_t i = 0; i < k; ++i) comb[i] = i;
    std::vector<std::size_t> best;
    double best_res = std::numeric_limits<double>::infinity();
    Eigen::MatrixXd Gs(k, k);
    Eigen::VectorXd bs(k);
    for (;;) {
        for (std::size_t i = 0; i < k; ++i) {
            bs(static_cast<Eigen::Index>(i)) = b(static_cast<Eigen::Index>(comb[i]));
            for (std::size_t j = 0; j < k; ++j)
                Gs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    G(static_cast<Eigen::Index>(comb[i]), static_cast<Eigen::Index>(comb[j]));
        }
        Eigen::VectorXd a = Gs.ldlt().solve(bs);
        double res = yty - 2.0 * a.dot(bs) + a.dot(Gs * a);
        if (res < best_res) {
            best_res = res;
            best = comb;
        }
        std::ptrdiff_t i = static_cast<std::ptrdiff_t>(k) - 1;
        while (i >= 0 && comb[i] == static_cast<std::size_t>(i) + N - k) --i;
        if (i < 0) return best;
        ++comb[i];
        for (std::size_t j = static_cast<std::size_t>(i) + 1; j < k; ++j) comb[j] = comb[j - 1] + 1;
    }
}

} // namespace oracles
