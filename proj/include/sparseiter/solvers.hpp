#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "sparseiter/core.hpp"
#include "sparseiter/dictionaries.hpp"
#include "sparseiter/errors.hpp"
#include "sparseiter/types.hpp"

namespace sparseiter {

struct SolverConfig {
    std::size_t max_iters = 1000;
    double conv_tol = 1e-12; // on the l2 step size ||x^{t+1} - x^t||
    bool record_gamma = false;
    std::size_t k = 0; // sparsity for the top-k policies

    void validate() const {
        detail::require(max_iters >= 1, "SolverConfig: max_iters must be >= 1");
        detail::require(conv_tol > 0.0, "SolverConfig: conv_tol must be positive");
    }
};

enum class ThresholdMode { hard, soft };
enum class SolveStatus { converged, max_iters_reached };

/// One trace row, indexed by the 1-based count t of threshold applications.
///
/// Conventions (fixed across all solvers):
///   lambda        threshold applied to produce x^t
///   active        supp(x^t)
///   err_l2        ||x^t - x_o||_2
///   err_zmax      max_j |z^t(j) - x_o(j)| with z^t = x^t + Phi^T(y - Phi x^t),
///                 i.e. the gradient point computed FROM x^t (the input to
///                 step t+1, and the quantity the detection/decay analysis
///                 bounds)
///   gamma         ||I - Phi_L^T Phi_L||_{2,2} over
///                 L = supp(x^{t-1}) u supp(x^t) u supp(x_o), the contraction
///                 factor governing the update that produced x^t
///
/// err_xmax_active, residual_inner_max and objective are in-memory
/// instrumentation only; the trace CSV keeps its fixed eight columns.
struct IterationStep {
    std::size_t iter = 0;
    double lambda = 0.0;
    SupportSet active;
    std::size_t support_size = 0;
    std::optional<std::size_t> detected;
    std::optional<double> err_l2;
    std::optional<double> err_zmax;
    bool support_changed = false;
    std::optional<double> gamma;

    std::optional<double> err_xmax_active;   // max_{i in I^t} |x^t(i) - x_o(i)|
    std::optional<double> residual_inner_max; // OMP: max_{j in I^t} |<phi_j, r^t>|
    std::optional<double> objective;          // fixed-lambda IST: ||y-Phi x||^2 + 2 lambda ||x||_1
};

struct SolveResult {
    DenseVector x_hat;
    SolveStatus status = SolveStatus::max_iters_reached;
    std::vector<IterationStep> trace;
    std::size_t iterations_run = 0;
};

namespace detail {

/// Keep exactly min(k, dim) largest-magnitude entries of z (ties broken by
/// lowest index), zero the rest.
inline DenseVector top_k_select(const DenseVector& z, std::size_t k) {
    const std::size_t n = z.size();
    if (k >= n) return z;
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        double ma = std::abs(z[a]), mb = std::abs(z[b]);
        if (ma != mb) return ma > mb;
        return a < b;
    });
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < k; ++i) out[order[i]] = z[order[i]];
    return DenseVector(std::move(out));
}

inline std::size_t count_detected(const SupportSet& active, const SupportSet& truth) {
    std::size_t c = 0;
    for (std::size_t j : truth)
        if (active.contains(j)) ++c;
    return c;
}

struct LoopPolicy {
    // Threshold for step t (1-based), given the point about to be thresholded.
    std::function<double(std::size_t, const DenseVector&)> next_lambda;
    // Thresholded iterate from the previous iterate x, its gradient point z
    // and the threshold. Most policies use z alone.
    std::function<DenseVector(const DenseVector&, const DenseVector&, double)> apply;
    // Whether the step-size stop is admissible at step t.
    std::function<bool(std::size_t)> can_stop = [](std::size_t) { return true; };
    // Set to record the P1 objective per step (fixed-lambda solves).
    std::optional<double> objective_lambda;
};

inline SolveResult threshold_loop(const Dictionary& d, const DenseVector& y,
                                  const SolverConfig& cfg, const SparseSignal* truth,
                                  const LoopPolicy& policy) {
    cfg.validate();
    detail::require(y.size() == d.rows(), "solve: y has wrong dimension");
    const DenseMatrix& phi = d.matrix;
    const std::size_t N = d.cols();

    std::optional<DenseVector> x_o;
    SupportSet truth_support;
    if (truth) {
        detail::require(truth->dim == N, "solve: truth has wrong dimension");
        x_o = truth->to_dense();
        truth_support = truth->support();
    }

    SolveResult res;
    DenseVector x = DenseVector::zeros(N);
    DenseVector z = phi.apply_transpose(y); // gradient point from x^0 = 0
    SupportSet prev_support;

    for (std::size_t t = 1; t <= cfg.max_iters; ++t) {
        const double lambda = policy.next_lambda(t, z);
        DenseVector x_new = policy.apply(x, z, lambda);

        double step = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            double dxi = x_new[i] - x[i];
            step += dxi * dxi;
        }
        step = std::sqrt(step);

        // Residual and gradient point from the new iterate.
        DenseVector r = y - phi.apply(x_new);
        DenseVector g = phi.apply_transpose(r);
        std::vector<double> z_next(N);
        for (std::size_t i = 0; i < N; ++i) z_next[i] = x_new[i] + g[i];
        DenseVector z_new(std::move(z_next));

        IterationStep row;
        row.iter = t;
        row.lambda = lambda;
        row.active = SupportSet::support_of(x_new);
        row.support_size = row.active.size();
        row.support_changed = !(row.active == prev_support);
        if (x_o) {
            double el2 = 0.0, ezmax = 0.0, exact = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                double dx = x_new[i] - (*x_o)[i];
                el2 += dx * dx;
                ezmax = std::max(ezmax, std::abs(z_new[i] - (*x_o)[i]));
            }
            for (std::size_t i : row.active)
                exact = std::max(exact, std::abs(x_new[i] - (*x_o)[i]));
            row.err_l2 = std::sqrt(el2);
            row.err_zmax = ezmax;
            row.err_xmax_active = exact;
            row.detected = count_detected(row.active, truth_support);
            if (cfg.record_gamma) {
                SupportSet L = prev_support.united(row.active).united(truth_support);
                if (!L.empty()) row.gamma = gram_deviation(phi, L.indices());
            }
        }
        if (policy.objective_lambda) {
            double rr = 0.0;
            for (double v : r) rr += v * v;
            row.objective = rr + 2.0 * (*policy.objective_lambda) * x_new.norm1();
        }
        prev_support = row.active;
        res.trace.push_back(std::move(row));

        x = std::move(x_new);
        z = std::move(z_new);
        res.iterations_run = t;

        if (step < cfg.conv_tol && policy.can_stop(t)) {
            res.status = SolveStatus::converged;
            res.x_hat = std::move(x);
            return res;
        }
    }
    res.status = SolveStatus::max_iters_reached;
    res.x_hat = std::move(x);
    return res;
}

} // namespace detail

/// Iterative hard thresholding with the top-k policy. Keeps exactly the
/// cfg.k largest-magnitude entries of the gradient point each step (ties
/// broken by lowest index); the recorded lambda is the magnitude of the
/// (k+1)-th largest coefficient.
inline SolveResult iht_solve(const Dictionary& d, const DenseVector& y,
                             const SolverConfig& cfg, const SparseSignal* truth = nullptr) {
    detail::require(cfg.k >= 1, "iht_solve: cfg.k must be >= 1");
    detail::LoopPolicy policy;
    const std::size_t k = cfg.k;
    policy.next_lambda = [k](std::size_t, const DenseVector& z) {
        return top_k_threshold_value(z, k);
    };
    policy.apply = [k](const DenseVector&, const DenseVector& z, double) {
        return detail::top_k_select(z, k);
    };
    return detail::threshold_loop(d, y, cfg, truth, policy);
}

/// Iterative soft thresholding with the top-k policy: scalar shrinkage by
/// the magnitude of the (k+1)-th largest coefficient, so survivors shrink by
/// lambda_t and at most k entries stay nonzero.
inline SolveResult ist_solve(const Dictionary& d, const DenseVector& y,
                             const SolverConfig& cfg, const SparseSignal* truth = nullptr) {
    detail::require(cfg.k >= 1, "ist_solve: cfg.k must be >= 1");
    detail::LoopPolicy policy;
    const std::size_t k = cfg.k;
    policy.next_lambda = [k](std::size_t, const DenseVector& z) {
        return top_k_threshold_value(z, k);
    };
    policy.apply = [](const DenseVector&, const DenseVector& z, double lam) {
        return soft_threshold(z, lam);
    };
    return detail::threshold_loop(d, y, cfg, truth, policy);
}

/// Fixed-lambda iterative soft thresholding; approximately minimizes
/// ||y - Phi x||_2^2 + 2 lambda ||x||_1, with the objective recorded per step.
///
/// Inside the validity region of the fixed-threshold recursion
/// (||Phi||_2^2 < 2, necessary for ||Phi^T Phi - I||_{2,2} < 1) the literal
/// iterate x^{t+1} = soft(x^t + Phi^T(y - Phi x^t), lambda) is used. Outside
/// it that recursion diverges (I - Phi^T Phi has spectral norm >= 1 for every
/// fat matrix), so the update is damped by the constant c = 1 / ||Phi||_2^2:
/// x^{t+1} = soft(x^t + c Phi^T(y - Phi x^t), c lambda). The damped map has
/// exactly the P1(lambda) stationary points of the original objective and
/// descends monotonically. The recorded lambda is the applied threshold.
inline SolveResult ist_fixed(const Dictionary& d, const DenseVector& y, double lambda,
                             const SolverConfig& cfg, const SparseSignal* truth = nullptr) {
    detail::require(lambda > 0.0, "ist_fixed: lambda must be positive");
    double op2 = detail::operator_norm_squared(d.matrix);
    const double c = (op2 < 2.0) ? 1.0 : 1.0 / op2;
    detail::LoopPolicy policy;
    policy.next_lambda = [lambda, c](std::size_t, const DenseVector&) { return c * lambda; };
    policy.apply = [c](const DenseVector& x, const DenseVector& z, double lam) {
        if (c == 1.0) return soft_threshold(z, lam);
        std::vector<double> damped(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) damped[i] = x[i] + c * (z[i] - x[i]);
        return soft_threshold(DenseVector(std::move(damped)), lam);
    };
    policy.objective_lambda = lambda;
    return detail::threshold_loop(d, y, cfg, truth, policy);
}

/// Schedule-driven thresholding (hard or soft) with literal threshold
/// application. The schedule must be nonincreasing and positive; its last
/// value is reused when iterations exceed its length. The step-size stop is
/// honored only once the schedule is exhausted, so a decreasing schedule is
/// always played out.
inline SolveResult ita_schedule_solve(const Dictionary& d, const DenseVector& y,
                                      ThresholdMode mode, const std::vector<double>& schedule,
                                      const SolverConfig& cfg,
                                      const SparseSignal* truth = nullptr) {
    detail::require(!schedule.empty(), "ita_schedule_solve: schedule must be nonempty");
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        detail::require(schedule[i] > 0.0, "ita_schedule_solve: schedule values must be positive");
        if (i > 0)
            detail::require(schedule[i] <= schedule[i - 1],
                            "ita_schedule_solve: schedule must be nonincreasing");
    }
    detail::LoopPolicy policy;
    policy.next_lambda = [&schedule](std::size_t t, const DenseVector&) {
        return schedule[std::min(t - 1, schedule.size() - 1)];
    };
    if (mode == ThresholdMode::hard)
        policy.apply = [](const DenseVector&, const DenseVector& z, double lam) {
            return hard_threshold(z, lam);
        };
    else
        policy.apply = [](const DenseVector&, const DenseVector& z, double lam) {
            return soft_threshold(z, lam);
        };
    policy.can_stop = [len = schedule.size()](std::size_t t) { return t >= len; };
    return detail::threshold_loop(d, y, cfg, truth, policy);
}

namespace detail {

/// Solve the SPD system G a = b by Cholesky. Caller guarantees conditioning.
inline std::vector<double> cholesky_solve(const DenseMatrix& G, const std::vector<double>& b) {
    const std::size_t m = G.rows();
    DenseMatrix L(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = G(i, j);
            for (std::size_t p = 0; p < j; ++p) s -= L(i, p) * L(j, p);
            if (i == j) {
                if (s <= 0.0) throw numerical_error("cholesky_solve: matrix not positive definite");
                L(i, i) = std::sqrt(s);
            } else {
                L(i, j) = s / L(j, j);
            }
        }
    }
    std::vector<double> w(m);
    for (std::size_t i = 0; i < m; ++i) {
        double s = b[i];
        for (std::size_t p = 0; p < i; ++p) s -= L(i, p) * w[p];
        w[i] = s / L(i, i);
    }
    std::vector<double> a(m);
    for (std::size_t i = m; i-- > 0;) {
        double s = w[i];
        for (std::size_t p = i + 1; p < m; ++p) s -= L(p, i) * a[p];
        a[i] = s / L(i, i);
    }
    return a;
}

/// lambda_max / lambda_min of a symmetric PSD matrix via two power iterations.
inline double sym_condition_estimate(const DenseMatrix& G) {
    double lam_max = spectral_norm_symmetric(G);
    if (lam_max == 0.0) return std::numeric_limits<double>::infinity();
    const std::size_t m = G.rows();
    DenseMatrix shifted(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            shifted(i, j) = (i == j ? lam_max - G(i, j) : -G(i, j));
    double lam_min = lam_max - spectral_norm_symmetric(shifted);
    if (lam_min <= 0.0) return std::numeric_limits<double>::infinity();
    return lam_max / lam_min;
}

} // namespace detail

/// Orthogonal matching pursuit: k greedy steps, each adding the unselected
/// column of maximum absolute correlation with the residual (ties -> lowest
/// index) and re-solving least squares on the active set via the normal
/// equations. Stops early once ||r||_2 < cfg.conv_tol.
inline SolveResult omp_solve(const Dictionary& d, const DenseVector& y, std::size_t k,
                             const SolverConfig& cfg = SolverConfig{},
                             const SparseSignal* truth = nullptr) {
    cfg.validate();
    detail::require(k >= 1, "omp_solve: k must be >= 1");
    detail::require(k <= d.cols(), "omp_solve: k cannot exceed the number of columns");
    detail::require(y.size() == d.rows(), "omp_solve: y has wrong dimension");
    const DenseMatrix& phi = d.matrix;
    const std::size_t N = d.cols();

    std::optional<DenseVector> x_o;
    SupportSet truth_support;
    if (truth) {
        detail::require(truth->dim == N, "omp_solve: truth has wrong dimension");
        x_o = truth->to_dense();
        truth_support = truth->support();
    }

    SolveResult res;
    res.x_hat = DenseVector::zeros(N);
    DenseVector r = y;
    std::vector<bool> selected(N, false);
    std::vector<std::size_t> picked; // sorted rebuild per step
    SupportSet prev_support;

    for (std::size_t t = 1; t <= k; ++t) {
        DenseVector c = phi.apply_transpose(r);
        std::size_t best = N;
        double best_mag = -1.0;
        for (std::size_t j = 0; j < N; ++j) {
            if (selected[j]) continue;
            double m = std::abs(c[j]);
            if (m > best_mag) {
                best_mag = m;
                best = j;
            }
        }
        selected[best] = true;
        picked.push_back(best);
        std::vector<std::size_t> sorted = picked;
        std::sort(sorted.begin(), sorted.end());

        const std::size_t m = sorted.size();
        DenseMatrix G(m, m);
        std::vector<double> b(m);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = i; j < m; ++j) {
                double g = phi.column_dot(sorted[i], sorted[j]);
                G(i, j) = g;
                G(j, i) = g;
            }
            double s = 0.0;
            for (std::size_t row_i = 0; row_i < phi.rows(); ++row_i)
                s += phi(row_i, sorted[i]) * y[row_i];
            b[i] = s;
        }
        if (detail::sym_condition_estimate(G) > 1e12)
            throw numerical_error("omp_solve: restricted Gram matrix numerically singular");
        std::vector<double> coef = detail::cholesky_solve(G, b);

        DenseVector x = DenseVector::zeros(N);
        for (std::size_t i = 0; i < m; ++i) x[sorted[i]] = coef[i];
        r = y - phi.apply(x);
        DenseVector g_full = phi.apply_transpose(r);

        IterationStep row;
        row.iter = t;
        row.lambda = best_mag; // selection correlation magnitude
        row.active = SupportSet(sorted);
        row.support_size = m;
        row.support_changed = !(row.active == prev_support);
        double rim = 0.0;
        for (std::size_t j : row.active) rim = std::max(rim, std::abs(g_full[j]));
        row.residual_inner_max = rim;
        if (x_o) {
            double el2 = 0.0, ezmax = 0.0, exact = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                double dx = x[i] - (*x_o)[i];
                el2 += dx * dx;
                ezmax = std::max(ezmax, std::abs(x[i] + g_full[i] - (*x_o)[i]));
            }
            for (std::size_t i : row.active)
                exact = std::max(exact, std::abs(x[i] - (*x_o)[i]));
            row.err_l2 = std::sqrt(el2);
            row.err_zmax = ezmax;
            row.err_xmax_active = exact;
            row.detected = detail::count_detected(row.active, truth_support);
            if (cfg.record_gamma) {
                SupportSet Lset = prev_support.united(row.active).united(truth_support);
                row.gamma = detail::gram_deviation(phi, Lset.indices());
            }
        }
        prev_support = row.active;
        res.trace.push_back(std::move(row));
        res.x_hat = std::move(x);
        res.iterations_run = t;

        if (r.norm2() < cfg.conv_tol) {
            res.status = SolveStatus::converged;
            return res;
        }
    }
    res.status = (r.norm2() < cfg.conv_tol) ? SolveStatus::converged
                                            : SolveStatus::max_iters_reached;
    return res;
}

} // namespace sparseiter
