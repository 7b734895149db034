#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sparseiter/core.hpp"
#include "sparseiter/dictionaries.hpp"
#include "sparseiter/solvers.hpp"

namespace sparseiter {

enum class TheoremId { thm1_omp, thm3_iht, thm4_ist };

inline const char* theorem_name(TheoremId t) {
    switch (t) {
        case TheoremId::thm1_omp: return "thm1_omp";
        case TheoremId::thm3_iht: return "thm3_iht";
        case TheoremId::thm4_ist: return "thm4_ist";
    }
    return "?";
}

/// Coherence-based sufficient condition of each recovery guarantee:
///   thm1_omp: k <= (1 + 1/mu) / 2     (non-strict)
///   thm3_iht: k <  (1/3.1) / mu       (strict)
///   thm4_ist: k <  (1/4.1) / mu       (strict)
/// mu = 0 (orthonormal columns) satisfies every condition.
inline bool check_condition(TheoremId theorem, std::size_t k, double mu) {
    detail::require(mu >= 0.0, "check_condition: mu must be nonnegative");
    if (mu == 0.0) return true;
    const double kd = static_cast<double>(k);
    switch (theorem) {
        case TheoremId::thm1_omp: return kd <= 0.5 * (1.0 + 1.0 / mu);
        case TheoremId::thm3_iht: return kd < (1.0 / 3.1) / mu;
        case TheoremId::thm4_ist: return kd < (1.0 / 4.1) / mu;
    }
    return false;
}

struct EllResult {
    std::vector<std::size_t> ell; // l_i for i = 1..k-1
    std::size_t iteration_bound;
};

/// Per-coefficient phase lengths: l_i is the smallest integer with
/// ratio_i < base^{l_i - offset} (strict), ratio_i = |x(i)| / |x(i+1)|.
/// The detection bound is sum_{i=1}^{k} l_i + k with l_k taken as l_{k-1}
/// ("interpretation A"); for k = 1 it is 1 + k.
inline EllResult compute_ell(const SparseSignal& x, unsigned base, unsigned offset) {
    detail::require(!x.entries.empty(), "compute_ell: signal must be nonempty");
    detail::require(base == 2 || base == 3, "compute_ell: base must be 2 or 3");
    const std::size_t k = x.k();

    EllResult res;
    if (k == 1) {
        res.iteration_bound = 1 + k;
        return res;
    }
    std::size_t sum = 0;
    for (std::size_t i = 0; i + 1 < k; ++i) {
        double ratio = std::abs(x.entries[i].value) / std::abs(x.entries[i + 1].value);
        std::size_t l = offset + 1;
        double power = static_cast<double>(base); // base^{l - offset}
        while (!(ratio < power)) {
            ++l;
            power *= static_cast<double>(base);
        }
        res.ell.push_back(l);
        sum += l;
    }
    res.iteration_bound = sum + res.ell.back() + k;
    return res;
}

struct TheoremReport {
    TheoremId theorem;
    double mu = 0.0;
    std::size_t k = 0;
    bool coherence_ok = false;
    std::vector<std::size_t> ell;
    std::size_t iteration_bound = 0;
    bool ratio_ok = false;
};

/// Assemble the report for a (dictionary, truth) pair. For thm3/thm4 the ell
/// sequence and bound come from compute_ell with the theorem's base/offset;
/// thm1 has no dynamic-range phases, so ell is empty and the bound is k.
inline TheoremReport make_theorem_report(TheoremId theorem, double mu, const SparseSignal& truth) {
    TheoremReport rep;
    rep.theorem = theorem;
    rep.mu = mu;
    rep.k = truth.k();
    rep.coherence_ok = check_condition(theorem, rep.k, mu);
    if (theorem == TheoremId::thm1_omp) {
        rep.iteration_bound = rep.k;
        rep.ratio_ok = true;
        return rep;
    }
    const unsigned base = (theorem == TheoremId::thm3_iht) ? 3u : 2u;
    const unsigned offset = (theorem == TheoremId::thm3_iht) ? 4u : 5u;
    EllResult er = compute_ell(truth, base, offset);
    rep.ell = er.ell;
    rep.iteration_bound = er.iteration_bound;
    // Self-check: each l_i must satisfy its defining strict inequality.
    rep.ratio_ok = true;
    for (std::size_t i = 0; i + 1 < truth.k(); ++i) {
        double ratio = std::abs(truth.entries[i].value) / std::abs(truth.entries[i + 1].value);
        if (!std::isfinite(ratio) ||
            !(ratio < std::pow(static_cast<double>(base),
                               static_cast<double>(rep.ell[i]) - static_cast<double>(offset))))
            rep.ratio_ok = false;
    }
    return rep;
}

inline TheoremReport make_theorem_report(TheoremId theorem, const Dictionary& d,
                                         const SparseSignal& truth) {
    return make_theorem_report(theorem, d.mu, truth);
}

inline std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// key=value text block; lines prefixed '#' are commentary.
inline std::string report_to_text(const TheoremReport& rep) {
    std::ostringstream os;
    os << "theorem=" << theorem_name(rep.theorem) << '\n';
    os << "mu=" << format_g17(rep.mu) << '\n';
    os << "k=" << rep.k << '\n';
    os << "coherence_ok=" << (rep.coherence_ok ? "true" : "false") << '\n';
    os << "ell=[";
    for (std::size_t i = 0; i < rep.ell.size(); ++i) os << (i ? "," : "") << rep.ell[i];
    os << "]\n";
    os << "iteration_bound=" << rep.iteration_bound << '\n';
    os << "ratio_ok=" << (rep.ratio_ok ? "true" : "false") << '\n';
    if (rep.theorem != TheoremId::thm1_omp)
        os << "# bound interpretation A: l_k taken as l_{k-1} in sum_{i=1}^{k} l_i + k\n";
    if (rep.theorem == TheoremId::thm4_ist)
        os << "# note: the theorem states k < mu^{-1}/4.1 (strict, used here); the"
              " detection lemma is stated with k <= mu^{-1}/4.1\n";
    return os.str();
}

struct BoundViolation {
    std::string lemma;
    std::size_t iteration = 0;
    double observed = 0.0;
    double bound = 0.0;
};

enum class TraceOutcome { verified, never_detected };

struct TraceVerification {
    TraceOutcome outcome = TraceOutcome::never_detected;
    std::size_t detection_iteration = 0; // first row with detected == k
    std::vector<BoundViolation> violations;

    bool clean() const { return outcome == TraceOutcome::verified && violations.empty(); }
};

/// Check the post-detection decay and support-stability bounds against a
/// recorded trace. m is the first row whose active set holds all k true
/// indices; for rows m+s (s >= 0):
///   hard: err_zmax <= 1.5 (k mu)^{s+1} |x_o(k)|
///   soft: max_{i in I} |x(i) - x_o(i)| <= 2 (2 k mu)^{s+1} |x_o(k)|
///         (falls back to err_zmax, which obeys the same bound, when the
///         per-entry field is absent, e.g. for traces re-read from CSV)
/// and detected must stay k. Each bound carries multiplicative slack 1+1e-9.
/// A trace that never reaches detected == k is a distinguished non-detection
/// outcome, not a violation.
inline TraceVerification verify_trace_bounds(const SolveResult& result, const SparseSignal& truth,
                                             double mu, ThresholdMode mode) {
    detail::require(mu >= 0.0, "verify_trace_bounds: mu must be nonnegative");
    const std::size_t k = truth.k();
    detail::require(k >= 1, "verify_trace_bounds: truth must be nonempty");
    constexpr double kSlack = 1.0 + 1e-9;
    const double xk = truth.min_magnitude();

    TraceVerification ver;
    std::size_t m = 0;
    bool found = false;
    for (const auto& row : result.trace) {
        if (!row.detected) continue;
        if (*row.detected == k) {
            m = row.iter;
            found = true;
            break;
        }
    }
    if (!found) return ver; // never_detected

    ver.outcome = TraceOutcome::verified;
    ver.detection_iteration = m;

    const double rate = (mode == ThresholdMode::hard) ? static_cast<double>(k) * mu
                                                      : 2.0 * static_cast<double>(k) * mu;
    const double lead = (mode == ThresholdMode::hard) ? 1.5 : 2.0;
    const char* decay_lemma = (mode == ThresholdMode::hard) ? "lemma5_decay" : "lemma8_decay";
    const char* stab_lemma = (mode == ThresholdMode::hard) ? "lemma2_stability" : "lemma6_stability";

    double factor = rate; // rate^{s+1}
    for (const auto& row : result.trace) {
        if (row.iter < m) continue;
        if (row.detected && *row.detected != k) {
            ver.violations.push_back(BoundViolation{stab_lemma, row.iter,
                                                    static_cast<double>(*row.detected),
                                                    static_cast<double>(k)});
        }
        const double bound = lead * factor * xk;
        std::optional<double> observed;
        if (mode == ThresholdMode::hard) {
            observed = row.err_zmax;
        } else {
            observed = row.err_xmax_active ? row.err_xmax_active : row.err_zmax;
        }
        if (observed && *observed > bound * kSlack)
            ver.violations.push_back(BoundViolation{decay_lemma, row.iter, *observed, bound});
        factor *= rate;
    }
    return ver;
}

/// ||I - Phi_L^T Phi_L||_{2,2} over the columns indexed by L.
inline double restricted_gram_deviation(const Dictionary& d, const SupportSet& L) {
    detail::require(!L.empty(), "restricted_gram_deviation: support must be nonempty");
    for (std::size_t j : L)
        detail::require(j < d.cols(), "restricted_gram_deviation: index out of range");
    return detail::gram_deviation(d.matrix, L.indices());
}

/// Subgradient optimality residual of P1 at x: with c = Phi^T (y - Phi x),
/// max over i of |c_i - lambda sign(x_i)| where x_i != 0 and of
/// max(0, |c_i| - lambda) where x_i = 0. Zero iff x is stationary.
inline double kkt_residual(const Dictionary& d, const DenseVector& y, const DenseVector& x,
                           double lambda) {
    detail::require(lambda > 0.0, "kkt_residual: lambda must be positive");
    detail::require(y.size() == d.rows(), "kkt_residual: y has wrong dimension");
    detail::require(x.size() == d.cols(), "kkt_residual: x has wrong dimension");
    DenseVector c = d.matrix.apply_transpose(y - d.matrix.apply(x));
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] != 0.0) {
            double sgn = x[i] > 0.0 ? 1.0 : -1.0;
            worst = std::max(worst, std::abs(c[i] - lambda * sgn));
        } else {
            worst = std::max(worst, std::max(0.0, std::abs(c[i]) - lambda));
        }
    }
    return worst;
}

struct DetectionRecord {
    std::size_t rank = 0;  // position in the descending-magnitude ordering (1-based)
    std::size_t index = 0; // column index in [0, N)
    bool detected = false;
    std::size_t first_iteration = 0; // valid when detected
    bool stable = false;             // stays active from first_iteration onward
};

struct DetectionSchedule {
    std::vector<DetectionRecord> records;
    bool all_detected = false;
    bool all_stable = false;
    std::size_t max_first_iteration = 0; // over detected indices
};

/// First iteration each true index enters the active set and whether it
/// remains there for the rest of the trace.
inline DetectionSchedule detection_schedule(const SolveResult& result, const SparseSignal& truth) {
    DetectionSchedule sched;
    sched.all_detected = true;
    sched.all_stable = true;
    for (std::size_t r = 0; r < truth.entries.size(); ++r) {
        DetectionRecord rec;
        rec.rank = r + 1;
        rec.index = truth.entries[r].index;
        for (const auto& row : result.trace) {
            if (!rec.detected) {
                if (row.active.contains(rec.index)) {
                    rec.detected = true;
                    rec.stable = true;
                    rec.first_iteration = row.iter;
                }
            } else if (!row.active.contains(rec.index)) {
                rec.stable = false;
            }
        }
        sched.all_detected = sched.all_detected && rec.detected;
        sched.all_stable = sched.all_stable && rec.detected && rec.stable;
        if (rec.detected)
            sched.max_first_iteration = std::max(sched.max_first_iteration, rec.first_iteration);
        sched.records.push_back(rec);
    }
    return sched;
}

} // namespace sparseiter
