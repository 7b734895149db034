#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "sparseiter/analysis.hpp"
#include "sparseiter/dictionaries.hpp"
#include "sparseiter/io.hpp"
#include "sparseiter/solvers.hpp"

namespace sparseiter {

enum class Ensemble { gaussian, id_hadamard, identity };
enum class Algorithm { iht, ist, ist_fixed, ita_schedule, omp };

/// Geometric schedule "l0,ratio,floor": lambda at 1-based iteration t is
/// max(l0 * ratio^{t-1}, floor).
struct ScheduleSpec {
    double l0 = 1.0;
    double ratio = 0.9;
    double floor = 1e-8;

    void validate() const {
        detail::require(l0 > 0.0 && floor > 0.0, "schedule: l0 and floor must be positive");
        detail::require(ratio > 0.0 && ratio <= 1.0, "schedule: ratio must lie in (0, 1]");
        detail::require(floor <= l0, "schedule: floor cannot exceed l0");
    }

    /// Materialize until the floor is reached; the solver reuses the last
    /// value beyond that.
    std::vector<double> expand(std::size_t max_len) const {
        validate();
        std::vector<double> out;
        double v = l0;
        while (out.size() < max_len) {
            if (v <= floor) {
                out.push_back(floor);
                break;
            }
            out.push_back(v);
            v *= ratio;
        }
        return out;
    }
};

struct TrialSpec {
    Ensemble ensemble = Ensemble::gaussian;
    std::size_t n = 0, N = 0, k = 0;
    double magnitude_ratio = 1.0;
    Algorithm algorithm = Algorithm::iht;
    ThresholdMode mode = ThresholdMode::hard; // ita_schedule only
    double lambda = 0.0;                      // ist_fixed, absolute
    double lambda_rel = 0.0;                  // ist_fixed, multiple of ||Phi^T y||_inf
    std::optional<ScheduleSpec> schedule;     // ita_schedule
    std::uint64_t base_seed = 0;
    std::size_t trials = 1;
    bool record_gamma = false;
    std::size_t max_iters = 1000;
    double conv_tol = 1e-12;
    std::size_t threads = 1;

    void validate() const {
        detail::require(trials >= 1, "TrialSpec: trials must be >= 1");
        detail::require(n >= 1 && N >= 1 && k >= 1, "TrialSpec: n, N, k must be >= 1");
        detail::require(k <= N, "TrialSpec: k cannot exceed N");
        detail::require(magnitude_ratio >= 1.0, "TrialSpec: magnitude_ratio must be >= 1");
        if (ensemble == Ensemble::id_hadamard)
            detail::require(N == 2 * n, "TrialSpec: id_hadamard requires N = 2n");
        if (ensemble == Ensemble::identity)
            detail::require(N == n, "TrialSpec: identity requires N = n");
        if (algorithm == Algorithm::ist_fixed)
            detail::require((lambda > 0.0) != (lambda_rel > 0.0),
                            "TrialSpec: ist_fixed needs exactly one of lambda / lambda_rel");
        if (algorithm == Algorithm::ita_schedule)
            detail::require(schedule.has_value(), "TrialSpec: ita_schedule needs a schedule");
        detail::require(threads >= 1, "TrialSpec: threads must be >= 1");
    }
};

struct TrialResult {
    std::size_t trial_index = 0;
    bool success = false; // exact support match AND relative l2 error <= 1e-6
    std::optional<std::size_t> iterations_to_detect;
    std::size_t iterations_run = 0;
    std::optional<bool> bound_ok; // detection within the theorem bound, when one applies
    std::size_t violations = 0;
    double rel_err = 0.0;
    std::optional<std::string> error; // per-trial failure record; batch continues
};

namespace detail {

inline std::uint64_t signal_seed(std::uint64_t trial_seed) {
    // Decouple the signal stream from the matrix stream.
    return trial_seed ^ 0x9e3779b97f4a7c15ULL;
}

inline Dictionary build_dictionary(const TrialSpec& spec, std::uint64_t trial_seed) {
    switch (spec.ensemble) {
        case Ensemble::gaussian: return gen_gaussian(spec.n, spec.N, trial_seed);
        case Ensemble::id_hadamard: return gen_identity_plus_hadamard(spec.n);
        case Ensemble::identity: return gen_identity(spec.n);
    }
    throw std::invalid_argument("unknown ensemble");
}

inline std::optional<TheoremId> theorem_for(Algorithm alg) {
    switch (alg) {
        case Algorithm::iht: return TheoremId::thm3_iht;
        case Algorithm::ist: return TheoremId::thm4_ist;
        case Algorithm::omp: return TheoremId::thm1_omp;
        default: return std::nullopt;
    }
}

} // namespace detail

/// Full solve record of one trial, for callers that need the trace.
struct TrialRun {
    TrialResult result;
    SolveResult solve;
    Dictionary dictionary;
    SparseSignal truth;
};

inline TrialRun run_trial_full(const TrialSpec& spec, std::size_t trial_index) {
    spec.validate();
    const std::uint64_t trial_seed = spec.base_seed + trial_index;

    TrialRun run;
    run.result.trial_index = trial_index;
    run.dictionary = detail::build_dictionary(spec, trial_seed);
    run.truth = gen_signal(spec.N, spec.k, spec.magnitude_ratio, detail::signal_seed(trial_seed));
    DenseVector y = run.dictionary.matrix.apply(run.truth.to_dense());

    SolverConfig cfg;
    cfg.max_iters = spec.max_iters;
    cfg.conv_tol = spec.conv_tol;
    cfg.record_gamma = spec.record_gamma;
    cfg.k = spec.k;

    try {
        switch (spec.algorithm) {
            case Algorithm::iht:
                run.solve = iht_solve(run.dictionary, y, cfg, &run.truth);
                break;
            case Algorithm::ist:
                run.solve = ist_solve(run.dictionary, y, cfg, &run.truth);
                break;
            case Algorithm::ist_fixed: {
                double lam = spec.lambda > 0.0
                                 ? spec.lambda
                                 : spec.lambda_rel * run.dictionary.matrix.apply_transpose(y).norm_inf();
                run.solve = ist_fixed(run.dictionary, y, lam, cfg, &run.truth);
                break;
            }
            case Algorithm::ita_schedule: {
                std::vector<double> sched = spec.schedule->expand(spec.max_iters);
                run.solve = ita_schedule_solve(run.dictionary, y, spec.mode, sched, cfg, &run.truth);
                break;
            }
            case Algorithm::omp:
                run.solve = omp_solve(run.dictionary, y, spec.k, cfg, &run.truth);
                break;
        }
    } catch (const std::exception& e) {
        run.result.error = e.what();
        return run;
    }

    run.result.iterations_run = run.solve.iterations_run;

    DenseVector x_o = run.truth.to_dense();
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x_o.size(); ++i) {
        double dx = run.solve.x_hat[i] - x_o[i];
        num += dx * dx;
        den += x_o[i] * x_o[i];
    }
    run.result.rel_err = std::sqrt(num / den);
    bool support_match = SupportSet::support_of(run.solve.x_hat) == run.truth.support();
    run.result.success = support_match && run.result.rel_err <= 1e-6;

    for (const auto& row : run.solve.trace) {
        if (row.detected && *row.detected == spec.k) {
            run.result.iterations_to_detect = row.iter;
            break;
        }
    }

    if (auto thm = detail::theorem_for(spec.algorithm)) {
        TheoremReport rep = make_theorem_report(*thm, run.dictionary.mu, run.truth);
        if (rep.coherence_ok && rep.ratio_ok)
            run.result.bound_ok = run.result.iterations_to_detect &&
                                  *run.result.iterations_to_detect <= rep.iteration_bound;
    }

    if (spec.algorithm == Algorithm::iht || spec.algorithm == Algorithm::ist) {
        ThresholdMode mode =
            spec.algorithm == Algorithm::iht ? ThresholdMode::hard : ThresholdMode::soft;
        TraceVerification ver =
            verify_trace_bounds(run.solve, run.truth, run.dictionary.mu, mode);
        run.result.violations = ver.violations.size();
    }
    return run;
}

/// Deterministic given (spec, trial_index); per-trial seed = base_seed + index.
inline TrialResult run_trial(const TrialSpec& spec, std::size_t trial_index) {
    return run_trial_full(spec, trial_index).result;
}

struct Aggregate {
    std::size_t trials = 0;
    double success_rate = 0.0;
    double mean_detect = 0.0; // over trials that detected
    std::size_t max_detect = 0;
    double bound_ok_rate = 0.0; // over trials where a theorem bound applied
    std::size_t total_violations = 0;
    std::size_t errors = 0;
};

inline Aggregate aggregate_results(const std::vector<TrialResult>& results) {
    Aggregate agg;
    agg.trials = results.size();
    std::size_t detect_n = 0, bound_n = 0, bound_ok_n = 0, succ = 0;
    double detect_sum = 0.0;
    for (const auto& r : results) {
        if (r.success) ++succ;
        if (r.iterations_to_detect) {
            ++detect_n;
            detect_sum += static_cast<double>(*r.iterations_to_detect);
            agg.max_detect = std::max(agg.max_detect, *r.iterations_to_detect);
        }
        if (r.bound_ok) {
            ++bound_n;
            if (*r.bound_ok) ++bound_ok_n;
        }
        agg.total_violations += r.violations;
        if (r.error) ++agg.errors;
    }
    agg.success_rate = results.empty() ? 0.0 : static_cast<double>(succ) / results.size();
    agg.mean_detect = detect_n ? detect_sum / static_cast<double>(detect_n) : 0.0;
    agg.bound_ok_rate = bound_n ? static_cast<double>(bound_ok_n) / static_cast<double>(bound_n) : 0.0;
    return agg;
}

/// Run all trials. Trials are independent; with spec.threads > 1 they execute
/// concurrently, and results are identical to the serial order because each
/// trial is a pure function of (spec, index).
inline std::vector<TrialResult> run_all_trials(const TrialSpec& spec) {
    spec.validate();
    std::vector<TrialResult> results(spec.trials);
    if (spec.threads <= 1) {
        for (std::size_t i = 0; i < spec.trials; ++i) results[i] = run_trial(spec, i);
        return results;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= spec.trials) return;
            results[i] = run_trial(spec, i);
        }
    };
    std::vector<std::thread> pool;
    std::size_t nthreads = std::min(spec.threads, spec.trials);
    pool.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    return results;
}

inline const char* kTrialCsvHeader =
    "trial,success,iterations_to_detect,iterations_run,bound_ok,violations,rel_err,error";

inline std::string trials_to_csv(const std::vector<TrialResult>& results) {
    std::ostringstream os;
    os << kTrialCsvHeader << '\n';
    for (const auto& r : results) {
        os << r.trial_index << ',' << (r.success ? 1 : 0) << ',';
        if (r.iterations_to_detect) os << *r.iterations_to_detect;
        os << ',' << r.iterations_run << ',';
        if (r.bound_ok) os << (*r.bound_ok ? 1 : 0);
        os << ',' << r.violations << ',' << format_g17(r.rel_err) << ',';
        if (r.error) {
            std::string msg = *r.error;
            for (char& ch : msg)
                if (ch == ',' || ch == '\n') ch = ';';
            os << msg;
        }
        os << '\n';
    }
    return os.str();
}

inline const char* kAggregateCsvHeader =
    "trials,success_rate,mean_detect,max_detect,bound_ok_rate,total_violations,errors";

inline std::string aggregate_to_csv(const Aggregate& agg) {
    std::ostringstream os;
    os << kAggregateCsvHeader << '\n'
       << agg.trials << ',' << format_g17(agg.success_rate) << ',' << format_g17(agg.mean_detect)
       << ',' << agg.max_detect << ',' << format_g17(agg.bound_ok_rate) << ','
       << agg.total_violations << ',' << agg.errors << '\n';
    return os.str();
}

struct ExperimentOutput {
    Aggregate aggregate;
    std::vector<TrialResult> results;
};

/// Run the batch and write per-trial + aggregate CSVs under out_dir. The
/// output paths are validated before any trial runs.
inline ExperimentOutput run_experiment(const TrialSpec& spec,
                                       const std::filesystem::path& out_dir) {
    spec.validate();
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    const auto trials_path = out_dir / "trials.csv";
    const auto agg_path = out_dir / "aggregate.csv";
    {
        std::ofstream probe(trials_path, std::ios::binary);
        std::ofstream probe2(agg_path, std::ios::binary);
        if (!probe || !probe2)
            throw io_error("cannot write experiment output under " + out_dir.string());
    }
    ExperimentOutput out;
    out.results = run_all_trials(spec);
    out.aggregate = aggregate_results(out.results);
    {
        std::ofstream os(trials_path, std::ios::binary);
        os << trials_to_csv(out.results);
        if (!os) throw io_error("write failed: " + trials_path.string());
    }
    {
        std::ofstream os(agg_path, std::ios::binary);
        os << aggregate_to_csv(out.aggregate);
        if (!os) throw io_error("write failed: " + agg_path.string());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Config files: flat key=value lines, '#' comments, keys mirror TrialSpec.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace detail

inline Ensemble parse_ensemble(const std::string& s) {
    if (s == "gaussian") return Ensemble::gaussian;
    if (s == "id_hadamard" || s == "id-hadamard") return Ensemble::id_hadamard;
    if (s == "identity") return Ensemble::identity;
    throw std::invalid_argument("unknown ensemble: " + s);
}

inline Algorithm parse_algorithm(const std::string& s) {
    if (s == "iht") return Algorithm::iht;
    if (s == "ist") return Algorithm::ist;
    if (s == "ist_fixed" || s == "ist-fixed") return Algorithm::ist_fixed;
    if (s == "ita" || s == "ita_schedule") return Algorithm::ita_schedule;
    if (s == "omp") return Algorithm::omp;
    throw std::invalid_argument("unknown algorithm: " + s);
}

inline ThresholdMode parse_mode(const std::string& s) {
    if (s == "hard") return ThresholdMode::hard;
    if (s == "soft") return ThresholdMode::soft;
    throw std::invalid_argument("unknown mode: " + s);
}

inline ScheduleSpec parse_schedule_spec(const std::string& s) {
    auto fields = detail::split_csv(s);
    if (fields.size() != 3)
        throw std::invalid_argument("schedule spec must be 'l0,ratio,floor': " + s);
    ScheduleSpec spec;
    spec.l0 = std::stod(fields[0]);
    spec.ratio = std::stod(fields[1]);
    spec.floor = std::stod(fields[2]);
    spec.validate();
    return spec;
}

inline TrialSpec parse_trial_spec(std::istream& is, const std::string& origin = "config") {
    TrialSpec spec;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw format_error(origin + ": expected key=value", lineno);
        std::string key = detail::trim(t.substr(0, eq));
        std::string val = detail::trim(t.substr(eq + 1));
        try {
            if (key == "ensemble") spec.ensemble = parse_ensemble(val);
            else if (key == "n") spec.n = std::stoull(val);
            else if (key == "N") spec.N = std::stoull(val);
            else if (key == "k") spec.k = std::stoull(val);
            else if (key == "magnitude_ratio") spec.magnitude_ratio = std::stod(val);
            else if (key == "algorithm") spec.algorithm = parse_algorithm(val);
            else if (key == "mode") spec.mode = parse_mode(val);
            else if (key == "lambda") spec.lambda = std::stod(val);
            else if (key == "lambda_rel") spec.lambda_rel = std::stod(val);
            else if (key == "schedule") spec.schedule = parse_schedule_spec(val);
            else if (key == "base_seed") spec.base_seed = std::stoull(val);
            else if (key == "trials") spec.trials = std::stoull(val);
            else if (key == "record_gamma") spec.record_gamma = (val == "1" || val == "true");
            else if (key == "max_iters") spec.max_iters = std::stoull(val);
            else if (key == "conv_tol") spec.conv_tol = std::stod(val);
            else if (key == "threads") spec.threads = std::stoull(val);
            else throw format_error(origin + ": unknown config key '" + key + "'", lineno);
        } catch (const format_error&) {
            throw;
        } catch (const std::exception&) {
            throw format_error(origin + ": bad value for " + key, lineno);
        }
    }
    spec.validate();
    return spec;
}

inline TrialSpec load_trial_spec(const std::filesystem::path& path) {
    std::ifstream is = detail::open_in(path);
    return parse_trial_spec(is, path.string());
}

} // namespace sparseiter
