// Command-line front end: generate test instances, run the solvers with
// trace output, check theorem conditions, verify recorded traces, and run
// seeded experiment batches.
//
// Exit codes: 0 success, 1 argument error, 2 format/io error,
// 3 numerical error, 4 acceptance-assertion failure (check/verify).

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sparseiter/sparseiter.hpp"

namespace si = sparseiter;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitArgument = 1;
constexpr int kExitFormat = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitAssertionFailed = 4;

si::Dictionary load_dictionary(const std::filesystem::path& path) {
    return si::make_dictionary(si::load_matrix(path), path.filename().string());
}

struct GenMatrixArgs {
    std::string ensemble = "gaussian";
    std::size_t n = 0, N = 0;
    std::uint64_t seed = 0;
    std::string out;
};

struct GenSignalArgs {
    std::size_t N = 0, k = 0;
    double ratio = 1.0;
    std::uint64_t seed = 0;
    std::string out;
};

struct GenYArgs {
    std::string matrix, truth, out;
};

struct SolveArgs {
    std::string algo;
    std::string matrix, y, truth;
    std::size_t k = 0;
    double lambda = 0.0;
    std::string schedule;
    std::string mode = "hard";
    std::string trace, xout;
    bool record_gamma = false;
    std::size_t max_iters = 1000;
    double conv_tol = 1e-12;
};

int run_solve(const SolveArgs& args) {
    si::Dictionary dict = load_dictionary(args.matrix);

    std::optional<si::SparseSignal> truth;
    if (!args.truth.empty()) truth = si::load_signal(args.truth);

    si::DenseVector y;
    if (!args.y.empty()) {
        y = si::load_vector(args.y);
    } else if (truth) {
        y = dict.matrix.apply(truth->to_dense());
    } else {
        throw std::invalid_argument("solve: need --y or --truth to form the measurement");
    }

    si::SolverConfig cfg;
    cfg.max_iters = args.max_iters;
    cfg.conv_tol = args.conv_tol;
    cfg.record_gamma = args.record_gamma;
    cfg.k = args.k;

    const si::SparseSignal* truth_ptr = truth ? &*truth : nullptr;
    si::SolveResult result;
    if (args.algo == "iht") {
        result = si::iht_solve(dict, y, cfg, truth_ptr);
    } else if (args.algo == "ist") {
        result = si::ist_solve(dict, y, cfg, truth_ptr);
    } else if (args.algo == "ist-fixed") {
        if (args.lambda <= 0.0)
            throw std::invalid_argument("solve --algo ist-fixed requires --lambda > 0");
        result = si::ist_fixed(dict, y, args.lambda, cfg, truth_ptr);
    } else if (args.algo == "ita") {
        if (args.schedule.empty())
            throw std::invalid_argument("solve --algo ita requires --schedule l0,ratio,floor");
        si::ScheduleSpec sched = si::parse_schedule_spec(args.schedule);
        result = si::ita_schedule_solve(dict, y, si::parse_mode(args.mode),
                                        sched.expand(cfg.max_iters), cfg, truth_ptr);
    } else if (args.algo == "omp") {
        if (args.k == 0) throw std::invalid_argument("solve --algo omp requires --k");
        result = si::omp_solve(dict, y, args.k, cfg, truth_ptr);
    } else {
        throw std::invalid_argument("unknown algorithm: " + args.algo);
    }

    if (!args.trace.empty()) si::save_trace_csv(result, args.trace);
    if (!args.xout.empty()) si::save_vector(result.x_hat, args.xout);

    std::cout << "status=" << (result.status == si::SolveStatus::converged ? "converged"
                                                                           : "max_iters_reached")
              << '\n';
    std::cout << "iterations=" << result.iterations_run << '\n';
    std::cout << "support_size=" << si::SupportSet::support_of(result.x_hat).size() << '\n';
    if (truth) {
        si::DenseVector x_o = truth->to_dense();
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < x_o.size(); ++i) {
            double dx = result.x_hat[i] - x_o[i];
            num += dx * dx;
            den += x_o[i] * x_o[i];
        }
        std::cout << "rel_err=" << si::format_g17(std::sqrt(num / den)) << '\n';
        bool match = si::SupportSet::support_of(result.x_hat) == truth->support();
        std::cout << "support_match=" << (match ? "true" : "false") << '\n';
        si::DetectionSchedule sched = si::detection_schedule(result, *truth);
        if (sched.all_detected)
            std::cout << "detected_at=" << sched.max_first_iteration << '\n';
        else
            std::cout << "detected_at=never\n";
    }
    return kExitOk;
}

int run_check(const std::string& theorem, const std::string& matrix_path,
              const std::string& truth_path) {
    si::TheoremId id;
    if (theorem == "thm1") id = si::TheoremId::thm1_omp;
    else if (theorem == "thm3") id = si::TheoremId::thm3_iht;
    else if (theorem == "thm4") id = si::TheoremId::thm4_ist;
    else throw std::invalid_argument("unknown theorem: " + theorem);

    si::Dictionary dict = load_dictionary(matrix_path);
    si::SparseSignal truth = si::load_signal(truth_path);
    si::TheoremReport rep = si::make_theorem_report(id, dict, truth);
    std::cout << si::report_to_text(rep);
    return (rep.coherence_ok && rep.ratio_ok) ? kExitOk : kExitAssertionFailed;
}

int run_verify(const std::string& trace_path, const std::string& truth_path, double mu,
               const std::string& mode_str) {
    si::SolveResult result = si::load_trace_csv(trace_path);
    si::SparseSignal truth = si::load_signal(truth_path);
    si::ThresholdMode mode = si::parse_mode(mode_str);
    si::TraceVerification ver = si::verify_trace_bounds(result, truth, mu, mode);
    if (ver.outcome == si::TraceOutcome::never_detected) {
        std::cout << "outcome=never_detected\n";
        return kExitAssertionFailed;
    }
    std::cout << "outcome=verified\n";
    std::cout << "detection_iteration=" << ver.detection_iteration << '\n';
    std::cout << "violations=" << ver.violations.size() << '\n';
    for (const auto& v : ver.violations)
        std::cout << "violation " << v.lemma << " iter=" << v.iteration
                  << " observed=" << si::format_g17(v.observed)
                  << " bound=" << si::format_g17(v.bound) << '\n';
    return ver.violations.empty() ? kExitOk : kExitAssertionFailed;
}

int run_bench(const std::string& config_path, const std::string& out_dir) {
    si::TrialSpec spec = si::load_trial_spec(config_path);
    si::ExperimentOutput out = si::run_experiment(spec, out_dir);
    std::cout << si::aggregate_to_csv(out.aggregate);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sparse recovery via iterative thresholding: solvers, analysis, benchmarks"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate matrix/signal/measurement files");
    gen->require_subcommand(1);

    GenMatrixArgs gm;
    auto* gen_matrix = gen->add_subcommand("matrix", "write a measurement matrix");
    gen_matrix->add_option("--ensemble", gm.ensemble, "gaussian | id-hadamard | identity");
    gen_matrix->add_option("--n", gm.n, "rows")->required();
    gen_matrix->add_option("--N", gm.N, "columns (defaults per ensemble)");
    gen_matrix->add_option("--seed", gm.seed, "generator seed");
    gen_matrix->add_option("--out", gm.out, "output path")->required();

    GenSignalArgs gs;
    auto* gen_signal = gen->add_subcommand("signal", "write a sparse ground-truth signal");
    gen_signal->add_option("--N", gs.N, "dimension")->required();
    gen_signal->add_option("--k", gs.k, "sparsity")->required();
    gen_signal->add_option("--ratio", gs.ratio, "consecutive magnitude ratio (>= 1)");
    gen_signal->add_option("--seed", gs.seed, "generator seed");
    gen_signal->add_option("--out", gs.out, "output path")->required();

    GenYArgs gy;
    auto* gen_y = gen->add_subcommand("y", "write y = Phi x_o for a matrix and signal");
    gen_y->add_option("--matrix", gy.matrix, "matrix file")->required();
    gen_y->add_option("--truth", gy.truth, "signal file")->required();
    gen_y->add_option("--out", gy.out, "output path")->required();

    // coherence
    std::string coherence_path;
    auto* coh = app.add_subcommand("coherence", "print the coherence of a matrix file");
    coh->add_option("matrix", coherence_path, "matrix file")->required();

    // solve
    SolveArgs sv;
    auto* solve = app.add_subcommand("solve", "run a recovery algorithm");
    solve->add_option("--algo", sv.algo, "iht | ist | ist-fixed | ita | omp")->required();
    solve->add_option("--matrix", sv.matrix, "matrix file")->required();
    solve->add_option("--y", sv.y, "measurement vector file");
    solve->add_option("--truth", sv.truth, "ground-truth signal file");
    solve->add_option("--k", sv.k, "sparsity for iht/ist/omp");
    solve->add_option("--lambda", sv.lambda, "fixed threshold for ist-fixed");
    solve->add_option("--schedule", sv.schedule, "geometric schedule l0,ratio,floor for ita");
    solve->add_option("--mode", sv.mode, "hard | soft (ita only, default hard)");
    solve->add_option("--trace", sv.trace, "write per-iteration CSV here");
    solve->add_option("--xout", sv.xout, "write the recovered vector here");
    solve->add_flag("--record-gamma", sv.record_gamma, "record restricted Gram deviations");
    solve->add_option("--max-iters", sv.max_iters, "iteration cap (default 1000)");
    solve->add_option("--conv-tol", sv.conv_tol, "step-size stop tolerance (default 1e-12)");

    // check
    std::string ck_theorem, ck_matrix, ck_truth;
    auto* check = app.add_subcommand("check", "check a theorem's sufficient condition");
    check->add_option("--theorem", ck_theorem, "thm1 | thm3 | thm4")->required();
    check->add_option("--matrix", ck_matrix, "matrix file")->required();
    check->add_option("--truth", ck_truth, "signal file")->required();

    // bench
    std::string bench_config, bench_out;
    auto* bench = app.add_subcommand("bench", "run a seeded experiment batch");
    bench->add_option("--config", bench_config, "key=value config file")->required();
    bench->add_option("--out", bench_out, "output directory")->required();

    // verify
    std::string vf_trace, vf_truth, vf_mode;
    double vf_mu = 0.0;
    auto* verify = app.add_subcommand("verify", "verify lemma bounds against a trace CSV");
    verify->add_option("--trace", vf_trace, "trace CSV")->required();
    verify->add_option("--truth", vf_truth, "signal file")->required();
    verify->add_option("--mu", vf_mu, "dictionary coherence")->required();
    verify->add_option("--mode", vf_mode, "hard | soft")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << '\n';
        return kExitArgument;
    }

    try {
        if (gen_matrix->parsed()) {
            si::Dictionary d;
            if (gm.ensemble == "gaussian") {
                if (gm.N == 0) throw std::invalid_argument("gen matrix --ensemble gaussian needs --N");
                d = si::gen_gaussian(gm.n, gm.N, gm.seed);
            } else if (gm.ensemble == "id-hadamard" || gm.ensemble == "id_hadamard") {
                if (gm.N != 0 && gm.N != 2 * gm.n)
                    throw std::invalid_argument("id-hadamard has N = 2n; omit --N or pass 2n");
                d = si::gen_identity_plus_hadamard(gm.n);
            } else if (gm.ensemble == "identity") {
                if (gm.N != 0 && gm.N != gm.n)
                    throw std::invalid_argument("identity has N = n; omit --N or pass n");
                d = si::gen_identity(gm.n);
            } else {
                throw std::invalid_argument("unknown ensemble: " + gm.ensemble);
            }
            si::save_matrix(d.matrix, gm.out);
            std::cout << "n=" << d.rows() << " N=" << d.cols()
                      << " mu=" << si::format_g17(d.mu) << '\n';
            return kExitOk;
        }
        if (gen_signal->parsed()) {
            si::SparseSignal s = si::gen_signal(gs.N, gs.k, gs.ratio, gs.seed);
            si::save_signal(s, gs.out);
            return kExitOk;
        }
        if (gen_y->parsed()) {
            si::DenseMatrix m = si::load_matrix(gy.matrix);
            si::SparseSignal s = si::load_signal(gy.truth);
            si::save_vector(m.apply(s.to_dense()), gy.out);
            return kExitOk;
        }
        if (coh->parsed()) {
            si::Dictionary d = load_dictionary(coherence_path);
            std::cout << si::format_g17(d.mu) << '\n';
            return kExitOk;
        }
        if (solve->parsed()) return run_solve(sv);
        if (check->parsed()) return run_check(ck_theorem, ck_matrix, ck_truth);
        if (bench->parsed()) return run_bench(bench_config, bench_out);
        if (verify->parsed()) return run_verify(vf_trace, vf_truth, vf_mu, vf_mode);
        std::cerr << "no subcommand\n";
        return kExitArgument;
    } catch (const si::format_error& e) {
        std::cerr << "format error: " << e.what() << '\n';
        return kExitFormat;
    } catch (const si::io_error& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return kExitFormat;
    } catch (const si::numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "argument error: " << e.what() << '\n';
        return kExitArgument;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitArgument;
    }
}
