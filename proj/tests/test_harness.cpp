#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "sparseiter/harness.hpp"
#include "support/tmpdir.hpp"

using namespace sparseiter;
using testsupport::TempDir;

namespace {

TrialSpec iht_hadamard_spec() {
    TrialSpec spec;
    spec.ensemble = Ensemble::id_hadamard;
    spec.n = 64;
    spec.N = 128;
    spec.k = 3;
    spec.algorithm = Algorithm::iht;
    spec.base_seed = 5000;
    spec.trials = 4;
    return spec;
}

bool equal_results(const TrialResult& a, const TrialResult& b) {
    return a.trial_index == b.trial_index && a.success == b.success &&
           a.iterations_to_detect == b.iterations_to_detect &&
           a.iterations_run == b.iterations_run && a.bound_ok == b.bound_ok &&
           a.violations == b.violations && a.rel_err == b.rel_err && a.error == b.error;
}

} // namespace

TEST_CASE("run_trial is deterministic") {
    TrialSpec spec = iht_hadamard_spec();
    TrialResult a = run_trial(spec, 2);
    TrialResult b = run_trial(spec, 2);
    CHECK(equal_results(a, b));
    TrialResult c = run_trial(spec, 3);
    CHECK(!equal_results(a, c));
}

TEST_CASE("degenerate orthonormal spec detects at the first iteration") {
    TrialSpec spec;
    spec.ensemble = Ensemble::identity;
    spec.n = 16;
    spec.N = 16;
    spec.k = 3;
    spec.algorithm = Algorithm::iht;
    spec.base_seed = 11;
    TrialResult r = run_trial(spec, 0);
    CHECK(r.success);
    REQUIRE(r.iterations_to_detect.has_value());
    CHECK(*r.iterations_to_detect == 1);
    CHECK(r.violations == 0);
}

TEST_CASE("theorem-governed IHT trial succeeds with no violations") {
    TrialSpec spec = iht_hadamard_spec(); // k mu = 3/8 < 1/3.1? no: 0.375 > 0.3226
    spec.k = 2;                           // 2/8 = 0.25 < 1/3.1
    TrialResult r = run_trial(spec, 0);
    CHECK(r.success);
    CHECK(r.violations == 0);
    REQUIRE(r.bound_ok.has_value());
    CHECK(*r.bound_ok);
}

TEST_CASE("unconditioned regimes are measured, not asserted") {
    TrialSpec spec = iht_hadamard_spec();
    spec.k = 24; // far above the theorem threshold
    spec.trials = 6;
    auto results = run_all_trials(spec);
    Aggregate agg = aggregate_results(results);
    CHECK(agg.trials == 6);
    CHECK(agg.errors == 0);
    // bound_ok is not applicable outside the coherence condition
    for (const auto& r : results) CHECK(!r.bound_ok.has_value());
}

TEST_CASE("aggregate of a single trial equals that trial") {
    TrialSpec spec = iht_hadamard_spec();
    spec.trials = 1;
    auto results = run_all_trials(spec);
    REQUIRE(results.size() == 1);
    Aggregate agg = aggregate_results(results);
    CHECK(agg.success_rate == (results[0].success ? 1.0 : 0.0));
    CHECK(agg.max_detect == results[0].iterations_to_detect.value_or(0));
    CHECK(agg.total_violations == results[0].violations);
}

TEST_CASE("aggregate success rate is the exact mean of flags") {
    TrialSpec spec = iht_hadamard_spec();
    spec.trials = 8;
    auto results = run_all_trials(spec);
    std::size_t succ = 0;
    for (const auto& r : results) succ += r.success ? 1 : 0;
    CHECK(aggregate_results(results).success_rate ==
          static_cast<double>(succ) / static_cast<double>(results.size()));
}

TEST_CASE("parallel and serial batches produce identical files") {
    TempDir dir("harness_par");
    TrialSpec spec = iht_hadamard_spec();
    spec.trials = 8;
    spec.threads = 1;
    run_experiment(spec, dir.file("serial"));
    spec.threads = 4;
    run_experiment(spec, dir.file("parallel"));
    CHECK(testsupport::slurp(dir.file("serial") / "trials.csv") ==
          testsupport::slurp(dir.file("parallel") / "trials.csv"));
    CHECK(testsupport::slurp(dir.file("serial") / "aggregate.csv") ==
          testsupport::slurp(dir.file("parallel") / "aggregate.csv"));
}

TEST_CASE("re-running a batch reproduces byte-identical CSVs") {
    TempDir dir("harness_rerun");
    TrialSpec spec = iht_hadamard_spec();
    run_experiment(spec, dir.file("a"));
    run_experiment(spec, dir.file("b"));
    std::string ta = testsupport::slurp(dir.file("a") / "trials.csv");
    CHECK(!ta.empty());
    CHECK(ta == testsupport::slurp(dir.file("b") / "trials.csv"));
    CHECK(testsupport::slurp(dir.file("a") / "aggregate.csv") ==
          testsupport::slurp(dir.file("b") / "aggregate.csv"));
    CHECK(ta.rfind(kTrialCsvHeader, 0) == 0);
}

TEST_CASE("unwritable output path fails before any trial runs") {
    TempDir dir("harness_unwritable");
    testsupport::spit(dir.file("blocker"), "not a directory\n");
    TrialSpec spec = iht_hadamard_spec();
    CHECK_THROWS_AS(run_experiment(spec, dir.file("blocker") / "out"), io_error);
}

TEST_CASE("failed trials are recorded without aborting the batch") {
    TrialSpec spec;
    spec.ensemble = Ensemble::gaussian;
    spec.n = 2;
    spec.N = 3;
    spec.k = 3; // OMP on a rank-2 frame with k = 3 hits a singular Gram
    spec.algorithm = Algorithm::omp;
    spec.base_seed = 77;
    spec.trials = 3;
    spec.conv_tol = 1e-300; // keep the tiny post-projection residual from stopping it early
    auto results = run_all_trials(spec);
    Aggregate agg = aggregate_results(results);
    CHECK(agg.trials == 3);
    CHECK(agg.errors == 3);
    for (const auto& r : results) {
        REQUIRE(r.error.has_value());
        CHECK(!r.success);
    }
}

TEST_CASE("config files parse into trial specs") {
    std::istringstream is(
        "# acceptance-style spec\n"
        "ensemble = id_hadamard\n"
        "n = 64\n"
        "N = 128\n"
        "k = 2\n"
        "algorithm = iht\n"
        "magnitude_ratio = 3\n"
        "base_seed = 42\n"
        "trials = 10\n"
        "record_gamma = true\n"
        "max_iters = 500\n"
        "conv_tol = 1e-11\n"
        "threads = 2\n");
    TrialSpec spec = parse_trial_spec(is);
    CHECK(spec.ensemble == Ensemble::id_hadamard);
    CHECK(spec.n == 64);
    CHECK(spec.N == 128);
    CHECK(spec.k == 2);
    CHECK(spec.algorithm == Algorithm::iht);
    CHECK(spec.magnitude_ratio == 3.0);
    CHECK(spec.base_seed == 42);
    CHECK(spec.trials == 10);
    CHECK(spec.record_gamma);
    CHECK(spec.max_iters == 500);
    CHECK(spec.conv_tol == 1e-11);
    CHECK(spec.threads == 2);
}

TEST_CASE("config parsing rejects unknown keys and bad values with line numbers") {
    {
        std::istringstream is("ensemble = gaussian\nnot_a_key = 3\n");
        try {
            parse_trial_spec(is);
            FAIL("expected format_error");
        } catch (const format_error& e) {
            CHECK(e.line() == 2);
        }
    }
    {
        std::istringstream is("n = sixty\n");
        try {
            parse_trial_spec(is);
            FAIL("expected format_error");
        } catch (const format_error& e) {
            CHECK(e.line() == 1);
        }
    }
    {
        std::istringstream is("ensemble gaussian\n");
        CHECK_THROWS_AS(parse_trial_spec(is), format_error);
    }
    {
        // semantically invalid spec: k > N
        std::istringstream is("ensemble = gaussian\nn = 4\nN = 8\nk = 9\nalgorithm = iht\n");
        CHECK_THROWS_AS(parse_trial_spec(is), std::invalid_argument);
    }
}

TEST_CASE("ist_fixed specs take exactly one of lambda / lambda_rel") {
    TrialSpec spec;
    spec.ensemble = Ensemble::gaussian;
    spec.n = 8;
    spec.N = 16;
    spec.k = 2;
    spec.algorithm = Algorithm::ist_fixed;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec.lambda = 0.25;
    CHECK_NOTHROW(spec.validate());
    spec.lambda_rel = 0.1;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec.lambda = 0.0;
    CHECK_NOTHROW(spec.validate());
    TrialResult r = run_trial(spec, 0);
    CHECK(!r.error.has_value());
}

TEST_CASE("schedule expansion walks down to the floor") {
    ScheduleSpec sp{1.0, 0.5, 0.1};
    std::vector<double> s = sp.expand(100);
    REQUIRE(s.size() == 5);
    CHECK(s[0] == 1.0);
    CHECK(s[1] == 0.5);
    CHECK(s[2] == 0.25);
    CHECK(s[3] == 0.125);
    CHECK(s[4] == 0.1);
    // cap respected
    CHECK(sp.expand(3).size() == 3);
    CHECK_THROWS_AS((ScheduleSpec{1.0, 1.5, 0.1}.expand(10)), std::invalid_argument);
    CHECK_THROWS_AS((ScheduleSpec{1.0, 0.5, 2.0}.expand(10)), std::invalid_argument);
}

TEST_CASE("ita trials respect the theorem-2 steady state") {
    TrialSpec spec;
    spec.ensemble = Ensemble::id_hadamard;
    spec.n = 64;
    spec.N = 128;
    spec.k = 2;
    spec.algorithm = Algorithm::ita_schedule;
    spec.mode = ThresholdMode::hard;
    spec.schedule = ScheduleSpec{2.0, 0.9, 1e-8};
    spec.record_gamma = true;
    spec.base_seed = 7000;
    spec.max_iters = 2000;
    TrialRun run = run_trial_full(spec, 0);
    REQUIRE(!run.result.error.has_value());
    double gmax = 0.0;
    for (const auto& row : run.solve.trace) {
        REQUIRE(row.gamma.has_value());
        gmax = std::max(gmax, *row.gamma);
    }
    REQUIRE(gmax < 1.0);
    double lam_final = run.solve.trace.back().lambda;
    double err_final = *run.solve.trace.back().err_l2;
    CHECK(err_final <= std::sqrt(64.0) * lam_final / (1.0 - gmax) + 1e-9);
}
