#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <string>

#include "sparseiter/io.hpp"
#include "support/tmpdir.hpp"

using testsupport::TempDir;

namespace {

std::string cli_path() {
    const char* p = std::getenv("SPARSEITER_CLI");
    REQUIRE(p != nullptr);
    return p;
}

struct CmdResult {
    int exit_code;
    std::string out;
};

CmdResult run(const std::string& args, const TempDir& dir) {
    auto out_file = dir.file("cmd_out.txt");
    std::string cmd = cli_path() + " " + args + " > " + out_file.string() + " 2>&1";
    int rc = std::system(cmd.c_str());
    CmdResult r;
    r.exit_code = WEXITSTATUS(rc);
    r.out = testsupport::slurp(out_file);
    return r;
}

} // namespace

TEST_CASE("cli gen + coherence round trip") {
    TempDir dir("cli_gen");
    auto m = dir.file("m.txt").string();
    CHECK(run("gen matrix --ensemble id-hadamard --n 16 --out " + m, dir).exit_code == 0);
    CmdResult c = run("coherence " + m, dir);
    CHECK(c.exit_code == 0);
    CHECK(c.out == "0.25\n");
}

TEST_CASE("cli solve writes traces and verify accepts them") {
    TempDir dir("cli_solve");
    auto m = dir.file("m.txt").string();
    auto s = dir.file("s.txt").string();
    auto tr = dir.file("trace.csv").string();
    REQUIRE(run("gen matrix --ensemble id-hadamard --n 64 --out " + m, dir).exit_code == 0);
    REQUIRE(run("gen signal --N 128 --k 2 --ratio 1 --seed 9 --out " + s, dir).exit_code == 0);

    CmdResult sol = run("solve --algo iht --matrix " + m + " --truth " + s + " --k 2 --trace " + tr,
                        dir);
    CHECK(sol.exit_code == 0);
    CHECK(sol.out.find("status=converged") != std::string::npos);
    CHECK(sol.out.find("support_match=true") != std::string::npos);

    CmdResult ver = run("verify --trace " + tr + " --truth " + s + " --mu 0.125 --mode hard", dir);
    CHECK(ver.exit_code == 0);
    CHECK(ver.out.find("violations=0") != std::string::npos);
}

TEST_CASE("cli solve accepts an explicit measurement vector") {
    TempDir dir("cli_y");
    auto m = dir.file("m.txt").string();
    auto s = dir.file("s.txt").string();
    auto y = dir.file("y.txt").string();
    REQUIRE(run("gen matrix --ensemble id-hadamard --n 32 --out " + m, dir).exit_code == 0);
    REQUIRE(run("gen signal --N 64 --k 2 --seed 4 --out " + s, dir).exit_code == 0);
    REQUIRE(run("gen y --matrix " + m + " --truth " + s + " --out " + y, dir).exit_code == 0);
    CmdResult sol = run("solve --algo omp --matrix " + m + " --y " + y + " --k 2", dir);
    CHECK(sol.exit_code == 0);
    CHECK(sol.out.find("support_size=2") != std::string::npos);
}

TEST_CASE("cli check reports and gates on the theorem condition") {
    TempDir dir("cli_check");
    auto m = dir.file("m.txt").string();
    auto ok = dir.file("ok.txt").string();
    auto bad = dir.file("bad.txt").string();
    REQUIRE(run("gen matrix --ensemble id-hadamard --n 256 --out " + m, dir).exit_code == 0);
    REQUIRE(run("gen signal --N 512 --k 5 --seed 1 --out " + ok, dir).exit_code == 0);
    REQUIRE(run("gen signal --N 512 --k 9 --seed 1 --out " + bad, dir).exit_code == 0);

    CmdResult good = run("check --theorem thm3 --matrix " + m + " --truth " + ok, dir);
    CHECK(good.exit_code == 0);
    CHECK(good.out.find("coherence_ok=true") != std::string::npos);
    CHECK(good.out.find("iteration_bound=30") != std::string::npos);

    // k = 9 violates even the OMP condition (9 > 8.5)
    CmdResult fail = run("check --theorem thm1 --matrix " + m + " --truth " + bad, dir);
    CHECK(fail.exit_code == 4);
    CHECK(fail.out.find("coherence_ok=false") != std::string::npos);
}

TEST_CASE("cli exit codes distinguish error classes") {
    TempDir dir("cli_err");
    auto m = dir.file("m.txt").string();
    REQUIRE(run("gen matrix --ensemble id-hadamard --n 8 --out " + m, dir).exit_code == 0);

    // argument error: unknown algorithm
    CHECK(run("solve --algo nope --matrix " + m + " --k 1", dir).exit_code == 1);
    // argument error: flag parse failure
    CHECK(run("solve --matrix " + m, dir).exit_code == 1);
    // format error: malformed matrix file
    testsupport::spit(dir.file("badm.txt"), "2 3\n1 2\n");
    CHECK(run("coherence " + dir.file("badm.txt").string(), dir).exit_code == 2);
    // missing file is a format/io failure
    CHECK(run("coherence " + dir.file("missing.txt").string(), dir).exit_code == 2);
    // argument error: coherence is defined for unit-norm columns
    testsupport::spit(dir.file("unnorm.txt"), "2 2\n2 0\n0 1\n");
    CHECK(run("coherence " + dir.file("unnorm.txt").string(), dir).exit_code == 1);

    // numerical error: OMP on a rank-deficient frame with k past the rank
    double s = 1.0 / std::sqrt(2.0);
    std::ostringstream rank2;
    rank2 << "2 3\n1 0 " << sparseiter::format_g17(s) << "\n0 1 " << sparseiter::format_g17(s)
          << "\n";
    testsupport::spit(dir.file("rank2.txt"), rank2.str());
    testsupport::spit(dir.file("y2.txt"), "2 1\n0.3\n0.7\n");
    CHECK(run("solve --algo omp --matrix " + dir.file("rank2.txt").string() + " --y " +
                  dir.file("y2.txt").string() + " --k 3 --conv-tol 1e-300",
              dir)
              .exit_code == 3);
}

TEST_CASE("cli runs schedule-driven solves") {
    TempDir dir("cli_ita");
    auto m = dir.file("m.txt").string();
    auto s = dir.file("s.txt").string();
    REQUIRE(run("gen matrix --ensemble id-hadamard --n 32 --out " + m, dir).exit_code == 0);
    REQUIRE(run("gen signal --N 64 --k 2 --seed 12 --out " + s, dir).exit_code == 0);
    CmdResult sol = run("solve --algo ita --matrix " + m + " --truth " + s +
                            " --mode hard --schedule 2.0,0.85,1e-7 --max-iters 500 --record-gamma",
                        dir);
    CHECK(sol.exit_code == 0);
    CHECK(sol.out.find("support_match=true") != std::string::npos);
}

TEST_CASE("cli bench reproduces byte-identical outputs") {
    TempDir dir("cli_bench");
    auto cfg = dir.file("cfg.txt");
    testsupport::spit(cfg,
                      "ensemble = id_hadamard\n"
                      "n = 64\nN = 128\nk = 2\n"
                      "algorithm = iht\n"
                      "base_seed = 31\ntrials = 5\n");
    auto out1 = dir.file("out1").string();
    auto out2 = dir.file("out2").string();
    CmdResult b1 = run("bench --config " + cfg.string() + " --out " + out1, dir);
    REQUIRE(b1.exit_code == 0);
    CHECK(b1.out.find("success_rate") != std::string::npos);
    CmdResult b2 = run("bench --config " + cfg.string() + " --out " + out2, dir);
    REQUIRE(b2.exit_code == 0);
    CHECK(testsupport::slurp(dir.file("out1") / "trials.csv") ==
          testsupport::slurp(dir.file("out2") / "trials.csv"));
    CHECK(testsupport::slurp(dir.file("out1") / "aggregate.csv") ==
          testsupport::slurp(dir.file("out2") / "aggregate.csv"));

    // config format errors exit 2
    testsupport::spit(dir.file("bad.cfg"), "walrus = 9\n");
    CHECK(run("bench --config " + dir.file("bad.cfg").string() + " --out " + out1, dir).exit_code ==
          2);
}

TEST_CASE("cli verify flags violations with exit 4") {
    TempDir dir("cli_verify4");
    auto s = dir.file("s.txt");
    testsupport::spit(s, "16 2\n3 1\n7 -1\n");
    // fabricated trace whose post-detection error is far above the bound
    testsupport::spit(dir.file("t.csv"),
                      "iter,lambda,support_size,detected,err_l2,err_zmax,support_changed,gamma\n"
                      "1,0.5,2,2,0.5,0.9,1,\n"
                      "2,0.1,2,2,0.4,0.9,0,\n");
    CmdResult v = run("verify --trace " + dir.file("t.csv").string() + " --truth " + s.string() +
                          " --mu 0.0625 --mode hard",
                      dir);
    CHECK(v.exit_code == 4);
    CHECK(v.out.find("lemma5_decay") != std::string::npos);

    // a trace that never detects is a distinguished outcome, also exit 4
    testsupport::spit(dir.file("nd.csv"),
                      "iter,lambda,support_size,detected,err_l2,err_zmax,support_changed,gamma\n"
                      "1,0.5,1,1,0.5,0.2,1,\n");
    CmdResult nd = run("verify --trace " + dir.file("nd.csv").string() + " --truth " + s.string() +
                           " --mu 0.0625 --mode hard",
                       dir);
    CHECK(nd.exit_code == 4);
    CHECK(nd.out.find("never_detected") != std::string::npos);
}
