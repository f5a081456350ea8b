#include <doctest.h>

#include "swdiff/cli.hpp"
#include "swdiff/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

using namespace swdiff;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("/tmp/swdiff_test_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

}  // namespace

TEST_CASE("config parser") {
    const Config cfg = parse_config_text(
        "# comment\n"
        "[run]\n"
        "seed=9\n"
        "paths = 100\n"
        "[model]\n"
        "name=holder-rate\n"
        "lambda=0.5\n");
    CHECK(cfg.run.at("seed") == "9");
    CHECK(cfg.run.at("paths") == "100");
    CHECK(cfg.model_name == "holder-rate");
    CHECK(cfg.model_params.at("lambda") == 0.5);

    CHECK_THROWS_AS(parse_config_text("[run]\nbogus=1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[nosuch]\nk=1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[run]\nnot a kv line\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[model]\nc1=abc\n"), ConfigError);
}

TEST_CASE("rate table config and lv spec") {
    const Config cfg = parse_config_text(
        "[lotka]\n"
        "rates=table\n"
        "[table]\n"
        "s=0,1,2\n"
        "q1=-0.5,0.5,0.3,-0.3\n"
        "q2=-0.6,0.6,0.2,-0.2\n"
        "q3=-0.7,0.7,0.1,-0.1\n");
    const LVSpec spec = lv_spec_from_config(cfg);
    Vec x(2);
    x << 0.25, 0.25;  // |x|_1 = 0.5: halfway between the first two knots
    const Mat q = spec.rates(x);
    CHECK(q(0, 1) == doctest::Approx(0.55));
    CHECK(q(1, 0) == doctest::Approx(0.25));
}

TEST_CASE("validate rejects a broken table row with exit code 2") {
    TempFile cfg("validate.cfg");
    write_file(cfg.path,
               "[lotka]\n"
               "rates=table\n"
               "[table]\n"
               "s=0,1\n"
               "q1=-0.5,0.5,0.3,-0.3\n"
               "q2=-0.5,0.6,0.3,-0.3\n");  // row 1 sums to 0.1
    CHECK(cli::run({"validate", "--config", cfg.path}) == 2);
}

TEST_CASE("validate passes on builtin models") {
    CHECK(cli::run({"validate", "--model", "smooth-q", "--x0", "0.3"}) == 0);
}

TEST_CASE("usage errors exit with 2") {
    CHECK(cli::run({"nosuchcommand"}) == 2);
    CHECK(cli::run({"lp-study", "--model", "nosuchmodel", "--paths", "200"}) == 2);
    CHECK(cli::run({"counterexample", "--n", "abc"}) == 2);
}

TEST_CASE("byte-identical reruns and thread invariance") {
    TempFile a("rerun_a.csv"), b("rerun_b.csv"), c("rerun_c.csv");
    const std::vector<std::string> base = {"decouple",  "--model", "counterexample",
                                           "--x0",      "1.0",     "--deltas",
                                           "0.2,0.1",   "--paths", "2000",
                                           "--steps",   "50",      "--seed",
                                           "12",        "--out",   ""};
    auto with_out = [&](const std::string& path, const std::string& threads) {
        std::vector<std::string> args = base;
        args.back() = path;
        args.push_back("--threads");
        args.push_back(threads);
        return args;
    };
    CHECK(cli::run(with_out(a.path, "1")) == 0);
    CHECK(cli::run(with_out(b.path, "1")) == 0);
    CHECK(cli::run(with_out(c.path, "3")) == 0);
    const std::string ta = slurp(a.path);
    CHECK(!ta.empty());
    CHECK(ta == slurp(b.path));
    CHECK(ta == slurp(c.path));
    // preamble carries version, config echo, seed
    CHECK(ta.rfind("# swdiff", 0) == 0);
    CHECK(ta.find("# seed=12") != std::string::npos);
    CHECK(ta.find("model=counterexample") != std::string::npos);
}

TEST_CASE("simulate dump has the documented shape") {
    TempFile out("sim.csv");
    CHECK(cli::run({"simulate", "--model", "markovian-linear", "--x0", "1.0", "--steps", "10",
                    "--out", out.path}) == 0);
    const std::string text = slurp(out.path);
    CHECK(text.find("t,x_1,alpha\n") != std::string::npos);
    CHECK(text.find("# seed=1") != std::string::npos);
}

TEST_CASE("config file drives a run and flags override it") {
    TempFile cfg("drive.cfg"), out1("drive1.csv"), out2("drive2.csv");
    write_file(cfg.path,
               "[run]\n"
               "model=counterexample\n"
               "x0=1.0\n"
               "paths=1500\n"
               "steps=40\n"
               "seed=21\n"
               "deltas=0.2,0.1\n");
    CHECK(cli::run({"decouple", "--config", cfg.path, "--out", out1.path}) == 0);
    const std::string t1 = slurp(out1.path);
    CHECK(t1.find("paths=1500") != std::string::npos);
    CHECK(cli::run({"decouple", "--config", cfg.path, "--paths", "800", "--out", out2.path}) == 0);
    const std::string t2 = slurp(out2.path);
    CHECK(t2.find("paths=800") != std::string::npos);
}

TEST_CASE("check flag gates the counterexample acceptance") {
    TempFile out("cx.csv");
    CHECK(cli::run({"counterexample", "--n", "10", "--T", "1", "--paths", "100000", "--seed", "7",
                    "--check", "--out", out.path}) == 0);
    const std::string text = slurp(out.path);
    CHECK(text.find("n,T,estimate,stderr,lower_bound,oracle") != std::string::npos);
}
