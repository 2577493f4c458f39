#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fraccyl/cli.hpp"
#include "fraccyl/config.hpp"

using namespace fraccyl;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
    std::vector<const char*> argv = {"fraccyl"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("fraccyl_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static inline int counter = 0;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::string s((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
    return s;
}

}  // namespace

TEST_CASE("empty config yields full defaults") {
    const Config cfg = Config::parse("");
    CHECK(cfg.s == 0.9);
    CHECK(cfg.p == 2.5);
    CHECK(cfg.ell_list == std::vector<double>{2.0, 4.0, 8.0, 16.0});
}

TEST_CASE("config round-trips through the canonical form") {
    const Config cfg = Config::parse("[problem]\ns = 0.85\np = 3\n");
    CHECK(cfg.s == 0.85);
    CHECK(cfg.p == 3.0);
    const std::string canon = cfg.canonical_text();
    const Config back = Config::parse(canon);
    CHECK(back.canonical_text() == canon);
    CHECK(back.digest() == cfg.digest());
    CHECK(cfg.digest().size() == 16);
}

TEST_CASE("config collects every violation") {
    try {
        Config::parse("[problem]\ns = 1.5\np = 1.0\n[grid]\nh = -1\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("s must lie in (0,1)") != std::string::npos);
        CHECK(msg.find("p must be >= 2") != std::string::npos);
        CHECK(msg.find("h must be > 0") != std::string::npos);
    }
}

TEST_CASE("config rejects unknown keys and malformed lines") {
    CHECK_THROWS_AS(Config::parse("[problem]\nbogus = 1\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("[nosuch]\ns = 0.5\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("[problem]\nno equals sign\n"), ConfigError);
}

TEST_CASE("rate config enforces the rate-regime hypotheses") {
    const Config cfg = Config::parse("[problem]\ns = 0.6\np = 2.5\n");
    CHECK_THROWS_AS(cfg.rate_config().validate(), ConfigError);
}

TEST_CASE("constants subcommand prints and exits zero") {
    CHECK(run({"constants", "--N", "2", "--s", "0.9", "--p", "2.5"}) == 0);
}

TEST_CASE("unknown subcommand exits with a usage error") {
    CHECK(run({"frobnicate"}) == 1);
}

TEST_CASE("solve-cross-section writes solution, report, and manifest") {
    TempDir tmp;
    const auto cfgfile = tmp.path / "c.ini";
    std::ofstream(cfgfile) << "[grid]\nh = 0.25\n[solver]\ngrad_tol = 1e-6\n"
                              "[problem]\ns = 0.5\np = 2\n";
    const auto out = tmp.path / "run1";
    CHECK(run({"solve-cross-section", "--config", cfgfile.string(), "--out",
               out.string()}) == 0);
    CHECK(fs::exists(out / "solution.csv"));
    CHECK(fs::exists(out / "report.json"));
    CHECK(fs::exists(out / "manifest.json"));
    CHECK(fs::exists(out / "config.canonical"));

    // rerun without --force refuses; with --force succeeds
    CHECK(run({"solve-cross-section", "--config", cfgfile.string(), "--out",
               out.string()}) == 1);
    CHECK(run({"solve-cross-section", "--config", cfgfile.string(), "--out",
               out.string(), "--force"}) == 0);
}

TEST_CASE("verify inequalities passes and produces a summary") {
    TempDir tmp;
    const auto out = tmp.path / "ineq";
    CHECK(run({"verify", "inequalities", "--p", "2.5", "--samples", "20000",
               "--seed", "7", "--out", out.string()}) == 0);
    const std::string summary = slurp(out / "summary.json");
    CHECK(summary.find("\"pass\": true") != std::string::npos);
    CHECK(fs::exists(out / "inequalities.csv"));
}

TEST_CASE("verify cutoff passes") {
    TempDir tmp;
    const auto out = tmp.path / "cutoff";
    CHECK(run({"verify", "cutoff", "--out", out.string()}) == 0);
}

TEST_CASE("bad config path exits with a configuration error") {
    CHECK(run({"solve-elliptic", "--config", "/nonexistent/x.ini"}) == 1);
}

TEST_CASE("study outputs are byte-identical across reruns") {
    TempDir tmp;
    const auto cfgfile = tmp.path / "study.ini";
    std::ofstream(cfgfile)
        << "[grid]\nh = 0.5\n[study]\nell_list = 1,2\nell0 = 0.5\n"
           "[solver]\ngrad_tol = 1e-6\n";
    const auto out1 = tmp.path / "r1";
    const auto out2 = tmp.path / "r2";
    CHECK(run({"rate-elliptic", "--config", cfgfile.string(), "--out",
               out1.string(), "--threads", "1"}) == 0);
    CHECK(run({"rate-elliptic", "--config", cfgfile.string(), "--out",
               out2.string(), "--threads", "1"}) == 0);
    CHECK(slurp(out1 / "errors.csv") == slurp(out2 / "errors.csv"));
    CHECK(slurp(out1 / "loglog.csv") == slurp(out2 / "loglog.csv"));
    CHECK(slurp(out1 / "study.json") == slurp(out2 / "study.json"));
    CHECK(!slurp(out1 / "errors.csv").empty());
}
