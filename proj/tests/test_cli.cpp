#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "wcdp/runner.hpp"

using namespace wcdp;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("wcdp-cli-test-" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int run(const json& config, const fs::path& dir, const std::string& extra = "") {
    const auto cfg = dir / "config.json";
    std::ofstream(cfg) << config.dump(2);
    const std::string cmd = std::string(WCDP_CLI_PATH) + " --config " + cfg.string() + " --out " +
                            (dir / "out").string() + " " + extra + " 2>" + (dir / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

int compare(const std::vector<fs::path>& dirs, const fs::path& report) {
    std::string cmd = std::string(WCDP_CLI_PATH) + " compare";
    for (const auto& d : dirs) cmd += " " + (d / "out").string();
    cmd += " --out " + report.string() + " >/dev/null 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
}

// key|state -> value column of results.csv.
std::map<std::string, double> values(const fs::path& dir) {
    std::map<std::string, double> out;
    std::istringstream in(slurp(dir / "out" / "results.csv"));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::istringstream row(line);
        std::string key, state, value;
        std::getline(row, key, ',');
        std::getline(row, state, ',');
        std::getline(row, value, ',');
        out[key + "|" + state] = std::stod(value);
    }
    return out;
}

const json three_state_file = {{"file", std::string(WCDP_DATA_DIR) + "/three_state.json"}};
const json small_random = {{"generator", "random"}, {"N", 2}, {"states", 3}, {"actions", 2}, {"seed", 4}};

} // namespace

TEST_CASE("exact mode on the three-state model file reports 18, 0, 20") {
    const auto dir = scratch("exact");
    REQUIRE(run({{"mode", "exact"}, {"model", three_state_file}}, dir) == 0);
    const auto v = values(dir);
    CHECK(v.at("V|0") == doctest::Approx(18.0).epsilon(1e-9));
    CHECK(std::abs(v.at("V|1")) < 1e-9);
    CHECK(v.at("V|2") == doctest::Approx(20.0).epsilon(1e-9));
    const auto manifest = json::parse(slurp(dir / "out" / "manifest.json"));
    CHECK(manifest["version"] == wcdp_version);
    CHECK(manifest["summary"][0]["kind"] == "exact");
    CHECK(manifest.contains("wall_clock_seconds"));
    CHECK(manifest["fingerprint"].get<std::string>().size() == 16);
}

TEST_CASE("zero scenarios is a config error with a machine-readable record") {
    const auto dir = scratch("zero");
    CHECK(run({{"mode", "practical"}, {"model", three_state_file}, {"seed", 1}, {"n_scenarios", 0}}, dir) == 2);
    const auto err = json::parse(slurp(dir / "out" / "error.json"));
    CHECK(err["kind"] == "config-error");
    CHECK(err["exit_code"] == 2);
    CHECK(json::parse(slurp(dir / "stderr.txt"))["kind"] == "config-error");
}

TEST_CASE("stochastic modes need a seed unless one is passed on the command line") {
    const auto dir = scratch("seed");
    const json cfg = {{"mode", "info"}, {"model", three_state_file}, {"n_scenarios", 10}};
    CHECK(run(cfg, dir) == 2);
    CHECK(run(cfg, dir, "--seed 5") == 0);
    CHECK(json::parse(slurp(dir / "out" / "manifest.json"))["seeds"]["seed"] == 5);
}

TEST_CASE("rerunning the same config gives identical result bytes") {
    const auto a = scratch("rerun-a"), b = scratch("rerun-b");
    const json cfg = {{"mode", "practical"}, {"model", small_random}, {"seed", 3}, {"n_scenarios", 20}};
    REQUIRE(run(cfg, a) == 0);
    REQUIRE(run(cfg, b, "--threads 1") == 0);
    CHECK(slurp(a / "out" / "results.csv") == slurp(b / "out" / "results.csv"));
}

TEST_CASE("oversized joint state space is a guard violation") {
    const auto dir = scratch("guard");
    const json big = {{"generator", "random"}, {"N", 8}, {"states", 6}, {"actions", 2}, {"seed", 1}};
    CHECK(run({{"mode", "exact"}, {"model", big}}, dir) == 3);
    CHECK(json::parse(slurp(dir / "out" / "error.json"))["kind"] == "guard-violation");
}

TEST_CASE("unknown modes and malformed models are config errors") {
    const auto dir = scratch("bad");
    CHECK(run({{"mode", "nope"}, {"model", three_state_file}}, dir) == 2);
    CHECK(run({{"mode", "exact"}, {"model", {{"file", "does-not-exist.json"}}}}, dir) == 2);
}

TEST_CASE("compare: exact and info with the optimal value surrogate are flagged equal") {
    const auto e = scratch("cmp-exact"), i = scratch("cmp-info");
    REQUIRE(run({{"mode", "exact"}, {"model", small_random}}, e) == 0);
    REQUIRE(run({{"mode", "info"}, {"model", small_random}, {"penalty", "exact"}, {"seed", 2}, {"n_scenarios", 50}},
                i) == 0);
    const auto report = e / "report.csv";
    CHECK(compare({e, i}, report) == 0);
    CHECK(slurp(report).find("exact,info,") != std::string::npos);
    CHECK(slurp(report).find(",equal\n") != std::string::npos);
}

TEST_CASE("compare: ALP below the Lagrangian bound on the three-state model passes") {
    const auto l = scratch("cmp-lag"), a = scratch("cmp-alp");
    REQUIRE(run({{"mode", "lagrangian"}, {"model", three_state_file}}, l) == 0);
    REQUIRE(run({{"mode", "alp"}, {"model", three_state_file}}, a) == 0);
    CHECK(values(l).at("bound|point:0") == doctest::Approx(60.0));
    const auto report = l / "report.csv";
    CHECK(compare({l, a}, report) == 0);
    CHECK(slurp(report).find("alp,lagrangian,") != std::string::npos);
    CHECK(slurp(report).find(",pass\n") != std::string::npos);
}

TEST_CASE("compare: fingerprint mismatch is an error") {
    const auto a = scratch("fp-a"), b = scratch("fp-b");
    REQUIRE(run({{"mode", "exact"}, {"model", three_state_file}}, a) == 0);
    REQUIRE(run({{"mode", "exact"}, {"model", small_random}}, b) == 0);
    CHECK(compare({a, b}, a / "report.csv") == 2);
}

TEST_CASE("compare flags a violated ordering and rejects estimates without SE") {
    const json base = {{"fingerprint", "0123456789abcdef"}};
    auto lo = base, hi = base;
    lo["summary"] = json::array({{{"kind", "info"}, {"value", 10.0}, {"se", 0.1}, {"n", 100}, {"seed", 1},
                                  {"weighting", "point:0"}}});
    hi["summary"] = json::array({{{"kind", "lagrangian"}, {"value", 9.0}, {"se", 0.0}, {"n", 0}, {"seed", nullptr},
                                  {"weighting", "point:0"}}});
    const auto rep = compare_manifests({lo, hi});
    REQUIRE(rep.rows.size() == 1);
    CHECK(rep.rows[0].status == "violation");
    CHECK(rep.violations == 1);

    hi["summary"][0]["value"] = 10.2; // within 3 SE
    CHECK(compare_manifests({lo, hi}).rows[0].status == "pass");

    lo["summary"][0].erase("se");
    CHECK_THROWS_AS(compare_manifests({lo, hi}), ConfigError);
}

TEST_CASE("in-process config validation") {
    CHECK_THROWS_AS(parse_experiment(json::array()), ConfigError);
    CHECK_THROWS_AS(parse_experiment({{"mode", "info"}, {"model", small_random}, {"seed", 1}}), ConfigError);
    CHECK_THROWS_AS(parse_experiment({{"mode", "exact"}}), ConfigError);
    CHECK_NOTHROW(parse_experiment({{"mode", "bandit-table"}, {"seed", 1}}));
    const auto cfg = parse_experiment({{"mode", "info"}, {"model", small_random}, {"n_scenarios", 4}}, ".", 99);
    CHECK(cfg.document["seed"] == 99);
}

TEST_CASE("finite-horizon mode writes the whole chain") {
    const ExperimentConfig cfg = parse_experiment(
        {{"mode", "finite-horizon"}, {"model", small_random}, {"horizon", 3}, {"seed", 1}, {"n_scenarios", 20}});
    const auto out = run_experiment(cfg, Execution::serial);
    CHECK(out.manifest["summary"].size() == 4);
    const auto rep = compare_manifests({out.manifest});
    CHECK(rep.violations == 0);
    CHECK(rep.rows.size() == 6);
}
