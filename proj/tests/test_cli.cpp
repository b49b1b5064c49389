#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "doctest.h"
#include "json.hpp"
#include "proxops/cli.hpp"

using namespace proxops;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("proxops_cli_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("run writes every artifact") {
    const fs::path dir = fresh_dir("run");
    const CliResult r = cli({"run", "--scenario", "standoff", "--rta", "on", "--seed", "7", "--out", dir.string()});
    CHECK(r.code == 0);
    for (const char* f : {"trajectory.csv", "metrics.json", "plot_data.csv", "crossings.csv", "effective_config.json"})
        CHECK(fs::exists(dir / f));
    const auto m = nlohmann::json::parse(slurp(dir / "metrics.json"));
    CHECK(m["aggregate"]["targets_reached"] == 8);
    CHECK(slurp(dir / "plot_data.csv").rfind("t,", 0) == 0);
    CHECK(r.out.find("8/8") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("unknown scenario is a usage error and writes nothing") {
    const fs::path dir = fresh_dir("unknown");
    const CliResult r = cli({"run", "--scenario", "nope", "--out", dir.string()});
    CHECK(r.code == 2);
    CHECK_FALSE(r.err.empty());
    CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("usage errors") {
    CHECK(cli({"run", "--bogus"}).code == 2);
    CHECK(cli({}).code == 2);
    CHECK(cli({"run", "--scenario", "single", "--rta", "maybe"}).code == 2);
    CHECK(cli({"run", "--scenario", "single", "--controller", "policy:/nonexistent.json",
               "--out", fresh_dir("nopolicy").string()}).code == 2);
    CHECK_FALSE(fs::exists(fresh_dir("nopolicy")));
    CHECK(cli({"run", "--scenario", "single", "--control-dt", "0.05", "--sim-dt", "0.1",
               "--out", fresh_dir("baddt").string()}).code == 2);
    CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("same seed gives byte-identical CSVs") {
    const fs::path a = fresh_dir("det_a"), b = fresh_dir("det_b");
    REQUIRE(cli({"run", "--scenario", "standoff", "--rta", "on", "--seed", "3", "--out", a.string()}).code == 0);
    REQUIRE(cli({"run", "--scenario", "standoff", "--rta", "on", "--seed", "3", "--out", b.string()}).code == 0);
    CHECK(slurp(a / "trajectory.csv") == slurp(b / "trajectory.csv"));
    CHECK(slurp(a / "plot_data.csv") == slurp(b / "plot_data.csv"));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("effective config reproduces the run") {
    const fs::path a = fresh_dir("cfg_a"), b = fresh_dir("cfg_b");
    REQUIRE(cli({"run", "--scenario", "single", "--control-dt", "0.5", "--sim-dt", "0.05", "--seed", "9",
                 "--out", a.string()}).code == 0);
    REQUIRE(cli({"run", "--config", (a / "effective_config.json").string(), "--out", b.string()}).code == 0);
    CHECK(slurp(a / "trajectory.csv") == slurp(b / "trajectory.csv"));
    CHECK(slurp(a / "effective_config.json") == slurp(b / "effective_config.json"));

    const ScenarioSpec s = parse_config(slurp(a / "effective_config.json"));
    CHECK(dump_config(s) == slurp(a / "effective_config.json"));
    CHECK(s.control_dt == 0.5);
    CHECK(s.seed == 9);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("config parsing") {
    const ScenarioSpec s = parse_config(R"({"scenario": {"name": "standoff"}, "rta": {"enabled": true, "r_c": 40}})");
    CHECK(s.agents.size() == 2);
    CHECK(s.rta_enabled);
    CHECK(s.rta.r_c == 40.0);
    CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"scenario": {"name": "elsewhere"}})"), ConfigError);
    CHECK_THROWS_AS(scenario_by_name("x", false), ConfigError);
    CHECK(parse_controller("baseline").kind == ControllerKind::Baseline);
    CHECK(parse_controller("policy:/a/b.json").policy_path == "/a/b.json");
    CHECK_THROWS_AS(parse_controller("pid"), ConfigError);
}

TEST_CASE("train") {
    const fs::path zero = fresh_dir("train0");
    CliResult r = cli({"train", "--steps", "0", "--eval-episodes", "2", "--out", zero.string()});
    CHECK(r.code == 0);
    CHECK(fs::exists(zero / "policy.json"));
    CHECK(fs::exists(zero / "learning_curve.csv"));

    const std::vector<std::string> small{"--steps", "1024", "--batch-size", "512", "--minibatch-size", "128",
                                         "--epochs", "2", "--num-envs", "4", "--eval-episodes", "2", "--seed", "5"};
    auto with = [&](std::vector<std::string> head, const fs::path& out) {
        head.insert(head.end(), small.begin(), small.end());
        head.push_back("--out");
        head.push_back(out.string());
        return cli(head);
    };
    const fs::path a = fresh_dir("train_a"), b = fresh_dir("train_b");
    REQUIRE(with({"train"}, a).code == 0);
    REQUIRE(with({"train"}, b).code == 0);
    CHECK(slurp(a / "policy.json") == slurp(b / "policy.json"));
    CHECK(slurp(a / "learning_curve.csv") == slurp(b / "learning_curve.csv"));

    const fs::path c = fresh_dir("train_c");
    REQUIRE(with({"train", "--resume", (a / "policy.json").string()}, c).code == 0);
    CHECK(slurp(c / "policy.json") != slurp(a / "policy.json"));

    CHECK(cli({"train", "--resume", "/nonexistent.json", "--out", fresh_dir("train_bad").string()}).code == 2);
    for (const auto& d : {zero, a, b, c}) fs::remove_all(d);
}

TEST_CASE("baseline-stats") {
    CliResult r = cli({"baseline-stats", "--trials", "1", "--json"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["trials"] == 1);

    r = cli({"baseline-stats", "--trials", "3", "--seed", "4"});
    CHECK(r.code == 0);
    CHECK(r.out == cli({"baseline-stats", "--trials", "3", "--seed", "4"}).out);
    CHECK(cli({"baseline-stats", "--trials", "-1"}).code == 2);

    const fs::path f = fs::temp_directory_path() / "proxops_cli_stats.json";
    r = cli({"baseline-stats", "--json", "--workers", "2", "--out", f.string()});
    REQUIRE(r.code == 0);
    CHECK(nlohmann::json::parse(slurp(f))["trials"] == 50);
    fs::remove(f);
}

TEST_CASE("the installed executable reports exit codes") {
    const std::string exe = PROXOPS_CLI_PATH;
    const fs::path dir = fresh_dir("exe");
    int status = std::system((exe + " run --scenario nope --out " + dir.string() + " 2>/dev/null").c_str());
    CHECK(WEXITSTATUS(status) == 2);
    status = std::system((exe + " run --scenario single --out " + dir.string() + " >/dev/null").c_str());
    CHECK(WEXITSTATUS(status) == 0);
    CHECK(fs::exists(dir / "trajectory.csv"));
    fs::remove_all(dir);
}

}  // TEST_SUITE
