#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "plirl/experiment.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace plirl;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliResult {
    int code = -1;
    std::string err;
};

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("plirl_test_experiment_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

CliResult cli(const std::string& args, const fs::path& dir) {
    fs::path err = dir / "stderr.txt";
    std::string cmd = std::string("\"") + PLIRL_CLI_PATH + "\" " + args + " > \"" + (dir / "stdout.txt").string() +
                      "\" 2> \"" + err.string() + "\"";
    int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(err);
    std::stringstream ss;
    ss << in.rdbuf();
    r.err = ss.str();
    return r;
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in);
    return json::parse(in);
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_config(const fs::path& dir, const std::string& name, const json& j) {
    fs::path p = dir / name;
    std::ofstream(p) << j.dump(2);
    return p;
}

json quadratic_config() {
    return json::parse(R"({
      "schema": "plirl-experiment/1",
      "name": "quad",
      "seed": 5,
      "problem": {"kind": "quadratic", "curvature": 2.0, "dim": 1},
      "sampler": {"variant": "classical_langevin", "step": 0.01, "beta": 1.0, "num_steps": 200000}
    })");
}

}  // namespace

TEST_CASE("bundled quadratic config reaches the Gibbs variance") {
    fs::path dir = scratch("quadratic");
    auto r = cli("run \"" + std::string(PLIRL_CONFIG_DIR) + "/quadratic_oracle.json\" --out \"" + (dir / "run").string() +
                     "\"",
                 dir);
    REQUIRE(r.code == 0);
    json m = read_json(dir / "run" / "metrics.json");
    CHECK(m["target_variance"].get<double>() == doctest::Approx(0.5));
    for (auto& e : m["variance_relative_error"]) CHECK(std::abs(e.get<double>()) < 0.2);
    CHECK(fs::exists(dir / "run" / "manifest.json"));
    CHECK(fs::exists(dir / "run" / "trajectory_0.csv"));
    CHECK(fs::exists(dir / "run" / "trajectory_0.json"));
    CHECK(fs::exists(dir / "run" / "density.csv"));
    CHECK_FALSE(fs::exists(dir / "run" / "FAILED"));
}

TEST_CASE("reduced bimodal run reports per-marginal distances to the baseline") {
    fs::path dir = scratch("bimodal");
    json j = read_json(fs::path(PLIRL_CONFIG_DIR) / "bayes_bimodal.json");
    j["agents"]["num_agents"] = 500;
    j["sampler"]["num_steps"] = 20000;
    j["sampler"]["thin"] = 1;
    auto r = cli("run \"" + write_config(dir, "bimodal.json", j).string() + "\" --out \"" + (dir / "run").string() + "\"",
                 dir);
    REQUIRE(r.code == 0);
    json m = read_json(dir / "run" / "metrics.json");
    REQUIRE(m.contains("baseline"));
    json vd = m["baseline"]["variational_distance"];
    CHECK(vd.contains("d(1)"));
    CHECK(vd.contains("d(2)"));
    CHECK(m["baseline"]["w1"].size() == 2);
    CHECK(fs::exists(dir / "run" / "baseline_0.csv"));
    CHECK(fs::exists(dir / "run" / "baseline_density.csv"));
}

TEST_CASE("dimension mismatch is a config error naming both fields") {
    fs::path dir = scratch("mismatch");
    json j = quadratic_config();
    j["problem"]["dim"] = 2;
    j["sampler"]["init"] = {0.0};
    auto r = cli("run \"" + write_config(dir, "bad.json", j).string() + "\"", dir);
    CHECK(r.code == 2);
    CHECK(r.err.find("sampler.init") != std::string::npos);
    CHECK(r.err.find("problem.dim") != std::string::npos);
}

TEST_CASE("unknown fields and wrong schema are rejected") {
    json j = quadratic_config();
    j["sampler"]["stepsize"] = 0.1;
    CHECK_THROWS_WITH_AS(parse_experiment(j, ".", {}), doctest::Contains("sampler.stepsize"), ConfigError);
    j = quadratic_config();
    j["schema"] = "other/2";
    CHECK_THROWS_AS(parse_experiment(j, ".", {}), ConfigError);
    RunOverrides paper;
    paper.scale = "paper";
    CHECK_THROWS_WITH_AS(parse_experiment(quadratic_config(), ".", paper), doctest::Contains("scales.paper"),
                         ConfigError);
}

TEST_CASE("scale patch and overrides are folded into the echo") {
    json j = quadratic_config();
    j["scales"] = {{"paper", {{"sampler", {{"num_steps", 7}}}}}};
    RunOverrides o;
    o.scale = "paper";
    o.seed = 99;
    ExperimentConfig c = parse_experiment(j, ".", o);
    CHECK(c.num_steps == 7);
    CHECK(c.seed == 99);
    CHECK(c.echo["sampler"]["num_steps"] == 7);
    CHECK_FALSE(c.echo.contains("scales"));
}

TEST_CASE("comparing a run with itself gives zero distances") {
    fs::path dir = scratch("compare");
    auto r = cli("run \"" + write_config(dir, "q.json", quadratic_config()).string() + "\" --out \"" +
                     (dir / "run").string() + "\"",
                 dir);
    REQUIRE(r.code == 0);
    r = cli("compare \"" + (dir / "run").string() + "\" \"" + (dir / "run").string() + "\" --out \"" +
                (dir / "cmp.json").string() + "\"",
            dir);
    REQUIRE(r.code == 0);
    json c = read_json(dir / "cmp.json");
    CHECK(c["w1_summary"]["max"].get<double>() == 0.0);
    CHECK(c["variational_distance_summary"]["max"].get<double>() == 0.0);
}

TEST_CASE("compare rejects runs of different dimension") {
    fs::path dir = scratch("compare_dim");
    json one = quadratic_config(), two = quadratic_config();
    two["problem"]["dim"] = 2;
    REQUIRE(cli("run \"" + write_config(dir, "a.json", one).string() + "\" --out \"" + (dir / "a").string() + "\"", dir)
                .code == 0);
    REQUIRE(cli("run \"" + write_config(dir, "b.json", two).string() + "\" --out \"" + (dir / "b").string() + "\"", dir)
                .code == 0);
    auto r = cli("compare \"" + (dir / "a").string() + "\" \"" + (dir / "b").string() + "\"", dir);
    CHECK(r.code == 2);
    CHECK(r.err.find("dimension mismatch") != std::string::npos);
}

TEST_CASE("rerunning from the manifest reproduces the trajectories byte for byte") {
    fs::path dir = scratch("rerun");
    json j = quadratic_config();
    j["sampler"]["num_steps"] = 20000;
    auto r = cli("run \"" + write_config(dir, "q.json", j).string() + "\" --chains 2 --seed 17 --out \"" +
                     (dir / "first").string() + "\"",
                 dir);
    REQUIRE(r.code == 0);
    r = cli("run \"" + (dir / "first" / "manifest.json").string() + "\" --out \"" + (dir / "second").string() + "\"", dir);
    REQUIRE(r.code == 0);
    for (const char* f : {"trajectory_0.csv", "trajectory_1.csv"}) {
        std::string a = read_file(dir / "first" / f), b = read_file(dir / "second" / f);
        CHECK_FALSE(a.empty());
        CHECK(a == b);
    }
    CHECK(read_json(dir / "second" / "manifest.json")["seed"] == 17);
    std::string c0 = read_file(dir / "first" / "trajectory_0.csv"), c1 = read_file(dir / "first" / "trajectory_1.csv");
    CHECK(c0 != c1);
}

TEST_CASE("divergence leaves a FAILED marker and the manifest") {
    fs::path dir = scratch("diverge");
    json j = quadratic_config();
    j["problem"]["curvature"] = 1000.0;
    j["sampler"]["step"] = 10.0;
    auto r = cli("run \"" + write_config(dir, "d.json", j).string() + "\" --out \"" + (dir / "run").string() + "\"", dir);
    CHECK(r.code == 1);
    REQUIRE(fs::exists(dir / "run" / "FAILED"));
    CHECK(read_file(dir / "run" / "FAILED").find("non-finite") != std::string::npos);
    CHECK(fs::exists(dir / "run" / "manifest.json"));
    CHECK_FALSE(fs::exists(dir / "run" / "metrics.json"));
}

TEST_CASE("relative data paths resolve against the config directory") {
    fs::path dir = scratch("logistic");
    json j = json::parse(R"({
      "schema": "plirl-experiment/1",
      "name": "lr",
      "problem": {"kind": "logistic", "data": "synthetic_a9a.libsvm", "rows": 50, "features": 3},
      "sampler": {"variant": "classical_langevin", "step": 0.001, "num_steps": 10}
    })");
    ExperimentConfig c = parse_experiment(j, PLIRL_DATA_DIR, {});
    CHECK(c.dim == 4);
    CHECK(fs::path(c.echo["problem"]["data"].get<std::string>()).is_absolute());
    CHECK_THROWS_AS(parse_experiment(j, dir, {}), std::exception);
}

TEST_CASE("cmdp config rejects an oracle baseline") {
    json j = read_json(fs::path(PLIRL_CONFIG_DIR) / "cmdp_desk.json");
    j["sampler"]["baseline"] = "classical_langevin";
    CHECK_THROWS_WITH_AS(parse_experiment(j, PLIRL_CONFIG_DIR, {}), doctest::Contains("sampler.baseline"), ConfigError);
}
