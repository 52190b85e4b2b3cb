#include "plirl/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

constexpr int exit_runtime = 1;
constexpr int exit_config = 2;

int run_command(const std::string& config, const plirl::RunOverrides& overrides, int chains_flag) {
    int chains = 1;
    plirl::ExperimentConfig cfg = plirl::load_experiment(config, overrides, &chains);
    if (chains_flag > 0) chains = chains_flag;
    std::filesystem::path out = cfg.output;
    std::cerr << "plirl: running '" << cfg.name << "' (" << plirl::to_string(cfg.problem) << ", "
              << plirl::to_string(cfg.variant) << ", " << chains << " chain(s)) into " << out.string() << "\n";
    nlohmann::json metrics = plirl::run_experiment(cfg, out, chains);
    std::cout << metrics.dump(2) << "\n";
    return 0;
}

int compare_command(const std::string& a, const std::string& b, const std::string& out) {
    nlohmann::json r = plirl::compare_runs(a, b);
    if (!out.empty()) {
        std::ofstream os(out);
        if (!os) throw std::runtime_error("cannot write '" + out + "'");
        os << r.dump(2) << "\n";
    }
    std::cout << r.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Passive Langevin inverse reinforcement learning experiments"};
    app.set_version_flag("--version", plirl::library_version);
    app.require_subcommand(1);

    plirl::RunOverrides overrides;
    std::string config;
    std::uint64_t seed = 0;
    std::string out, data;
    int chains = 0;
    auto* run = app.add_subcommand("run", "Run an experiment config (or rerun a manifest.json)");
    run->add_option("config", config, "Experiment config or run manifest")->required()->check(CLI::ExistingFile);
    auto* seed_opt = run->add_option("--seed", seed, "Override the root seed");
    auto* out_opt = run->add_option("--out", out, "Output directory");
    run->add_option("--scale", overrides.scale, "Config scale")->check(CLI::IsMember({"desk", "paper"}));
    run->add_option("--chains", chains, "Independent chains")->check(CLI::PositiveNumber);
    auto* data_opt = run->add_option("--data", data, "Replacement data file for the logistic problem");

    std::string dir_a, dir_b, report;
    auto* cmp = app.add_subcommand("compare", "Distances between the samples of two run directories");
    cmp->add_option("run_a", dir_a, "First run directory")->required()->check(CLI::ExistingDirectory);
    cmp->add_option("run_b", dir_b, "Second run directory")->required()->check(CLI::ExistingDirectory);
    cmp->add_option("--out", report, "Write the report JSON here as well");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : exit_config;
    }

    try {
        if (*run) {
            if (*seed_opt) overrides.seed = seed;
            if (*out_opt) overrides.output = out;
            if (*data_opt) overrides.data = data;
            return run_command(config, overrides, chains);
        }
        return compare_command(dir_a, dir_b, report);
    } catch (const plirl::ConfigError& e) {
        std::cerr << "plirl: config error: " << e.what() << "\n";
        return exit_config;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "plirl: config error: " << e.what() << "\n";
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "plirl: run failed: " << e.what() << "\n";
        return exit_runtime;
    }
}
