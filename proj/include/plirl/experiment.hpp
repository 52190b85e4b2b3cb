#pragma once

#include "plirl/analysis.hpp"
#include "plirl/cmdp.hpp"
#include "plirl/problems.hpp"
#include "plirl/samplers.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace plirl {

inline constexpr const char* library_version = "1.0.0";
inline constexpr const char* experiment_schema = "plirl-experiment/1";

enum class ProblemKind { quadratic, mixture, logistic, cmdp };

std::string to_string(ProblemKind k);

/// Validated experiment description. `echo` is the effective JSON (scale applied,
/// overrides folded in, paths absolute) and is enough to rerun the experiment.
struct ExperimentConfig {
    nlohmann::json echo;
    std::string name;
    std::uint64_t seed = 1;
    std::string output;

    ProblemKind problem = ProblemKind::quadratic;
    double curvature = 1.0;  // quadratic
    double noise_std = 0.0;  // quadratic
    MixtureModel mixture;
    LogisticModel logistic;
    CmdpModel cmdp;
    long long cmdp_horizon = 1000;
    double cmdp_perturbation = 0.05;
    long long policy_samples = 0;  // cmdp forward samples
    int dim = 1;

    AgentPoolConfig agents;
    std::optional<InitDensity> agent_init;
    bool shuffle_stream = true;

    Variant variant = Variant::classical_langevin;
    SamplerConfig sampler;
    long long num_steps = 0;
    PoolMode pool_mode = PoolMode::resample;
    long long passes = 0;  // 0 means as many sweeps as the budget needs
    std::optional<Variant> baseline;

    std::optional<GridSpec> grid;
    double mode_threshold = 0.05;
    double constraint_tolerance = 0.15;
};

struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output;
    std::optional<std::string> data;  // logistic data file
    std::string scale = "desk";
};

/// Reads a config (or a run manifest) and validates it. Throws ConfigError with the offending field names.
ExperimentConfig load_experiment(const std::filesystem::path& path, const RunOverrides& overrides, int* chains = nullptr);
ExperimentConfig parse_experiment(nlohmann::json j, const std::filesystem::path& base_dir, const RunOverrides& overrides);

/// Runs the experiment and writes every artifact under `out`. Returns the metrics.
/// On a runtime failure, artifacts written so far are kept next to a FAILED marker and the exception propagates.
nlohmann::json run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out, int chains);

/// Per-marginal W1 and variational distances between the pooled post-burn-in samples of two run directories.
nlohmann::json compare_runs(const std::filesystem::path& a, const std::filesystem::path& b);

/// Pooled post-burn-in samples of a run directory.
Trajectory load_run_samples(const std::filesystem::path& dir, const std::string& prefix = "trajectory");

}  // namespace plirl
