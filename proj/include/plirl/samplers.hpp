#pragma once

#include "plirl/core.hpp"
#include "plirl/forward.hpp"
#include "plirl/kernels.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace plirl {

enum class Variant {
    passive_generalized,    // kernel-weighted drift scaled by pi at the learner's iterate
    passive_generalized_b,  // same limit, pi and kernel evaluated at the agent's point
    passive_classical,      // kernel-weighted drift divided by pi, unit noise
    multikernel,            // self-normalized pool of L samples
    active,                 // learner perturbs its own iterate and queries the oracle
    nonreversible,          // passive classical with drift premultiplied by (I + S)
    classical_langevin,     // gradient at the iterate (baseline)
    naive                   // stream gradients used as if evaluated at the iterate
};

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

enum class SourceKind { stream, pool, oracle };
SourceKind required_source(Variant v);

struct SamplerConfig {
    double step = 1e-3;  // mu
    double beta = 1.0;
    std::optional<Kernel> kernel;
    int pool_size = 1;
    double cond_std = 0.1;  // sigma of the conditional density
    Eigen::MatrixXd skew;   // empty means zero
    ParamVector init;
    std::optional<InitDensity> init_density;
    double burn_in_fraction = 0.1;
    long long thin = 1;
    // Optional reflecting box applied after every step; empty means unbounded.
    // Only sound when the target is symmetric under reflection at the walls.
    ParamVector reflect_low, reflect_high;

    Eigen::Index dim() const { return init.size(); }
    /// Throws ConfigError naming the offending field.
    void validate(Variant v) const;
    nlohmann::json to_json() const;
};

inline constexpr double density_floor = 1e-300;

/// Mirror-folds each coordinate into [low, high].
void reflect_into(Eigen::Ref<ParamVector> x, const ConstVecRef& low, const ConstVecRef& high);

/// Counters accumulated while stepping.
struct StepStats {
    long long underflow_resets = 0;
};

// Single steps. Each returns the next learner iterate.
ParamVector step_passive_generalized(const ConstVecRef& state, const GradientSample& s, const SamplerConfig& cfg,
                                     RngStream& rng);
ParamVector step_passive_generalized_b(const ConstVecRef& state, const GradientSample& s, const SamplerConfig& cfg,
                                       RngStream& rng);
ParamVector step_passive_classical(const ConstVecRef& state, const GradientSample& s, const SamplerConfig& cfg,
                                   RngStream& rng);
ParamVector step_multikernel(const ConstVecRef& state, const std::vector<GradientSample>& pool,
                             const SamplerConfig& cfg, RngStream& rng, StepStats* stats = nullptr);
ParamVector step_active(const ConstVecRef& state, const GradientOracle& oracle, const SamplerConfig& cfg,
                        RngStream& rng);
ParamVector step_nonreversible(const ConstVecRef& state, const GradientSample& s, const SamplerConfig& cfg,
                               RngStream& rng);
ParamVector step_classical_langevin(const ConstVecRef& state, const GradientOracle& oracle, const SamplerConfig& cfg,
                                    RngStream& rng);
ParamVector step_naive(const ConstVecRef& state, const GradientSample& s, const SamplerConfig& cfg, RngStream& rng);

/// Self-normalized weights proportional to N(point_i - state; 0, sigma^2 I), computed in log domain.
/// Returns false (and writes uniform weights) when every weight underflows.
bool conditional_weights(const ConstVecRef& state, const GradientStream& stream, const std::vector<std::size_t>& idx,
                         double sigma, Eigen::Ref<Eigen::VectorXd> weights);

/// K_bw(v) / p(ð + v | ð) for v ~ N(0, sigma^2 I).
double active_weight(const Kernel& kernel, double sigma, const ConstVecRef& v);

/// sequential: consecutive samples, consuming the stream.
/// resample: L independent uniform draws per step.
/// random_block: L contiguous samples from a private shuffled copy, starting at a uniform offset.
enum class PoolMode { sequential, resample, random_block };

std::string to_string(PoolMode m);
PoolMode pool_mode_from_string(const std::string& s);

/// Where a sampler gets its gradient information.
struct SampleSource {
    SourceKind kind = SourceKind::stream;
    const GradientStream* stream = nullptr;
    long long passes = 1;            // sweeps allowed over the stream
    bool reshuffle_each_pass = false;
    PoolMode pool_mode = PoolMode::resample;
    GradientOracle oracle;

    static SampleSource from_stream(const GradientStream& s, long long passes = 1, bool reshuffle = false);
    static SampleSource pools(const GradientStream& s, PoolMode mode = PoolMode::resample, long long passes = 1);
    static SampleSource from_oracle(GradientOracle o);
};

/// Raised when a stream source runs out before the requested number of steps.
class SourceExhausted : public std::runtime_error {
public:
    SourceExhausted(long long consumed, long long step);
    long long consumed;
};

class Trajectory {
public:
    Trajectory() = default;
    Trajectory(Eigen::Index dim) : dim_(dim) {}

    Eigen::Index dim() const { return dim_; }
    std::size_t size() const { return dim_ ? data_.size() / dim_ : 0; }
    std::size_t burn_in() const { return burn_in_; }
    void set_burn_in(std::size_t b);
    /// Index spacing (in sampler steps) between stored samples.
    long long thin() const { return thin_; }
    void set_thin(long long t) { thin_ = t; }

    void push_back(const ConstVecRef& x);
    Eigen::Map<const Eigen::VectorXd> sample(std::size_t i) const {
        return Eigen::Map<const Eigen::VectorXd>(data_.data() + i * dim_, dim_);
    }
    double at(std::size_t i, Eigen::Index d) const { return data_[i * dim_ + d]; }
    /// Post-burn-in values of one coordinate.
    std::vector<double> coordinate(Eigen::Index d, bool post_burn_in = true) const;
    /// Post-burn-in samples only, burn-in reset to 0.
    Trajectory post_burn_in() const;
    /// Concatenates post-burn-in parts of several trajectories.
    static Trajectory pool(const std::vector<Trajectory>& parts);

    std::uint64_t fingerprint = 0;
    StepStats stats;

    void write_csv(std::ostream& os) const;

private:
    Eigen::Index dim_ = 0;
    std::vector<double> data_;
    std::size_t burn_in_ = 0;
    long long thin_ = 1;
};

std::uint64_t config_fingerprint(Variant v, const SamplerConfig& cfg, long long num_steps, std::uint64_t seed);

/// Drives `num_steps` steps of the chosen variant. Stores every cfg.thin-th iterate, starting with the initial one.
Trajectory run_sampler(Variant v, const SampleSource& source, const SamplerConfig& cfg, long long num_steps,
                       const RngStream& rng);

/// Runs `chains` independent chains on child streams, concurrently.
std::vector<Trajectory> run_chains(Variant v, const SampleSource& source, const SamplerConfig& cfg,
                                   long long num_steps, const RngStream& rng, int chains);

/// Metadata block written next to trajectory CSVs.
nlohmann::json trajectory_metadata(Variant v, const SamplerConfig& cfg, const Trajectory& t, std::uint64_t seed,
                                   long long num_steps);

}  // namespace plirl
