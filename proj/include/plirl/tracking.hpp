#pragma once

#include "plirl/analysis.hpp"
#include "plirl/problems.hpp"
#include "plirl/samplers.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace plirl {

enum class TrackingRegime { matched, slow_switch, fast_switch };

std::string to_string(TrackingRegime r);
TrackingRegime tracking_regime_from_string(const std::string& s);

struct TrackingConfig {
    TrackingRegime regime = TrackingRegime::matched;
    double exponent = 0.5;  // only used by the slow and fast regimes
    long long window = 1000;
    /// Forward agents feeding stream-based variants; ignored for oracle variants.
    AgentPoolConfig agents;
    std::optional<InitDensity> agent_init;
    std::optional<Axis> histogram_axis;  // per-window density of the first coordinate

    void validate(long long total_steps) const;
};

/// Switching rate implied by the regime for sampler step `mu`.
double regime_rate(TrackingRegime regime, double mu, double exponent);

struct WindowRecord {
    long long window = 0;
    int hyper_state_mode = 0;      // most frequent hidden state in the window
    std::vector<double> occupancy; // fraction of steps spent in each hidden state
    ParamVector mean, var;
    std::optional<EmpiricalDensity> density;
};

struct TrackingResult {
    std::vector<WindowRecord> windows;
    Trajectory trajectory;
    std::vector<int> hidden_states;  // hidden state at every stored sample
    double rate = 0.0;
};

/// Runs a sampler against a switching reward. The rate of `switching` must match the regime relation
/// (a zero rate is also accepted for slow switching).
/// Stream variants get their gradients from live forward agents querying the active regime.
TrackingResult run_tracking(Variant v, SwitchingReward switching, const SamplerConfig& sampler,
                            const TrackingConfig& cfg, long long total_steps, const RngStream& rng);

void write_windows_csv(const TrackingResult& r, std::ostream& os);

}  // namespace plirl
