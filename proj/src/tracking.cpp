#include "plirl/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace plirl {

std::string to_string(TrackingRegime r) {
    switch (r) {
        case TrackingRegime::matched: return "matched";
        case TrackingRegime::slow_switch: return "slow_switch";
        case TrackingRegime::fast_switch: return "fast_switch";
    }
    return "unknown";
}

TrackingRegime tracking_regime_from_string(const std::string& s) {
    if (s == "matched") return TrackingRegime::matched;
    if (s == "slow_switch") return TrackingRegime::slow_switch;
    if (s == "fast_switch") return TrackingRegime::fast_switch;
    throw ConfigError("unknown tracking regime '" + s + "'");
}

double regime_rate(TrackingRegime regime, double mu, double exponent) {
    switch (regime) {
        case TrackingRegime::matched: return mu;
        case TrackingRegime::slow_switch: return std::pow(mu, 1.0 + exponent);
        case TrackingRegime::fast_switch: return std::pow(mu, exponent);
    }
    return mu;
}

void TrackingConfig::validate(long long total_steps) const {
    if (regime != TrackingRegime::matched && !(exponent > 0.0 && exponent < 1.0))
        throw ConfigError("tracking.exponent must lie in (0, 1)");
    if (window < 1 || window >= total_steps) throw ConfigError("tracking.window must be in [1, total steps)");
}

namespace {

// Forward agents restarted from the init density every run_length steps, always
// querying whichever regime is active.
class LiveAgents {
public:
    LiveAgents(const AgentPoolConfig& cfg, const InitDensity& init, int count)
        : cfg_(cfg), init_(init), theta_(count), age_(count, 0) {}

    void start(RngStream& rng) {
        for (auto& t : theta_) t = init_.sample(rng);
    }

    // Emits one sample from agent i and advances it.
    void emit(std::size_t i, const SwitchingReward& s, RngStream& rng, GradientStream& out, int id) {
        ParamVector g = s.gradient(theta_[i], rng);
        out.push_back(theta_[i], g, id, age_[i]);
        theta_[i] += cfg_.step * g;
        if (++age_[i] >= cfg_.run_length) {
            theta_[i] = init_.sample(rng);
            age_[i] = 0;
        }
    }

    std::size_t size() const { return theta_.size(); }

private:
    AgentPoolConfig cfg_;
    InitDensity init_;
    std::vector<ParamVector> theta_;
    std::vector<int> age_;
};

}  // namespace

TrackingResult run_tracking(Variant v, SwitchingReward switching, const SamplerConfig& sampler,
                            const TrackingConfig& cfg, long long total_steps, const RngStream& rng_in) {
    cfg.validate(total_steps);
    sampler.validate(v);
    double expected = regime_rate(cfg.regime, sampler.step, cfg.exponent);
    // a frozen chain is the degenerate limit of slow switching
    bool frozen = cfg.regime == TrackingRegime::slow_switch && switching.rate() == 0.0;
    if (!frozen && std::abs(switching.rate() - expected) > 1e-12 * std::max(1.0, expected))
        throw ConfigError("switching rate " + std::to_string(switching.rate()) + " does not match the " +
                          to_string(cfg.regime) + " relation (expected " + std::to_string(expected) + ")");

    RngStream hidden_rng = rng_in.child(1);
    RngStream step_rng = rng_in.child(2);
    RngStream agent_rng = rng_in.child(3);
    const Eigen::Index n = sampler.dim();
    const SourceKind kind = required_source(v);

    std::optional<LiveAgents> agents;
    if (kind != SourceKind::oracle) {
        if (!cfg.agent_init) throw ConfigError("tracking: stream variants need tracking.agent_init");
        cfg.agents.validate();
        int count = kind == SourceKind::pool ? sampler.pool_size : 1;
        agents.emplace(cfg.agents, *cfg.agent_init, count);
        agents->start(agent_rng);
    }
    const SwitchingReward& view = switching;
    GradientOracle oracle = [&view](const ParamVector& x, RngStream& r) { return view.gradient(x, r); };

    TrackingResult res;
    res.rate = switching.rate();
    res.trajectory = Trajectory(n);
    ParamVector x = sampler.init;
    res.trajectory.push_back(x);
    res.hidden_states.push_back(switching.state());

    GradientStream scratch(n);
    std::vector<GradientSample> pool;
    for (long long k = 0; k < total_steps; ++k) {
        switch (kind) {
            case SourceKind::oracle:
                x = v == Variant::active ? step_active(x, oracle, sampler, step_rng)
                                         : step_classical_langevin(x, oracle, sampler, step_rng);
                break;
            case SourceKind::pool: {
                scratch = GradientStream(n);
                for (std::size_t i = 0; i < agents->size(); ++i) agents->emit(i, switching, agent_rng, scratch, 0);
                pool.clear();
                for (std::size_t i = 0; i < scratch.size(); ++i) pool.push_back(scratch.sample(i));
                x = step_multikernel(x, pool, sampler, step_rng, &res.trajectory.stats);
                break;
            }
            case SourceKind::stream: {
                scratch = GradientStream(n);
                agents->emit(0, switching, agent_rng, scratch, 0);
                GradientSample s = scratch.sample(0);
                switch (v) {
                    case Variant::passive_generalized: x = step_passive_generalized(x, s, sampler, step_rng); break;
                    case Variant::passive_generalized_b: x = step_passive_generalized_b(x, s, sampler, step_rng); break;
                    case Variant::passive_classical: x = step_passive_classical(x, s, sampler, step_rng); break;
                    case Variant::nonreversible: x = step_nonreversible(x, s, sampler, step_rng); break;
                    default: x = step_naive(x, s, sampler, step_rng); break;
                }
                break;
            }
        }
        if (!all_finite(x)) throw NonFiniteError("tracking: non-finite iterate at sampler step " + std::to_string(k));
        switching.step(hidden_rng);
        res.trajectory.push_back(x);
        res.hidden_states.push_back(switching.state());
    }
    std::size_t burn = static_cast<std::size_t>(sampler.burn_in_fraction * static_cast<double>(res.trajectory.size()));
    res.trajectory.set_burn_in(std::min(burn, res.trajectory.size() - 1));

    const long long stored = static_cast<long long>(res.trajectory.size());
    for (long long w = 0; (w + 1) * cfg.window <= stored - 1; ++w) {
        WindowRecord rec;
        rec.window = w;
        rec.occupancy.assign(switching.regimes(), 0.0);
        rec.mean = ParamVector::Zero(n);
        rec.var = ParamVector::Zero(n);
        std::vector<double> first;
        for (long long i = w * cfg.window + 1; i <= (w + 1) * cfg.window; ++i) {
            auto s = res.trajectory.sample(static_cast<std::size_t>(i));
            rec.mean += s;
            rec.var += s.cwiseProduct(s);
            rec.occupancy[res.hidden_states[static_cast<std::size_t>(i)]] += 1.0;
            first.push_back(s[0]);
        }
        const double len = static_cast<double>(cfg.window);
        rec.mean /= len;
        rec.var = rec.var / len - rec.mean.cwiseProduct(rec.mean);
        for (auto& o : rec.occupancy) o /= len;
        rec.hyper_state_mode =
            static_cast<int>(std::max_element(rec.occupancy.begin(), rec.occupancy.end()) - rec.occupancy.begin());
        if (cfg.histogram_axis) rec.density = build_density(first, *cfg.histogram_axis);
        res.windows.push_back(std::move(rec));
    }
    return res;
}

void write_windows_csv(const TrackingResult& r, std::ostream& os) {
    const Eigen::Index n = r.trajectory.dim();
    os << "window,hyper_state_mode";
    for (Eigen::Index d = 1; d <= n; ++d) os << ",mean_" << d;
    for (Eigen::Index d = 1; d <= n; ++d) os << ",var_" << d;
    os << '\n';
    os.precision(12);
    for (auto& w : r.windows) {
        os << w.window << ',' << w.hyper_state_mode;
        for (Eigen::Index d = 0; d < n; ++d) os << ',' << w.mean[d];
        for (Eigen::Index d = 0; d < n; ++d) os << ',' << w.var[d];
        os << '\n';
    }
}

}  // namespace plirl
