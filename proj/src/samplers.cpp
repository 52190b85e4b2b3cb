#include "plirl/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

namespace plirl {

namespace {

struct VariantName {
    Variant v;
    const char* name;
};

constexpr VariantName variant_names[] = {
    {Variant::passive_generalized, "passive_generalized"},
    {Variant::passive_generalized_b, "passive_generalized_b"},
    {Variant::passive_classical, "passive_classical"},
    {Variant::multikernel, "multikernel"},
    {Variant::active, "active"},
    {Variant::nonreversible, "nonreversible"},
    {Variant::classical_langevin, "classical_langevin"},
    {Variant::naive, "naive"},
};

bool uses_kernel(Variant v) {
    return v == Variant::passive_generalized || v == Variant::passive_generalized_b ||
           v == Variant::passive_classical || v == Variant::active || v == Variant::nonreversible;
}

bool uses_init_density(Variant v) {
    return v == Variant::passive_generalized || v == Variant::passive_generalized_b ||
           v == Variant::passive_classical || v == Variant::nonreversible;
}

// Scratch buffers reused across steps.
struct Work {
    explicit Work(Eigen::Index n) : noise(n), aux(n), drift(n), pointv(n) {}
    Eigen::VectorXd noise, aux, drift, pointv;
};

void check_dims(const ConstVecRef& state, const ConstVecRef& point, const ConstVecRef& grad,
                const SamplerConfig& cfg) {
    if (state.size() != cfg.dim() || point.size() != cfg.dim() || grad.size() != cfg.dim())
        throw ConfigError("sampler step: dimension mismatch between state, sample and config");
}

void finish(Eigen::Ref<Eigen::VectorXd> x, long long k, const char* who) {
    if (!all_finite(x))
        throw NonFiniteError(std::string(who) + ": non-finite iterate at sampler step " + std::to_string(k));
}

void advance_generalized(Eigen::Ref<Eigen::VectorXd> x, const ConstVecRef& point, const ConstVecRef& grad,
                         const SamplerConfig& cfg, RngStream& rng, Work& w) {
    const double mu = cfg.step;
    double p = cfg.init_density->density_and_grad(x, w.aux);
    double k = cfg.kernel->scaled_eval_sq((point - x).squaredNorm());
    fill_gaussian(rng, w.noise);
    x += mu * p * ((k * cfg.beta * 0.5) * grad + w.aux) + (std::sqrt(mu) * p) * w.noise;
}

void advance_generalized_b(Eigen::Ref<Eigen::VectorXd> x, const ConstVecRef& point, const ConstVecRef& grad,
                           const SamplerConfig& cfg, RngStream& rng, Work& w) {
    const double mu = cfg.step;
    double k = cfg.kernel->scaled_eval_sq((point - x).squaredNorm());
    fill_gaussian(rng, w.noise);
    if (k == 0.0) return;
    double p = cfg.init_density->density_and_grad(point, w.aux);
    // noise variance mu*K*pi(point) averages to mu*pi(x)^2 over agent points near x
    x += (mu * k) * ((cfg.beta * 0.5 * p) * grad + w.aux) + std::sqrt(mu * k * p) * w.noise;
}

void advance_classical_passive(Eigen::Ref<Eigen::VectorXd> x, const ConstVecRef& point, const ConstVecRef& grad,
                               const SamplerConfig& cfg, RngStream& rng, Work& w, long long k_index) {
    const double mu = cfg.step;
    double p = cfg.init_density->density(x);
    if (p < density_floor)
        throw NonFiniteError("passive sampler: init density below floor at sampler step " + std::to_string(k_index));
    double k = cfg.kernel->scaled_eval_sq((point - x).squaredNorm());
    fill_gaussian(rng, w.noise);
    double gain = mu * k * cfg.beta / (2.0 * p);
    if (cfg.skew.size() != 0) {
        w.drift.noalias() = cfg.skew * grad;
        w.drift += grad;
        x += gain * w.drift + std::sqrt(mu) * w.noise;
    } else {
        x += gain * grad + std::sqrt(mu) * w.noise;
    }
}

void advance_naive(Eigen::Ref<Eigen::VectorXd> x, const ConstVecRef& grad, const SamplerConfig& cfg, RngStream& rng,
                   Work& w) {
    fill_gaussian(rng, w.noise);
    x += (cfg.step * cfg.beta * 0.5) * grad + std::sqrt(cfg.step) * w.noise;
}

void advance_classical(Eigen::Ref<Eigen::VectorXd> x, const GradientOracle& oracle, const SamplerConfig& cfg,
                       RngStream& rng, Work& w) {
    ParamVector g = oracle(x, rng);
    if (g.size() != x.size()) throw ConfigError("oracle returned gradient of wrong dimension");
    fill_gaussian(rng, w.noise);
    x += (cfg.step * cfg.beta * 0.5) * g + std::sqrt(cfg.step) * w.noise;
}

void advance_active(Eigen::Ref<Eigen::VectorXd> x, const GradientOracle& oracle, const SamplerConfig& cfg,
                    RngStream& rng, Work& w) {
    fill_gaussian(rng, w.aux);
    w.aux *= cfg.cond_std;
    w.pointv = x + w.aux;
    double ratio = active_weight(*cfg.kernel, cfg.cond_std, w.aux);
    ParamVector g = oracle(w.pointv, rng);
    if (g.size() != x.size()) throw ConfigError("oracle returned gradient of wrong dimension");
    fill_gaussian(rng, w.noise);
    x += (cfg.step * ratio * cfg.beta * 0.5) * g + std::sqrt(cfg.step) * w.noise;
}

// Weighted pool average of gradients. Returns false on underflow (uniform weights used).
bool pool_drift(const ConstVecRef& x, const GradientStream& stream, const std::vector<std::size_t>& idx,
                double sigma, Eigen::VectorXd& weights, Eigen::Ref<Eigen::VectorXd> drift) {
    bool ok = conditional_weights(x, stream, idx, sigma, weights);
    drift.setZero();
    const Eigen::Index dim = x.size();
    double* out = drift.data();
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const double w = weights[static_cast<Eigen::Index>(i)];
        const double* g = stream.gradient_data(idx[i]);
        for (Eigen::Index d = 0; d < dim; ++d) out[d] += w * g[d];
    }
    return ok;
}

}  // namespace

std::string to_string(Variant v) {
    for (auto& n : variant_names)
        if (n.v == v) return n.name;
    return "unknown";
}

Variant variant_from_string(const std::string& s) {
    for (auto& n : variant_names)
        if (s == n.name) return n.v;
    throw ConfigError("unknown sampler variant '" + s + "'");
}

std::string to_string(PoolMode m) {
    switch (m) {
        case PoolMode::sequential: return "sequential";
        case PoolMode::resample: return "resample";
        case PoolMode::random_block: return "random_block";
    }
    return "unknown";
}

PoolMode pool_mode_from_string(const std::string& s) {
    if (s == "sequential") return PoolMode::sequential;
    if (s == "resample") return PoolMode::resample;
    if (s == "random_block") return PoolMode::random_block;
    throw ConfigError("unknown pool mode '" + s + "'");
}

SourceKind required_source(Variant v) {
    switch (v) {
        case Variant::multikernel: return SourceKind::pool;
        case Variant::active:
        case Variant::classical_langevin: return SourceKind::oracle;
        default: return SourceKind::stream;
    }
}

void SamplerConfig::validate(Variant v) const {
    if (!(step > 0.0) || !std::isfinite(step)) throw ConfigError("sampler.step must be positive");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("sampler.beta must be positive");
    if (init.size() < 1) throw ConfigError("sampler.init must be non-empty");
    if (!all_finite(init)) throw ConfigError("sampler.init must be finite");
    if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0))
        throw ConfigError("sampler.burn_in_fraction must lie in [0, 1)");
    if (thin < 1) throw ConfigError("sampler.thin must be >= 1");
    if (uses_kernel(v)) {
        if (!kernel) throw ConfigError("sampler.kernel is required for variant " + to_string(v));
        if (kernel->dim() != dim())
            throw ConfigError("sampler.kernel.dim (" + std::to_string(kernel->dim()) + ") does not match sampler.init (" +
                              std::to_string(dim()) + ")");
    }
    if (uses_init_density(v)) {
        if (!init_density) throw ConfigError("sampler.init_density is required for variant " + to_string(v));
        if (init_density->dim() != dim())
            throw ConfigError("sampler.init_density dimension does not match sampler.init");
    }
    if (v == Variant::multikernel && pool_size < 1) throw ConfigError("sampler.pool_size must be >= 1");
    if ((v == Variant::multikernel || v == Variant::active) && !(cond_std > 0.0))
        throw ConfigError("sampler.cond_std must be positive");
    if (skew.size() != 0) {
        if (v != Variant::nonreversible) throw ConfigError("sampler.skew is only valid for the nonreversible variant");
        if (skew.rows() != dim() || skew.cols() != dim())
            throw ConfigError("sampler.skew must be " + std::to_string(dim()) + "x" + std::to_string(dim()));
        if ((skew + skew.transpose()).cwiseAbs().maxCoeff() > 1e-12)
            throw ConfigError("sampler.skew must be skew-symmetric (S + S^T = 0)");
    }
    if (reflect_low.size() != 0 || reflect_high.size() != 0) {
        if (reflect_low.size() != dim() || reflect_high.size() != dim())
            throw ConfigError("sampler.reflect_low and sampler.reflect_high must both have the dimension of sampler.init");
        if (!((reflect_high - reflect_low).array() > 0.0).all() || !all_finite(reflect_low) || !all_finite(reflect_high))
            throw ConfigError("sampler.reflect_high must exceed sampler.reflect_low in every coordinate");
    }
}

nlohmann::json SamplerConfig::to_json() const {
    nlohmann::json j;
    j["step"] = step;
    j["beta"] = beta;
    if (kernel) j["kernel"] = {{"family", plirl::to_string(kernel->family())}, {"bandwidth", kernel->bandwidth()}};
    j["pool_size"] = pool_size;
    j["cond_std"] = cond_std;
    if (skew.size() != 0) {
        nlohmann::json rows = nlohmann::json::array();
        for (Eigen::Index r = 0; r < skew.rows(); ++r) {
            std::vector<double> row(skew.cols());
            for (Eigen::Index c = 0; c < skew.cols(); ++c) row[c] = skew(r, c);
            rows.push_back(row);
        }
        j["skew"] = rows;
    }
    j["init"] = std::vector<double>(init.data(), init.data() + init.size());
    if (init_density) {
        const auto& m = init_density->mean();
        const auto& v = init_density->variances();
        j["init_density"] = {{"mean", std::vector<double>(m.data(), m.data() + m.size())},
                             {"variances", std::vector<double>(v.data(), v.data() + v.size())}};
    }
    if (reflect_low.size() != 0) {
        j["reflect_low"] = std::vector<double>(reflect_low.data(), reflect_low.data() + reflect_low.size());
        j["reflect_high"] = std::vector<double>(reflect_high.data(), reflect_high.data() + reflect_high.size());
    }
    j["burn_in_fraction"] = burn_in_fraction;
    j["thin"] = thin;
    return j;
}

bool conditional_weights(const ConstVecRef& state, const GradientStream& stream, const std::vector<std::size_t>& idx,
                         double sigma, Eigen::Ref<Eigen::VectorXd> weights) {
    const Eigen::Index n = static_cast<Eigen::Index>(idx.size());
    const Eigen::Index dim = state.size();
    const double inv = -0.5 / (sigma * sigma);
    const double* x = state.data();
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double* p = stream.point_data(idx[i]);
        double sq = 0.0;
        for (Eigen::Index d = 0; d < dim; ++d) sq += (p[d] - x[d]) * (p[d] - x[d]);
        weights[i] = inv * sq;
        mx = std::max(mx, weights[i]);
    }
    if (!std::isfinite(mx)) {
        weights.setConstant(1.0 / n);
        return false;
    }
    weights = (weights.array() - mx).exp();
    const double sum = weights.sum();
    if (!(sum > 0.0) || !std::isfinite(sum)) {
        weights.setConstant(1.0 / n);
        return false;
    }
    weights /= sum;
    return true;
}

double active_weight(const Kernel& kernel, double sigma, const ConstVecRef& v) {
    const double n = static_cast<double>(v.size());
    const double sq = v.squaredNorm();
    const double log_p = -0.5 * n * std::log(2.0 * std::numbers::pi) - n * std::log(sigma) - 0.5 * sq / (sigma * sigma);
    if (log_p < std::log(density_floor)) throw NonFiniteError("active sampler: conditional density below floor");
    double k = kernel.scaled_eval_sq(sq);
    if (k == 0.0) return 0.0;
    return std::exp(std::log(k) - log_p);
}

ParamVector step_passive_generalized(const ConstVecRef& state, const GradientSample& s, const SamplerConfig& cfg,
                                     RngStream& rng) {
    check_dims(state, s.point, s.gradient, cfg);
    Work w(cfg.dim());
    ParamVector x = state;
    advance_generalized(x, s.point, s.gradient, cfg, rng, w);
    finish(x, 0, "passive_generalized");
    return x;
}

ParamVector step_passive_generalized_b(const ConstVecRef& state, const GradientSample& s, const SamplerConfig& cfg,
                                       RngStream& rng) {
    check_dims(state, s.point, s.gradient, cfg);
    Work w(cfg.dim());
    ParamVector x = state;
    advance_generalized_b(x, s.point, s.gradient, cfg, rng, w);
    finish(x, 0, "passive_generalized_b");
    return x;
}

ParamVector step_passive_classical(const ConstVecRef& state, const GradientSample& s, const SamplerConfig& cfg,
                                   RngStream& rng) {
    check_dims(state, s.point, s.gradient, cfg);
    if (cfg.skew.size() != 0) throw ConfigError("passive_classical does not take a skew matrix");
    Work w(cfg.dim());
    ParamVector x = state;
    advance_classical_passive(x, s.point, s.gradient, cfg, rng, w, 0);
    finish(x, 0, "passive_classical");
    return x;
}

ParamVector step_nonreversible(const ConstVecRef& state, const GradientSample& s, const SamplerConfig& cfg,
                               RngStream& rng) {
    check_dims(state, s.point, s.gradient, cfg);
    Work w(cfg.dim());
    ParamVector x = state;
    advance_classical_passive(x, s.point, s.gradient, cfg, rng, w, 0);
    finish(x, 0, "nonreversible");
    return x;
}

ParamVector step_naive(const ConstVecRef& state, const GradientSample& s, const SamplerConfig& cfg, RngStream& rng) {
    check_dims(state, s.point, s.gradient, cfg);
    Work w(cfg.dim());
    ParamVector x = state;
    advance_naive(x, s.gradient, cfg, rng, w);
    finish(x, 0, "naive");
    return x;
}

ParamVector step_multikernel(const ConstVecRef& state, const std::vector<GradientSample>& pool,
                             const SamplerConfig& cfg, RngStream& rng, StepStats* stats) {
    if (pool.empty()) throw ConfigError("multikernel step: empty pool");
    GradientStream s(cfg.dim());
    for (auto& g : pool) s.push_back(g);
    std::vector<std::size_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), 0);
    Eigen::VectorXd weights(static_cast<Eigen::Index>(pool.size()));
    Work w(cfg.dim());
    if (state.size() != cfg.dim()) throw ConfigError("multikernel step: dimension mismatch");
    if (!pool_drift(state, s, idx, cfg.cond_std, weights, w.drift) && stats) ++stats->underflow_resets;
    fill_gaussian(rng, w.noise);
    ParamVector x = state + (cfg.step * cfg.beta * 0.5) * w.drift + std::sqrt(cfg.step) * w.noise;
    finish(x, 0, "multikernel");
    return x;
}

ParamVector step_active(const ConstVecRef& state, const GradientOracle& oracle, const SamplerConfig& cfg,
                        RngStream& rng) {
    if (state.size() != cfg.dim()) throw ConfigError("active step: dimension mismatch");
    Work w(cfg.dim());
    ParamVector x = state;
    advance_active(x, oracle, cfg, rng, w);
    finish(x, 0, "active");
    return x;
}

ParamVector step_classical_langevin(const ConstVecRef& state, const GradientOracle& oracle, const SamplerConfig& cfg,
                                    RngStream& rng) {
    if (state.size() != cfg.dim()) throw ConfigError("classical step: dimension mismatch");
    Work w(cfg.dim());
    ParamVector x = state;
    advance_classical(x, oracle, cfg, rng, w);
    finish(x, 0, "classical_langevin");
    return x;
}

SampleSource SampleSource::from_stream(const GradientStream& s, long long passes, bool reshuffle) {
    SampleSource src;
    src.kind = SourceKind::stream;
    src.stream = &s;
    src.passes = passes;
    src.reshuffle_each_pass = reshuffle;
    return src;
}

SampleSource SampleSource::pools(const GradientStream& s, PoolMode mode, long long passes) {
    SampleSource src;
    src.kind = SourceKind::pool;
    src.stream = &s;
    src.pool_mode = mode;
    src.passes = passes;
    return src;
}

SampleSource SampleSource::from_oracle(GradientOracle o) {
    SampleSource src;
    src.kind = SourceKind::oracle;
    src.oracle = std::move(o);
    return src;
}

SourceExhausted::SourceExhausted(long long consumed_, long long step)
    : std::runtime_error("gradient source exhausted after consuming " + std::to_string(consumed_) +
                         " samples at sampler step " + std::to_string(step)),
      consumed(consumed_) {}

void Trajectory::set_burn_in(std::size_t b) {
    if (b >= size() && size() > 0) throw ConfigError("burn_in must be smaller than trajectory length");
    burn_in_ = b;
}

void Trajectory::push_back(const ConstVecRef& x) {
    if (dim_ == 0) dim_ = x.size();
    if (x.size() != dim_) throw ConfigError("Trajectory: dimension mismatch");
    data_.insert(data_.end(), x.data(), x.data() + dim_);
}

std::vector<double> Trajectory::coordinate(Eigen::Index d, bool post) const {
    std::vector<double> out;
    std::size_t first = post ? burn_in_ : 0;
    out.reserve(size() - first);
    for (std::size_t i = first; i < size(); ++i) out.push_back(data_[i * dim_ + d]);
    return out;
}

Trajectory Trajectory::post_burn_in() const {
    Trajectory t(dim_);
    t.data_.assign(data_.begin() + static_cast<std::ptrdiff_t>(burn_in_ * dim_), data_.end());
    t.thin_ = thin_;
    t.fingerprint = fingerprint;
    t.stats = stats;
    return t;
}

Trajectory Trajectory::pool(const std::vector<Trajectory>& parts) {
    if (parts.empty()) throw ConfigError("Trajectory::pool: no trajectories");
    Trajectory t(parts.front().dim_);
    t.thin_ = parts.front().thin_;
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto& p : parts) {
        if (p.dim_ != t.dim_) throw ConfigError("Trajectory::pool: dimension mismatch");
        t.data_.insert(t.data_.end(), p.data_.begin() + static_cast<std::ptrdiff_t>(p.burn_in_ * p.dim_), p.data_.end());
        t.stats.underflow_resets += p.stats.underflow_resets;
        h = (h ^ p.fingerprint) * 0x100000001b3ULL;
    }
    t.fingerprint = h;
    return t;
}

void Trajectory::write_csv(std::ostream& os) const {
    os << "step";
    for (Eigen::Index d = 1; d <= dim_; ++d) os << ",theta_" << d;
    os << '\n';
    os.precision(17);
    for (std::size_t i = 0; i < size(); ++i) {
        os << static_cast<long long>(i) * thin_;
        for (Eigen::Index d = 0; d < dim_; ++d) os << ',' << data_[i * dim_ + d];
        os << '\n';
    }
}

std::uint64_t config_fingerprint(Variant v, const SamplerConfig& cfg, long long num_steps, std::uint64_t seed) {
    nlohmann::json j = cfg.to_json();
    j["variant"] = to_string(v);
    j["num_steps"] = num_steps;
    j["seed"] = seed;
    return fnv1a(j.dump());
}

void reflect_into(Eigen::Ref<ParamVector> x, const ConstVecRef& low, const ConstVecRef& high) {
    for (Eigen::Index d = 0; d < x.size(); ++d) {
        const double width = high[d] - low[d];
        double r = std::fmod(x[d] - low[d], 2.0 * width);
        if (r < 0.0) r += 2.0 * width;
        x[d] = r <= width ? low[d] + r : high[d] - (r - width);
    }
}

Trajectory run_sampler(Variant v, const SampleSource& source, const SamplerConfig& cfg, long long num_steps,
                       const RngStream& rng_in) {
    cfg.validate(v);
    if (num_steps < 0) throw ConfigError("num_steps must be >= 0");
    if (source.kind != required_source(v))
        throw ConfigError("variant " + to_string(v) + " needs a different kind of gradient source");
    if (source.kind != SourceKind::oracle) {
        if (!source.stream) throw ConfigError("stream source without a stream");
        if (source.stream->dim() != cfg.dim())
            throw ConfigError("gradient stream dimension (" + std::to_string(source.stream->dim()) +
                              ") does not match sampler.init (" + std::to_string(cfg.dim()) + ")");
        if (source.passes < 1) throw ConfigError("source.passes must be >= 1");
    } else if (!source.oracle) {
        throw ConfigError("oracle source without an oracle");
    }

    RngStream rng = rng_in;
    RngStream order_rng = rng_in.child(0x5eed);
    const Eigen::Index n = cfg.dim();
    Trajectory traj(n);
    traj.set_thin(cfg.thin);
    traj.fingerprint = config_fingerprint(v, cfg, num_steps, rng_in.seed());
    Eigen::VectorXd x = cfg.init;
    traj.push_back(x);
    Work w(n);

    const GradientStream* stream = source.stream;
    GradientStream shuffled_copy;
    if (v == Variant::multikernel && source.pool_mode == PoolMode::random_block) {
        RngStream shuffle_rng = rng_in.child(0xb10c);
        shuffled_copy = stream->shuffled(shuffle_rng);
        stream = &shuffled_copy;
        if (static_cast<std::size_t>(cfg.pool_size) > stream->size())
            throw ConfigError("sampler.pool_size exceeds the gradient stream length");
    }
    const std::size_t stream_size = stream ? stream->size() : 0;
    const long long budget = stream ? static_cast<long long>(stream_size) * source.passes : 0;
    std::vector<std::size_t> order;
    if (stream) {
        order.resize(stream_size);
        std::iota(order.begin(), order.end(), 0);
        if (stream_size == 0) throw ConfigError("gradient stream is empty");
    }
    long long consumed = 0;
    auto next_index = [&](long long k) -> std::size_t {
        if (consumed >= budget) throw SourceExhausted(consumed, k);
        std::size_t pos = static_cast<std::size_t>(consumed % static_cast<long long>(stream_size));
        if (pos == 0 && consumed > 0 && source.reshuffle_each_pass)
            std::shuffle(order.begin(), order.end(), order_rng.engine());
        ++consumed;
        return order[pos];
    };

    const int L = cfg.pool_size;
    std::vector<std::size_t> pool(v == Variant::multikernel ? L : 0);
    Eigen::VectorXd weights(v == Variant::multikernel ? L : 0);

    const std::string name = to_string(v);
    for (long long k = 0; k < num_steps; ++k) {
        switch (v) {
            case Variant::passive_generalized: {
                std::size_t i = next_index(k);
                advance_generalized(x, stream->point(i), stream->gradient(i), cfg, rng, w);
                break;
            }
            case Variant::passive_generalized_b: {
                std::size_t i = next_index(k);
                advance_generalized_b(x, stream->point(i), stream->gradient(i), cfg, rng, w);
                break;
            }
            case Variant::passive_classical:
            case Variant::nonreversible: {
                std::size_t i = next_index(k);
                advance_classical_passive(x, stream->point(i), stream->gradient(i), cfg, rng, w, k);
                break;
            }
            case Variant::naive: {
                std::size_t i = next_index(k);
                advance_naive(x, stream->gradient(i), cfg, rng, w);
                break;
            }
            case Variant::multikernel: {
                if (source.pool_mode == PoolMode::resample) {
                    for (int l = 0; l < L; ++l) pool[l] = order_rng.index(stream_size);
                } else if (source.pool_mode == PoolMode::random_block) {
                    std::size_t start = order_rng.index(stream_size);
                    for (int l = 0; l < L; ++l) pool[l] = (start + static_cast<std::size_t>(l)) % stream_size;
                } else {
                    for (int l = 0; l < L; ++l) pool[l] = next_index(k);
                }
                if (!pool_drift(x, *stream, pool, cfg.cond_std, weights, w.drift)) ++traj.stats.underflow_resets;
                fill_gaussian(rng, w.noise);
                x += (cfg.step * cfg.beta * 0.5) * w.drift + std::sqrt(cfg.step) * w.noise;
                break;
            }
            case Variant::active: advance_active(x, source.oracle, cfg, rng, w); break;
            case Variant::classical_langevin: advance_classical(x, source.oracle, cfg, rng, w); break;
        }
        finish(x, k, name.c_str());
        if (cfg.reflect_low.size() != 0) reflect_into(x, cfg.reflect_low, cfg.reflect_high);
        if ((k + 1) % cfg.thin == 0) traj.push_back(x);
    }
    std::size_t burn = static_cast<std::size_t>(cfg.burn_in_fraction * static_cast<double>(traj.size()));
    if (traj.size() > 0 && burn >= traj.size()) burn = traj.size() - 1;
    traj.set_burn_in(burn);
    return traj;
}

std::vector<Trajectory> run_chains(Variant v, const SampleSource& source, const SamplerConfig& cfg,
                                   long long num_steps, const RngStream& rng, int chains) {
    if (chains < 1) throw ConfigError("chains must be >= 1");
    std::vector<Trajectory> out(chains);
    std::vector<std::exception_ptr> errors(chains);
    std::vector<std::thread> threads;
    for (int c = 0; c < chains; ++c) {
        threads.emplace_back([&, c] {
            try {
                out[c] = run_sampler(v, source, cfg, num_steps, rng.child(1000 + c));
            } catch (...) {
                errors[c] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

nlohmann::json trajectory_metadata(Variant v, const SamplerConfig& cfg, const Trajectory& t, std::uint64_t seed,
                                   long long num_steps) {
    nlohmann::json j;
    j["variant"] = to_string(v);
    j["config"] = cfg.to_json();
    j["seed"] = seed;
    j["num_steps"] = num_steps;
    j["stored_samples"] = t.size();
    j["burn_in"] = t.burn_in();
    j["underflow_resets"] = t.stats.underflow_resets;
    j["rng_algorithm"] = RngStream::algorithm;
    std::ostringstream fp;
    fp << std::hex << t.fingerprint;
    j["fingerprint"] = fp.str();
    if (cfg.kernel) j["step_over_bandwidth_pow_dim"] = cfg.step / std::pow(cfg.kernel->bandwidth(), cfg.dim());
    return j;
}

}  // namespace plirl
