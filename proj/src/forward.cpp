#include "plirl/forward.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

namespace plirl {

InitDensity::InitDensity(ParamVector mean, ParamVector variances) : mean_(std::move(mean)), var_(std::move(variances)) {
    if (mean_.size() < 1) throw ConfigError("InitDensity: empty mean");
    if (mean_.size() != var_.size()) throw ConfigError("InitDensity: mean and variances lengths differ");
    if ((var_.array() <= 0.0).any() || !all_finite(var_) || !all_finite(mean_))
        throw ConfigError("InitDensity: variances must be positive and finite");
    log_norm_ = -0.5 * mean_.size() * std::log(2.0 * std::numbers::pi) - 0.5 * var_.array().log().sum();
}

InitDensity InitDensity::standard(Eigen::Index dim) {
    return InitDensity(ParamVector::Zero(dim), ParamVector::Ones(dim));
}

double InitDensity::log_density(const ConstVecRef& x) const {
    if (x.size() != mean_.size()) throw ConfigError("InitDensity: dimension mismatch");
    return log_norm_ - 0.5 * ((x - mean_).array().square() / var_.array()).sum();
}

double InitDensity::density(const ConstVecRef& x) const { return std::exp(log_density(x)); }

double InitDensity::density_and_grad(const ConstVecRef& x, Eigen::Ref<Eigen::VectorXd> grad) const {
    double p = density(x);
    grad = -p * ((x - mean_).array() / var_.array()).matrix();
    return p;
}

std::pair<double, ParamVector> InitDensity::density_and_grad(const ConstVecRef& x) const {
    ParamVector g(x.size());
    double p = density_and_grad(x, g);
    return {p, g};
}

ParamVector InitDensity::sample(RngStream& rng) const {
    ParamVector z = gaussian_vector(rng, dim());
    return mean_ + (var_.array().sqrt() * z.array()).matrix();
}

void AgentPoolConfig::validate() const {
    if (!(step > 0.0)) throw ConfigError("agents.step must be positive");
    if (num_agents < 1) throw ConfigError("agents.num_agents must be >= 1");
    if (dim < 1) throw ConfigError("agents.dim must be >= 1");
    if (workers < 1) throw ConfigError("agents.workers must be >= 1");
    if (random_run_length) {
        auto [lo, hi] = *random_run_length;
        if (lo < 1 || hi < lo) throw ConfigError("agents.run_length range must satisfy 1 <= min <= max");
    } else if (run_length < 1) {
        throw ConfigError("agents.run_length must be >= 1");
    }
}

void GradientStream::reserve(std::size_t n) {
    points_.reserve(n * dim_);
    grads_.reserve(n * dim_);
    agent_.reserve(n);
    step_.reserve(n);
}

void GradientStream::push_back(const ConstVecRef& point, const ConstVecRef& gradient, int agent, int step) {
    if (point.size() != dim_ || gradient.size() != dim_)
        throw ConfigError("GradientStream: sample dimension does not match stream dimension " + std::to_string(dim_));
    points_.insert(points_.end(), point.data(), point.data() + dim_);
    grads_.insert(grads_.end(), gradient.data(), gradient.data() + dim_);
    agent_.push_back(agent);
    step_.push_back(step);
}

void GradientStream::append(const GradientStream& other) {
    if (other.dim_ != dim_) throw ConfigError("GradientStream::append: dimension mismatch");
    points_.insert(points_.end(), other.points_.begin(), other.points_.end());
    grads_.insert(grads_.end(), other.grads_.begin(), other.grads_.end());
    agent_.insert(agent_.end(), other.agent_.begin(), other.agent_.end());
    step_.insert(step_.end(), other.step_.begin(), other.step_.end());
}

GradientStream GradientStream::shuffled(RngStream& rng) const {
    std::vector<std::size_t> perm(size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    GradientStream out(dim_);
    out.reserve(size());
    for (std::size_t i : perm) out.push_back(point(i), gradient(i), agent_[i], step_[i]);
    return out;
}

void GradientStream::write_csv(std::ostream& os) const {
    os << "agent,step";
    for (Eigen::Index d = 1; d <= dim_; ++d) os << ",theta_" << d;
    for (Eigen::Index d = 1; d <= dim_; ++d) os << ",grad_" << d;
    os << '\n';
    os.precision(17);
    for (std::size_t i = 0; i < size(); ++i) {
        os << agent_[i] << ',' << step_[i];
        for (Eigen::Index d = 0; d < dim_; ++d) os << ',' << points_[i * dim_ + d];
        for (Eigen::Index d = 0; d < dim_; ++d) os << ',' << grads_[i * dim_ + d];
        os << '\n';
    }
}

GradientStream GradientStream::read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("gradient stream CSV: missing header");
    long cols = std::count(line.begin(), line.end(), ',') + 1;
    if (cols < 4 || (cols - 2) % 2 != 0) throw ConfigError("gradient stream CSV: bad header");
    Eigen::Index dim = (cols - 2) / 2;
    GradientStream out(dim);
    ParamVector p(dim), g(dim);
    long lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        int a = 0, s = 0;
        ls >> a >> s;
        for (Eigen::Index d = 0; d < dim; ++d) ls >> p[d];
        for (Eigen::Index d = 0; d < dim; ++d) ls >> g[d];
        if (!ls) throw ConfigError("gradient stream CSV: malformed line " + std::to_string(lineno));
        out.push_back(p, g, a, s);
    }
    return out;
}

namespace {

GradientStream run_agents(const GradientOracle& oracle, const InitDensity& pi, const AgentPoolConfig& cfg,
                          int first, int last, RngStream rng) {
    GradientStream out(cfg.dim);
    out.reserve(static_cast<std::size_t>(last - first) * (cfg.random_run_length ? cfg.random_run_length->second
                                                                                 : cfg.run_length));
    for (int n = first; n < last; ++n) {
        int len = cfg.run_length;
        if (cfg.random_run_length) {
            auto [lo, hi] = *cfg.random_run_length;
            len = lo + static_cast<int>(rng.index(static_cast<std::size_t>(hi - lo + 1)));
        }
        ParamVector theta = pi.sample(rng);
        for (int k = 0; k < len; ++k) {
            ParamVector g = oracle(theta, rng);
            if (g.size() != cfg.dim) throw ConfigError("oracle returned gradient of wrong dimension");
            if (!all_finite(g) || !all_finite(theta))
                throw NonFiniteError("forward agent " + std::to_string(n) + ": non-finite value at step " +
                                     std::to_string(k));
            out.push_back(theta, g, n, k);
            theta += cfg.step * g;
        }
    }
    return out;
}

}  // namespace

GradientStream run_agent_pool(const GradientOracle& oracle, const InitDensity& pi, const AgentPoolConfig& cfg,
                              const RngStream& rng) {
    cfg.validate();
    if (pi.dim() != cfg.dim) throw ConfigError("init density dimension does not match agents.dim");
    if (cfg.workers == 1) return run_agents(oracle, pi, cfg, 0, cfg.num_agents, rng.child(0));

    std::vector<GradientStream> parts(cfg.workers);
    std::vector<std::exception_ptr> errors(cfg.workers);
    std::vector<std::thread> threads;
    for (int w = 0; w < cfg.workers; ++w) {
        int first = static_cast<int>(static_cast<long long>(cfg.num_agents) * w / cfg.workers);
        int last = static_cast<int>(static_cast<long long>(cfg.num_agents) * (w + 1) / cfg.workers);
        threads.emplace_back([&, w, first, last] {
            try {
                parts[w] = run_agents(oracle, pi, cfg, first, last, rng.child(w));
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    GradientStream out(cfg.dim);
    for (auto& p : parts) out.append(p);
    return out;
}

}  // namespace plirl
