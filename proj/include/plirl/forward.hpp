#pragma once

#include "plirl/core.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

namespace plirl {

/// Noisy gradient of the unknown reward at a point.
using GradientOracle = std::function<ParamVector(const ParamVector&, RngStream&)>;

/// Gaussian initialization density with diagonal covariance.
class InitDensity {
public:
    InitDensity(ParamVector mean, ParamVector variances);
    static InitDensity standard(Eigen::Index dim);

    Eigen::Index dim() const { return mean_.size(); }
    const ParamVector& mean() const { return mean_; }
    const ParamVector& variances() const { return var_; }

    double density(const ConstVecRef& x) const;
    double log_density(const ConstVecRef& x) const;
    /// Density and gradient; writes the gradient into `grad`.
    double density_and_grad(const ConstVecRef& x, Eigen::Ref<Eigen::VectorXd> grad) const;
    std::pair<double, ParamVector> density_and_grad(const ConstVecRef& x) const;
    ParamVector sample(RngStream& rng) const;

private:
    ParamVector mean_, var_;
    double log_norm_;
};

struct AgentPoolConfig {
    double step = 1e-3;  // forward step size
    int num_agents = 1;
    int run_length = 100;
    /// When set, each agent's run length is uniform on [min, max]; `run_length` is ignored.
    std::optional<std::pair<int, int>> random_run_length;
    int dim = 1;
    /// Number of concurrent workers; results depend only on (seed, workers).
    int workers = 1;

    void validate() const;
};

/// Flat storage for a sequence of gradient samples.
class GradientStream {
public:
    explicit GradientStream(Eigen::Index dim = 1) : dim_(dim) {}

    Eigen::Index dim() const { return dim_; }
    std::size_t size() const { return agent_.size(); }
    bool empty() const { return agent_.empty(); }
    void reserve(std::size_t n);

    void push_back(const ConstVecRef& point, const ConstVecRef& gradient, int agent = 0, int step = 0);
    void push_back(const GradientSample& s, int agent = 0, int step = 0) { push_back(s.point, s.gradient, agent, step); }
    void append(const GradientStream& other);

    Eigen::Map<const Eigen::VectorXd> point(std::size_t i) const {
        return Eigen::Map<const Eigen::VectorXd>(points_.data() + i * dim_, dim_);
    }
    Eigen::Map<const Eigen::VectorXd> gradient(std::size_t i) const {
        return Eigen::Map<const Eigen::VectorXd>(grads_.data() + i * dim_, dim_);
    }
    GradientSample sample(std::size_t i) const { return GradientSample(point(i), gradient(i)); }
    const double* point_data(std::size_t i) const { return points_.data() + i * dim_; }
    const double* gradient_data(std::size_t i) const { return grads_.data() + i * dim_; }
    int agent(std::size_t i) const { return agent_[i]; }
    int step(std::size_t i) const { return step_[i]; }

    /// Returns a copy with rows permuted uniformly at random.
    GradientStream shuffled(RngStream& rng) const;

    void write_csv(std::ostream& os) const;
    static GradientStream read_csv(std::istream& is);

private:
    Eigen::Index dim_;
    std::vector<double> points_, grads_;
    std::vector<int> agent_, step_;
};

/// Runs independent gradient-ascent agents, each started from a draw of `pi`,
/// and records (point, gradient) at every step.
GradientStream run_agent_pool(const GradientOracle& oracle, const InitDensity& pi, const AgentPoolConfig& cfg,
                              const RngStream& rng);

}  // namespace plirl
