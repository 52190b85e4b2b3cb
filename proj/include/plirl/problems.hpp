#pragma once

#include "plirl/core.hpp"
#include "plirl/forward.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace plirl {

/// Gradient oracle for R(x) = -a |x|^2 / 2 plus Gaussian noise of the given std.
GradientOracle quadratic_oracle(double a, double noise_std);
/// Same reward centred at `center`.
GradientOracle shifted_quadratic_oracle(double a, ParamVector center, double noise_std);

/// Posterior of a two-parameter Gaussian mixture: prior N(0, diag(10, 2)),
/// observations from 0.5 N(t1, 2) + 0.5 N(t1 + t2, 2).
struct MixtureModel {
    ParamVector truth = (ParamVector(2) << 0.0, 1.0).finished();
    ParamVector prior_variances = (ParamVector(2) << 10.0, 2.0).finished();
    double component_variance = 2.0;
    double obs_weight = 300.0;  // multiplies the likelihood gradient

    void validate() const;
    double log_prior(const ConstVecRef& t) const;
    double log_likelihood(const ConstVecRef& t, double y) const;
    /// Expected log-likelihood under the true parameter, by Gauss-Hermite quadrature.
    double expected_log_likelihood(const ConstVecRef& t) const;
    /// log prior + obs_weight * expected log-likelihood.
    double reward(const ConstVecRef& t) const;
};

double mixture_sample_obs(const MixtureModel& m, RngStream& rng);
ParamVector mixture_grad(const MixtureModel& m, const ConstVecRef& t, double y);
/// Gradient at t using a fresh observation drawn from the true model.
GradientOracle mixture_oracle(const MixtureModel& m);

/// Dense logistic regression data with a constant bias in column 0.
struct LogisticModel {
    Eigen::MatrixXd features;  // rows x dim, column 0 is the bias
    Eigen::VectorXd labels;    // 0 or 1
    double obs_weight = 10.0;
    std::vector<int> source_columns;  // libsvm feature index (1-based) of each non-bias column

    Eigen::Index rows() const { return features.rows(); }
    Eigen::Index dim() const { return features.cols(); }
    /// Average log-likelihood term per row, excluding the prior.
    double mean_log_likelihood(const ConstVecRef& t) const;
};

/// Parses libsvm text. Features are densified to `num_features` columns and a bias column is prepended.
LogisticModel parse_libsvm(std::istream& in, int num_features = 123);
LogisticModel load_libsvm(const std::string& path, int num_features = 123);

/// First `rows` rows and the `features` most frequently non-zero columns (plus bias).
LogisticModel subsample(const LogisticModel& m, Eigen::Index rows, int features);

/// Laplacian prior gradient plus obs_weight times the likelihood gradient of row k.
ParamVector logistic_grad(const LogisticModel& m, const ConstVecRef& t, Eigen::Index k);
/// Gradient on a uniformly drawn row.
GradientOracle logistic_oracle(const LogisticModel& m);

/// Hidden Markov chain over reward regimes with transition matrix I + rate*Q.
class SwitchingReward {
public:
    SwitchingReward(Eigen::MatrixXd generator, double rate, std::vector<GradientOracle> regimes, int initial_state = 0);

    int state() const { return state_; }
    int regimes() const { return static_cast<int>(oracles_.size()); }
    double rate() const { return rate_; }
    const Eigen::MatrixXd& generator() const { return q_; }
    /// Advances the hidden state one step.
    int step(RngStream& rng);
    /// Gradient of the active regime's reward.
    ParamVector gradient(const ParamVector& x, RngStream& rng) const;

private:
    Eigen::MatrixXd q_, transition_;
    double rate_;
    std::vector<GradientOracle> oracles_;
    int state_;
};

int switching_step(SwitchingReward& s, RngStream& rng);

/// Stationary distribution nu of a generator (nu Q = 0, sum nu = 1).
Eigen::VectorXd generator_stationary(const Eigen::MatrixXd& q);

}  // namespace plirl
