#pragma once

#include "plirl/core.hpp"

#include <functional>
#include <string>
#include <vector>

namespace plirl {

/// Average-cost constrained MDP.
struct CmdpModel {
    int states = 0;
    int actions = 0;
    std::vector<Eigen::MatrixXd> transitions;  // one row-stochastic matrix per action
    Eigen::MatrixXd reward;                    // states x actions
    Eigen::MatrixXd constraint_cost;           // states x actions
    double bound = 1.0;
    double penalty = 1e5;

    void validate() const;
    /// Two-state, two-action example used in the experiments.
    static CmdpModel reference();
    static CmdpModel from_json_file(const std::string& path);
    static CmdpModel from_json_text(const std::string& text);
};

using Policy = Eigen::MatrixXd;  // states x actions, rows sum to one

/// Angles laid out state-major: angles[x * (U - 1) + j].
Policy spherical_to_policy(const ConstVecRef& angles, int states, int actions);
Eigen::VectorXd policy_to_spherical(const Policy& policy);

struct Evaluation {
    Eigen::MatrixXd joint;  // stationary joint distribution of (state, action)
    double reward = 0.0;    // long-run average reward J
    double cost = 0.0;      // long-run average constraint cost B
    double residual = 0.0;  // max abs violation of the balance equations
};

/// Exact long-run averages from the stationary joint distribution.
Evaluation stationary_joint(const CmdpModel& m, const Policy& policy);
/// J - penalty * (B - bound)^2 with exact J and B.
double ground_truth_penalized(const CmdpModel& m, const Policy& policy, double penalty);

struct PathAverages {
    double reward = 0.0;
    double cost = 0.0;
};

/// Simulates `horizon` steps from state 0 and returns the sample averages.
PathAverages simulate_cmdp(const CmdpModel& m, const Policy& policy, long long horizon, RngStream& rng);
/// Sample-path J - penalty * (B - bound)^2.
double simulate_cmdp_penalized(const CmdpModel& m, const Policy& policy, long long horizon, double penalty,
                               RngStream& rng);

/// Two-sided simultaneous perturbation estimate with Rademacher directions.
/// `f` receives the perturbed point and a stream; both evaluations share the same stream seed.
Eigen::VectorXd spsa(const std::function<double(const Eigen::VectorXd&, RngStream&)>& f, const ConstVecRef& x,
                     double perturbation, RngStream& rng);

/// SPSA on the simulated penalized objective in angle coordinates.
Eigen::VectorXd spsa_gradient(const CmdpModel& m, const ConstVecRef& angles, long long horizon, double perturbation,
                              double penalty, RngStream& rng);

}  // namespace plirl
