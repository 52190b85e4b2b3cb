#include "plirl/cmdp.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace plirl {

void CmdpModel::validate() const {
    if (states < 1 || actions < 1) throw ConfigError("cmdp: states and actions must be positive");
    if (static_cast<int>(transitions.size()) != actions) throw ConfigError("cmdp: need one transition matrix per action");
    for (int u = 0; u < actions; ++u) {
        const auto& p = transitions[u];
        if (p.rows() != states || p.cols() != states)
            throw ConfigError("cmdp: transition matrix " + std::to_string(u) + " has wrong shape");
        if ((p.array() < 0.0).any()) throw ConfigError("cmdp: negative transition probability");
        for (int i = 0; i < states; ++i)
            if (std::abs(p.row(i).sum() - 1.0) > 1e-12)
                throw ConfigError("cmdp: transition row " + std::to_string(i) + " of action " + std::to_string(u) +
                                  " does not sum to 1");
    }
    if (reward.rows() != states || reward.cols() != actions) throw ConfigError("cmdp: reward has wrong shape");
    if (constraint_cost.rows() != states || constraint_cost.cols() != actions)
        throw ConfigError("cmdp: constraint_cost has wrong shape");
    if ((reward.array() < 0.0).any()) throw ConfigError("cmdp: reward must be nonnegative");
    if (penalty < 0.0) throw ConfigError("cmdp: penalty must be >= 0");
}

CmdpModel CmdpModel::reference() {
    CmdpModel m;
    m.states = 2;
    m.actions = 2;
    m.transitions = {(Eigen::MatrixXd(2, 2) << 0.8, 0.2, 0.3, 0.7).finished(),
                     (Eigen::MatrixXd(2, 2) << 0.6, 0.4, 0.1, 0.9).finished()};
    m.reward = (Eigen::MatrixXd(2, 2) << 1, 100, 30, 2).finished();
    m.constraint_cost = (Eigen::MatrixXd(2, 2) << 0.2, 0.3, 2, 1).finished();
    m.bound = 1.0;
    m.penalty = 1e5;
    return m;
}

namespace {

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const std::string& field) {
    if (!j.is_array() || j.empty() || !j[0].is_array()) throw ConfigError("cmdp: field '" + field + "' must be a matrix");
    Eigen::MatrixXd m(j.size(), j[0].size());
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (j[r].size() != j[0].size()) throw ConfigError("cmdp: ragged matrix in field '" + field + "'");
        for (std::size_t c = 0; c < j[r].size(); ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

}  // namespace

CmdpModel CmdpModel::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("cmdp: invalid JSON: ") + e.what());
    }
    CmdpModel m;
    try {
        m.states = j.at("states").get<int>();
        m.actions = j.at("actions").get<int>();
        for (auto& p : j.at("P")) m.transitions.push_back(matrix_from_json(p, "P"));
        m.reward = matrix_from_json(j.at("rho"), "rho");
        m.constraint_cost = matrix_from_json(j.at("constraint_cost"), "constraint_cost");
        m.bound = j.at("gamma").get<double>();
        m.penalty = j.at("lambda").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("cmdp: ") + e.what());
    }
    m.validate();
    return m;
}

CmdpModel CmdpModel::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open cmdp model file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

Policy spherical_to_policy(const ConstVecRef& angles, int states, int actions) {
    if (states < 1 || actions < 1) throw ConfigError("spherical_to_policy: bad shape");
    if (angles.size() != static_cast<Eigen::Index>(states) * (actions - 1))
        throw ConfigError("spherical_to_policy: expected " + std::to_string(states * (actions - 1)) + " angles");
    Policy p(states, actions);
    for (int x = 0; x < states; ++x) {
        double remaining = 1.0;  // product of sin^2 so far
        for (int u = 0; u + 1 < actions; ++u) {
            double a = angles[x * (actions - 1) + u];
            double c = std::cos(a), s = std::sin(a);
            p(x, u) = remaining * c * c;
            remaining *= s * s;
        }
        p(x, actions - 1) = remaining;
    }
    return p;
}

Eigen::VectorXd policy_to_spherical(const Policy& policy) {
    const int states = static_cast<int>(policy.rows()), actions = static_cast<int>(policy.cols());
    if (actions < 1) throw ConfigError("policy_to_spherical: empty policy");
    if ((policy.array() <= 0.0).any())
        throw ConfigError("policy_to_spherical: boundary policy (zero probability) has no unique angles");
    Eigen::VectorXd angles(states * (actions - 1));
    for (int x = 0; x < states; ++x) {
        double remaining = 1.0;
        for (int u = 0; u + 1 < actions; ++u) {
            double ratio = std::clamp(policy(x, u) / remaining, 0.0, 1.0);
            double a = std::acos(std::sqrt(ratio));
            angles[x * (actions - 1) + u] = a;
            double s = std::sin(a);
            remaining *= s * s;
        }
    }
    return angles;
}

Evaluation stationary_joint(const CmdpModel& m, const Policy& policy) {
    if (policy.rows() != m.states || policy.cols() != m.actions) throw ConfigError("stationary_joint: policy shape");
    Eigen::MatrixXd chain = Eigen::MatrixXd::Zero(m.states, m.states);
    for (int u = 0; u < m.actions; ++u) chain += policy.col(u).asDiagonal() * m.transitions[u];
    // lazy chain has the same stationary law and removes periodicity
    Eigen::MatrixXd lazy = 0.5 * (chain + Eigen::MatrixXd::Identity(m.states, m.states));
    Eigen::RowVectorXd dist = Eigen::RowVectorXd::Constant(m.states, 1.0 / m.states);
    bool converged = false;
    for (int it = 0; it < 1000000; ++it) {
        Eigen::RowVectorXd next = dist * lazy;
        next /= next.sum();
        dist = next;
        if ((dist * chain - dist).cwiseAbs().maxCoeff() < 1e-14) {
            converged = true;
            break;
        }
    }
    if (!converged || (dist * chain - dist).cwiseAbs().maxCoeff() > 1e-12)
        throw std::runtime_error("stationary_joint: power iteration did not converge (chain not unichain?)");

    Evaluation e;
    e.joint = dist.transpose().asDiagonal() * policy;
    // balance: joint(j,a) = sum_i sum_b joint(i,b) P_ij(b) policy(a|j)
    Eigen::RowVectorXd inflow = Eigen::RowVectorXd::Zero(m.states);
    for (int b = 0; b < m.actions; ++b) inflow += e.joint.col(b).transpose() * m.transitions[b];
    Eigen::MatrixXd rhs = inflow.transpose().asDiagonal() * policy;
    e.residual = std::max((e.joint - rhs).cwiseAbs().maxCoeff(), std::abs(e.joint.sum() - 1.0));
    e.reward = (e.joint.array() * m.reward.array()).sum();
    e.cost = (e.joint.array() * m.constraint_cost.array()).sum();
    return e;
}

double ground_truth_penalized(const CmdpModel& m, const Policy& policy, double penalty) {
    Evaluation e = stationary_joint(m, policy);
    return e.reward - penalty * (e.cost - m.bound) * (e.cost - m.bound);
}

namespace {

int draw(const Eigen::Ref<const Eigen::RowVectorXd>& probs, double u) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size() - 1);
}

}  // namespace

PathAverages simulate_cmdp(const CmdpModel& m, const Policy& policy, long long horizon, RngStream& rng) {
    if (horizon < 1) throw ConfigError("simulate_cmdp: horizon must be >= 1");
    if (policy.rows() != m.states || policy.cols() != m.actions) throw ConfigError("simulate_cmdp: policy shape");
    for (int u = 0; u < m.actions; ++u)
        for (int i = 0; i < m.states; ++i)
            if (std::abs(m.transitions[u].row(i).sum() - 1.0) > 1e-12)
                throw ConfigError("simulate_cmdp: transition row is not stochastic");
    int x = 0;
    double r = 0.0, c = 0.0;
    for (long long t = 0; t < horizon; ++t) {
        int u = draw(policy.row(x), rng.uniform());
        r += m.reward(x, u);
        c += m.constraint_cost(x, u);
        x = draw(m.transitions[u].row(x), rng.uniform());
    }
    return {r / static_cast<double>(horizon), c / static_cast<double>(horizon)};
}

double simulate_cmdp_penalized(const CmdpModel& m, const Policy& policy, long long horizon, double penalty,
                               RngStream& rng) {
    PathAverages a = simulate_cmdp(m, policy, horizon, rng);
    return a.reward - penalty * (a.cost - m.bound) * (a.cost - m.bound);
}

Eigen::VectorXd spsa(const std::function<double(const Eigen::VectorXd&, RngStream&)>& f, const ConstVecRef& x,
                     double perturbation, RngStream& rng) {
    if (!(perturbation > 0.0)) throw ConfigError("spsa: perturbation must be positive");
    Eigen::VectorXd delta(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) delta[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
    std::uint64_t shared = rng.next_u64();
    RngStream plus_rng(shared), minus_rng(shared);
    double fp = f(x + perturbation * delta, plus_rng);
    double fm = f(x - perturbation * delta, minus_rng);
    // Rademacher entries are their own inverses
    return ((fp - fm) / (2.0 * perturbation)) * delta;
}

Eigen::VectorXd spsa_gradient(const CmdpModel& m, const ConstVecRef& angles, long long horizon, double perturbation,
                              double penalty, RngStream& rng) {
    auto f = [&](const Eigen::VectorXd& a, RngStream& r) {
        return simulate_cmdp_penalized(m, spherical_to_policy(a, m.states, m.actions), horizon, penalty, r);
    };
    return spsa(f, angles, perturbation, rng);
}

}  // namespace plirl
