#include "plirl/problems.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>
#include <numeric>
#include <sstream>

namespace plirl {

GradientOracle quadratic_oracle(double a, double noise_std) {
    if (!(a > 0.0)) throw ConfigError("quadratic oracle: curvature must be positive");
    if (noise_std < 0.0) throw ConfigError("quadratic oracle: noise std must be >= 0");
    return [a, noise_std](const ParamVector& x, RngStream& rng) -> ParamVector {
        ParamVector g = -a * x;
        if (noise_std > 0.0)
            for (Eigen::Index i = 0; i < g.size(); ++i) g[i] += noise_std * rng.normal();
        return g;
    };
}

GradientOracle shifted_quadratic_oracle(double a, ParamVector center, double noise_std) {
    auto base = quadratic_oracle(a, noise_std);
    return [base, center](const ParamVector& x, RngStream& rng) -> ParamVector {
        if (x.size() != center.size()) throw ConfigError("quadratic oracle: dimension mismatch");
        return base(x - center, rng);
    };
}

void MixtureModel::validate() const {
    if (truth.size() != 2 || prior_variances.size() != 2) throw ConfigError("mixture model is two-dimensional");
    if ((prior_variances.array() <= 0.0).any()) throw ConfigError("mixture prior variances must be positive");
    if (!(component_variance > 0.0)) throw ConfigError("mixture component variance must be positive");
    if (!(obs_weight > 0.0)) throw ConfigError("mixture obs_weight must be positive");
}

double MixtureModel::log_prior(const ConstVecRef& t) const {
    return -0.5 * (t.array().square() / prior_variances.array()).sum();
}

double MixtureModel::log_likelihood(const ConstVecRef& t, double y) const {
    const double s2 = component_variance;
    double a = -(y - t[0]) * (y - t[0]) / (2 * s2);
    double b = -(y - t[0] - t[1]) * (y - t[0] - t[1]) / (2 * s2);
    double m = std::max(a, b);
    return m + std::log(0.5 * std::exp(a - m) + 0.5 * std::exp(b - m)) - 0.5 * std::log(2 * std::numbers::pi * s2);
}

double MixtureModel::expected_log_likelihood(const ConstVecRef& t) const {
    const double s = std::sqrt(component_variance);
    const double m1 = truth[0], m2 = truth[0] + truth[1];
    auto f = [&](double y) {
        double dens = 0.5 * (std::exp(-(y - m1) * (y - m1) / (2 * s * s)) + std::exp(-(y - m2) * (y - m2) / (2 * s * s))) /
                      (std::sqrt(2 * std::numbers::pi) * s);
        return dens * log_likelihood(t, y);
    };
    double lo = std::min(m1, m2) - 14 * s, hi = std::max(m1, m2) + 14 * s;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 10, 1e-13);
}

double MixtureModel::reward(const ConstVecRef& t) const { return log_prior(t) + obs_weight * expected_log_likelihood(t); }

double mixture_sample_obs(const MixtureModel& m, RngStream& rng) {
    double center = rng.uniform() < 0.5 ? m.truth[0] : m.truth[0] + m.truth[1];
    return center + std::sqrt(m.component_variance) * rng.normal();
}

ParamVector mixture_grad(const MixtureModel& m, const ConstVecRef& t, double y) {
    if (t.size() != 2) throw ConfigError("mixture_grad: parameter must have length 2");
    const double s2 = m.component_variance;
    const double d1 = y - t[0], d2 = y - t[0] - t[1];
    // responsibility of the second component
    double r2 = 1.0 / (1.0 + std::exp((d2 * d2 - d1 * d1) / (2 * s2)));
    double r1 = 1.0 - r2;
    ParamVector g(2);
    g[0] = -t[0] / m.prior_variances[0] + m.obs_weight * (r1 * d1 + r2 * d2) / s2;
    g[1] = -t[1] / m.prior_variances[1] + m.obs_weight * r2 * d2 / s2;
    return g;
}

GradientOracle mixture_oracle(const MixtureModel& m) {
    m.validate();
    return [m](const ParamVector& t, RngStream& rng) { return mixture_grad(m, t, mixture_sample_obs(m, rng)); };
}

double LogisticModel::mean_log_likelihood(const ConstVecRef& t) const {
    Eigen::VectorXd z = features * t;
    double s = 0.0;
    for (Eigen::Index k = 0; k < z.size(); ++k) {
        // log sigma(z) for y=1, log(1 - sigma(z)) for y=0, written stably
        double v = labels[k] > 0.5 ? z[k] : -z[k];
        s += -std::log1p(std::exp(-std::abs(v))) + std::min(v, 0.0);
    }
    return s / static_cast<double>(z.size());
}

LogisticModel parse_libsvm(std::istream& in, int num_features) {
    if (num_features < 1) throw ConfigError("libsvm: feature count must be positive");
    std::vector<std::vector<std::pair<int, double>>> rows;
    std::vector<double> labels;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        double label;
        try {
            std::size_t used = 0;
            label = std::stod(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ConfigError("libsvm: malformed label on line " + std::to_string(lineno));
        }
        if (label != 1.0 && label != -1.0 && label != 0.0)
            throw ConfigError("libsvm: label must be -1, 0 or +1 on line " + std::to_string(lineno));
        std::vector<std::pair<int, double>> row;
        while (ls >> tok) {
            auto colon = tok.find(':');
            if (colon == std::string::npos || colon == 0 || colon + 1 == tok.size())
                throw ConfigError("libsvm: malformed entry '" + tok + "' on line " + std::to_string(lineno));
            int idx;
            double val;
            try {
                std::size_t u1 = 0, u2 = 0;
                idx = std::stoi(tok.substr(0, colon), &u1);
                val = std::stod(tok.substr(colon + 1), &u2);
                if (u1 != colon || u2 != tok.size() - colon - 1) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw ConfigError("libsvm: malformed entry '" + tok + "' on line " + std::to_string(lineno));
            }
            if (idx < 1 || idx > num_features)
                throw ConfigError("libsvm: feature index " + std::to_string(idx) + " outside [1, " +
                                  std::to_string(num_features) + "] on line " + std::to_string(lineno));
            row.emplace_back(idx, val);
        }
        rows.push_back(std::move(row));
        labels.push_back(label > 0.0 ? 1.0 : 0.0);
    }
    LogisticModel m;
    m.features = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), num_features + 1);
    m.labels = Eigen::VectorXd::Map(labels.data(), static_cast<Eigen::Index>(labels.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        m.features(static_cast<Eigen::Index>(r), 0) = 1.0;
        for (auto [idx, val] : rows[r]) m.features(static_cast<Eigen::Index>(r), idx) = val;
    }
    m.source_columns.resize(num_features);
    std::iota(m.source_columns.begin(), m.source_columns.end(), 1);
    return m;
}

LogisticModel load_libsvm(const std::string& path, int num_features) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open libsvm file '" + path + "'");
    return parse_libsvm(in, num_features);
}

LogisticModel subsample(const LogisticModel& m, Eigen::Index rows, int features) {
    rows = std::min(rows, m.rows());
    const int available = static_cast<int>(m.dim()) - 1;
    features = std::min(features, available);
    std::vector<int> cols(available);
    std::iota(cols.begin(), cols.end(), 1);
    std::vector<long> freq(m.dim(), 0);
    for (int c = 1; c < m.dim(); ++c) freq[c] = (m.features.col(c).head(rows).array() != 0.0).count();
    std::stable_sort(cols.begin(), cols.end(), [&](int a, int b) { return freq[a] > freq[b]; });
    cols.resize(features);
    std::sort(cols.begin(), cols.end());

    LogisticModel out;
    out.obs_weight = m.obs_weight;
    out.features.resize(rows, features + 1);
    out.features.col(0) = m.features.col(0).head(rows);
    for (int j = 0; j < features; ++j) {
        out.features.col(j + 1) = m.features.col(cols[j]).head(rows);
        out.source_columns.push_back(m.source_columns.empty() ? cols[j] : m.source_columns[cols[j] - 1]);
    }
    out.labels = m.labels.head(rows);
    return out;
}

ParamVector logistic_grad(const LogisticModel& m, const ConstVecRef& t, Eigen::Index k) {
    if (t.size() != m.dim()) throw ConfigError("logistic_grad: parameter dimension mismatch");
    if (k < 0 || k >= m.rows()) throw ConfigError("logistic_grad: row index out of range");
    ParamVector g(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) g[i] = t[i] > 0.0 ? -1.0 : (t[i] < 0.0 ? 1.0 : 0.0);
    double z = m.features.row(k).dot(t);
    double sig = 1.0 / (1.0 + std::exp(-z));
    g += (m.obs_weight * (m.labels[k] - sig)) * m.features.row(k).transpose();
    return g;
}

GradientOracle logistic_oracle(const LogisticModel& m) {
    if (m.rows() == 0) throw ConfigError("logistic oracle: empty dataset");
    auto shared = std::make_shared<const LogisticModel>(m);
    return [shared](const ParamVector& t, RngStream& rng) {
        return logistic_grad(*shared, t, static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(shared->rows()))));
    };
}

SwitchingReward::SwitchingReward(Eigen::MatrixXd generator, double rate, std::vector<GradientOracle> regimes,
                                 int initial_state)
    : q_(std::move(generator)), rate_(rate), oracles_(std::move(regimes)), state_(initial_state) {
    const Eigen::Index n = q_.rows();
    if (n < 1 || q_.cols() != n) throw ConfigError("switching generator must be square");
    if (static_cast<Eigen::Index>(oracles_.size()) != n)
        throw ConfigError("switching: one oracle per hidden state required");
    if (initial_state < 0 || initial_state >= n) throw ConfigError("switching: initial state out of range");
    if (rate < 0.0) throw ConfigError("switching: rate must be >= 0");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::abs(q_.row(i).sum()) > 1e-12) throw ConfigError("switching generator rows must sum to 0");
        for (Eigen::Index j = 0; j < n; ++j)
            if (i != j && q_(i, j) < 0.0) throw ConfigError("switching generator off-diagonals must be >= 0");
    }
    transition_ = Eigen::MatrixXd::Identity(n, n) + rate * q_;
    if ((transition_.array() < 0.0).any())
        throw ConfigError("switching rate too large: I + rate*Q has a negative entry");
}

int SwitchingReward::step(RngStream& rng) {
    double u = rng.uniform();
    double acc = 0.0;
    const Eigen::Index n = transition_.cols();
    for (Eigen::Index j = 0; j < n; ++j) {
        acc += transition_(state_, j);
        if (u < acc) {
            state_ = static_cast<int>(j);
            return state_;
        }
    }
    return state_;
}

ParamVector SwitchingReward::gradient(const ParamVector& x, RngStream& rng) const { return oracles_[state_](x, rng); }

int switching_step(SwitchingReward& s, RngStream& rng) { return s.step(rng); }

Eigen::VectorXd generator_stationary(const Eigen::MatrixXd& q) {
    const Eigen::Index n = q.rows();
    Eigen::MatrixXd a(n + 1, n);
    a.topRows(n) = q.transpose();
    a.row(n).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
    b[n] = 1.0;
    return a.colPivHouseholderQr().solve(b);
}

}  // namespace plirl
