#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace plirl {

using ParamVector = Eigen::VectorXd;
using ConstVecRef = Eigen::Ref<const Eigen::VectorXd>;

/// Raised whenever a numeric routine would emit NaN or Inf.
class NonFiniteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised for inconsistent configuration (dimensions, invalid ranges).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

bool all_finite(const ConstVecRef& v);

/// Throws NonFiniteError carrying `what` and `index` if any entry of v is not finite.
void require_finite(const ConstVecRef& v, const std::string& what, long long index);

/// Evaluation point and noisy gradient emitted by a forward agent.
struct GradientSample {
    ParamVector point;
    ParamVector gradient;

    GradientSample() = default;
    GradientSample(ParamVector p, ParamVector g);
    Eigen::Index dim() const { return point.size(); }
};

/// Seeded pseudo-random stream. Single owner; workers derive children.
class RngStream {
public:
    static constexpr const char* algorithm = "mt19937_64+std::normal_distribution";

    explicit RngStream(std::uint64_t seed);

    std::uint64_t seed() const { return seed_; }

    /// Independent stream for worker `index`, a pure function of (seed, index).
    RngStream child(std::uint64_t index) const;

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    std::uint64_t next_u64() { return engine_(); }
    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n);
    std::mt19937_64& engine() { return engine_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Standard N-variate normal draw.
ParamVector gaussian_vector(RngStream& rng, Eigen::Index dim);

/// Fill `out` with standard normal entries without reallocating.
void fill_gaussian(RngStream& rng, Eigen::Ref<Eigen::VectorXd> out);

/// 64-bit FNV-1a over a byte string.
std::uint64_t fnv1a(const std::string& bytes);

}  // namespace plirl
