#include "plirl/core.hpp"

#include <cmath>

namespace plirl {

bool all_finite(const ConstVecRef& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (!std::isfinite(v[i])) return false;
    return true;
}

void require_finite(const ConstVecRef& v, const std::string& what, long long index) {
    if (!all_finite(v))
        throw NonFiniteError(what + ": non-finite value at step " + std::to_string(index));
}

GradientSample::GradientSample(ParamVector p, ParamVector g) : point(std::move(p)), gradient(std::move(g)) {
    if (point.size() != gradient.size())
        throw ConfigError("GradientSample: point has length " + std::to_string(point.size()) +
                          " but gradient has length " + std::to_string(gradient.size()));
    if (point.size() < 1) throw ConfigError("GradientSample: empty vectors");
}

RngStream::RngStream(std::uint64_t seed) : seed_(seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    engine_.seed(seq);
}

RngStream RngStream::child(std::uint64_t index) const {
    // splitmix64 finalizer on (seed, index) gives well separated child seeds
    std::uint64_t z = seed_ ^ (0x9e3779b97f4a7c15ULL * (index + 1));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return RngStream(z);
}

std::size_t RngStream::index(std::size_t n) {
    std::uniform_int_distribution<std::size_t> d(0, n - 1);
    return d(engine_);
}

ParamVector gaussian_vector(RngStream& rng, Eigen::Index dim) {
    if (dim < 1) throw ConfigError("gaussian_vector: dim must be >= 1");
    ParamVector v(dim);
    fill_gaussian(rng, v);
    return v;
}

void fill_gaussian(RngStream& rng, Eigen::Ref<Eigen::VectorXd> out) {
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = rng.normal();
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace plirl
