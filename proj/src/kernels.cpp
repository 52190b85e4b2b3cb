#include "plirl/kernels.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>

#include <cmath>
#include <numbers>
#include <vector>

namespace plirl {

std::string to_string(KernelFamily f) {
    return f == KernelFamily::gaussian ? "gaussian" : "truncated-gaussian";
}

KernelFamily kernel_family_from_string(const std::string& s) {
    if (s == "gaussian") return KernelFamily::gaussian;
    if (s == "truncated-gaussian" || s == "truncated_gaussian") return KernelFamily::truncated_gaussian;
    throw ConfigError("unknown kernel family '" + s + "'");
}

Kernel::Kernel(KernelFamily family, double bandwidth, int dim) : family_(family), bandwidth_(bandwidth), dim_(dim) {
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw ConfigError("kernel bandwidth must be positive");
    if (dim < 1) throw ConfigError("kernel dim must be >= 1");
    unit_norm_ = std::pow(2.0 * std::numbers::pi, -0.5 * dim);
    if (family == KernelFamily::truncated_gaussian) {
        // mass of a standard N-variate normal inside the ball of the truncation radius
        boost::math::chi_squared chi2(dim);
        unit_norm_ /= boost::math::cdf(chi2, truncation_radius * truncation_radius);
    }
    scaled_norm_ = unit_norm_ * std::pow(bandwidth, -static_cast<double>(dim));
}

double Kernel::unit_eval_sq(double sq_norm) const {
    if (family_ == KernelFamily::truncated_gaussian && sq_norm > truncation_radius * truncation_radius) return 0.0;
    return unit_norm_ * std::exp(-0.5 * sq_norm);
}

double Kernel::scaled_eval_sq(double sq_norm) const {
    double u2 = sq_norm / (bandwidth_ * bandwidth_);
    if (family_ == KernelFamily::truncated_gaussian && u2 > truncation_radius * truncation_radius) return 0.0;
    return scaled_norm_ * std::exp(-0.5 * u2);
}

double Kernel::scaled_eval(const ConstVecRef& diff) const {
    if (diff.size() != dim_)
        throw ConfigError("kernel of dim " + std::to_string(dim_) + " evaluated on vector of length " +
                          std::to_string(diff.size()));
    return scaled_eval_sq(diff.squaredNorm());
}

namespace {

// Integral of f over the ball of radius r, nested one coordinate at a time.
template <class F>
double ball_integral(F& f, ParamVector& u, int d, double r2_left) {
    using boost::math::quadrature::gauss_kronrod;
    const double lim = std::sqrt(std::max(0.0, r2_left));
    auto inner = [&](double x) {
        u[d] = x;
        if (d + 1 == u.size()) return f(u);
        return ball_integral(f, u, d + 1, r2_left - x * x);
    };
    return gauss_kronrod<double, 31>::integrate(inner, -lim, lim, 4, 1e-14);
}

}  // namespace

KernelAxiomReport verify_kernel_axioms(const Kernel& kernel) {
    const int n = kernel.dim();
    if (n > 3) throw ConfigError("verify_kernel_axioms: quadrature only supported for dim <= 3");
    const double bw = kernel.bandwidth();
    const double radius =
        (kernel.family() == KernelFamily::truncated_gaussian ? Kernel::truncation_radius : 12.0) * bw;

    KernelAxiomReport rep;
    ParamVector u(n);
    auto mass = [&](const ParamVector& x) {
        double k = kernel.scaled_eval(x);
        rep.symmetry_max_err = std::max(rep.symmetry_max_err, std::abs(k - kernel.scaled_eval(-x)));
        return k;
    };
    auto moment = [&](const ParamVector& x) { return kernel.scaled_eval(x) * x.squaredNorm(); };
    rep.mass = ball_integral(mass, u, 0, radius * radius);
    // second moment reported for the unit kernel
    rep.second_moment = ball_integral(moment, u, 0, radius * radius) / (bw * bw);
    return rep;
}

}  // namespace plirl
