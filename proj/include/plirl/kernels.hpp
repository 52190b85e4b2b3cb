#pragma once

#include "plirl/core.hpp"

#include <string>

namespace plirl {

enum class KernelFamily { gaussian, truncated_gaussian };

std::string to_string(KernelFamily f);
KernelFamily kernel_family_from_string(const std::string& s);

/// Smoothing kernel K with bandwidth. Evaluations are (1/bw^N) K(diff/bw).
class Kernel {
public:
    /// Support radius of the truncated family, in units of the bandwidth.
    static constexpr double truncation_radius = 4.0;

    Kernel(KernelFamily family, double bandwidth, int dim);

    KernelFamily family() const { return family_; }
    double bandwidth() const { return bandwidth_; }
    int dim() const { return dim_; }

    /// (1/bw^N) K(diff/bw).
    double scaled_eval(const ConstVecRef& diff) const;
    /// Same quantity from the squared norm of the difference.
    double scaled_eval_sq(double sq_norm) const;
    /// Unscaled K(u) from |u|^2.
    double unit_eval_sq(double sq_norm) const;

private:
    KernelFamily family_;
    double bandwidth_;
    int dim_;
    double unit_norm_;    // normalizing constant of K
    double scaled_norm_;  // unit_norm_ / bw^N
};

struct KernelAxiomReport {
    double mass = 0.0;
    double second_moment = 0.0;
    double symmetry_max_err = 0.0;
};

/// Nested Gauss-Kronrod quadrature of the scaled kernel over its support ball
/// (12 bandwidths for the untruncated family). Requires dim <= 3.
KernelAxiomReport verify_kernel_axioms(const Kernel& kernel);

}  // namespace plirl
