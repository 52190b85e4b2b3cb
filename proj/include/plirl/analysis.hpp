#pragma once

#include "plirl/samplers.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace plirl {

struct Axis {
    double low = 0.0;
    double high = 1.0;
    int bins = 10;

    double width() const { return (high - low) / bins; }
    double center(int i) const { return low + (i + 0.5) * width(); }
    /// Bin index for x, or -1 when outside [low, high]. The last bin is closed.
    int locate(double x) const;
};

struct GridSpec {
    std::vector<Axis> axes;

    int dim() const { return static_cast<int>(axes.size()); }
    std::size_t cells() const;
    void validate() const;
    std::size_t flat_index(const std::vector<int>& idx) const;
    std::vector<int> unflatten(std::size_t flat) const;
};

class EmpiricalDensity {
public:
    GridSpec grid;
    std::vector<double> mass;
    double out_of_range_fraction = 0.0;
    std::size_t count = 0;

    double at(const std::vector<int>& idx) const { return mass[grid.flat_index(idx)]; }
    /// Marginal along one axis.
    EmpiricalDensity marginal(int axis) const;
    void write_csv(std::ostream& os) const;
};

/// Histogram of the post-burn-in samples. Requires grid.dim() == trajectory dim.
EmpiricalDensity build_density(const Trajectory& traj, const GridSpec& grid);
EmpiricalDensity build_density(const std::vector<double>& values, const Axis& axis);

/// Log of each cell mass; empty cells are std::nullopt (masked).
std::vector<std::optional<double>> log_density(const EmpiricalDensity& d);

/// Strict local maxima over the full neighbourhood whose mass is at least `min_fraction` of the largest cell.
std::vector<std::vector<int>> local_modes(const EmpiricalDensity& d, double min_fraction);

/// Half the L1 distance between cell masses, out-of-range mass treated as one extra cell.
double variational_distance(const EmpiricalDensity& a, const EmpiricalDensity& b);

class Ecdf {
public:
    explicit Ecdf(std::vector<double> values);
    double operator()(double x) const;
    const std::vector<double>& sorted() const { return v_; }
    std::size_t size() const { return v_.size(); }

private:
    std::vector<double> v_;
};

/// Integral of |F_a - F_b| over the merged breakpoints.
double wasserstein1(const Ecdf& a, const Ecdf& b);

/// Integrated autocorrelation time of one coordinate (post burn-in), Geyer initial positive sequence.
double autocorr_time(const Trajectory& traj, Eigen::Index coordinate);
double autocorr_time(const std::vector<double>& x);

double mean(const std::vector<double>& x);
double variance(const std::vector<double>& x);

/// Every `stride`-th element.
std::vector<double> thin(const std::vector<double>& x, std::size_t stride);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Asymptotic Kolmogorov tail probability P(K > lambda).
double kolmogorov_tail(double lambda);
/// Two-sample test on independent samples.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);
/// One-sample test against a continuous CDF.
template <class Cdf>
KsResult ks_one_sample(std::vector<double> a, Cdf cdf);

double normal_cdf(double x, double mean, double sd);

}  // namespace plirl

#include <algorithm>
#include <cmath>

template <class Cdf>
plirl::KsResult plirl::ks_one_sample(std::vector<double> a, Cdf cdf) {
    std::sort(a.begin(), a.end());
    const double n = static_cast<double>(a.size());
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double f = cdf(a[i]);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    double sn = std::sqrt(n);
    return {d, kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d)};
}
