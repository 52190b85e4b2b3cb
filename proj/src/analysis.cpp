#include "plirl/analysis.hpp"

#include <unsupported/Eigen/FFT>

#include <complex>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace plirl {

int Axis::locate(double x) const {
    if (!(x >= low && x <= high)) return -1;
    int i = static_cast<int>((x - low) / width());
    return std::min(i, bins - 1);
}

std::size_t GridSpec::cells() const {
    std::size_t c = 1;
    for (auto& a : axes) c *= static_cast<std::size_t>(a.bins);
    return c;
}

void GridSpec::validate() const {
    if (axes.empty()) throw ConfigError("grid needs at least one axis");
    for (std::size_t d = 0; d < axes.size(); ++d) {
        if (!(axes[d].low < axes[d].high)) throw ConfigError("grid axis " + std::to_string(d) + ": low must be < high");
        if (axes[d].bins < 2) throw ConfigError("grid axis " + std::to_string(d) + ": bins must be >= 2");
    }
}

// Row-major with the first axis slowest.
std::size_t GridSpec::flat_index(const std::vector<int>& idx) const {
    std::size_t f = 0;
    for (std::size_t d = 0; d < axes.size(); ++d) f = f * axes[d].bins + idx[d];
    return f;
}

std::vector<int> GridSpec::unflatten(std::size_t flat) const {
    std::vector<int> idx(axes.size());
    for (std::size_t d = axes.size(); d-- > 0;) {
        idx[d] = static_cast<int>(flat % axes[d].bins);
        flat /= axes[d].bins;
    }
    return idx;
}

EmpiricalDensity EmpiricalDensity::marginal(int axis) const {
    EmpiricalDensity m;
    m.grid.axes = {grid.axes.at(axis)};
    m.mass.assign(grid.axes[axis].bins, 0.0);
    for (std::size_t c = 0; c < mass.size(); ++c) m.mass[grid.unflatten(c)[axis]] += mass[c];
    m.out_of_range_fraction = out_of_range_fraction;
    m.count = count;
    return m;
}

void EmpiricalDensity::write_csv(std::ostream& os) const {
    for (int d = 1; d <= grid.dim(); ++d) os << "i" << d << ',';
    for (int d = 1; d <= grid.dim(); ++d) os << "center_" << d << ',';
    os << "mass,log_mass\n";
    os.precision(12);
    auto logs = log_density(*this);
    for (std::size_t c = 0; c < mass.size(); ++c) {
        auto idx = grid.unflatten(c);
        for (int i : idx) os << i << ',';
        for (int d = 0; d < grid.dim(); ++d) os << grid.axes[d].center(idx[d]) << ',';
        os << mass[c] << ',';
        if (logs[c]) os << *logs[c];
        else os << "NA";
        os << '\n';
    }
}

EmpiricalDensity build_density(const Trajectory& traj, const GridSpec& grid) {
    grid.validate();
    if (grid.dim() != traj.dim())
        throw ConfigError("grid dimension " + std::to_string(grid.dim()) + " does not match trajectory dimension " +
                          std::to_string(traj.dim()));
    if (traj.burn_in() >= traj.size()) throw std::invalid_argument("build_density: empty post-burn-in trajectory");
    EmpiricalDensity d;
    d.grid = grid;
    d.mass.assign(grid.cells(), 0.0);
    std::vector<double> counts(grid.cells(), 0.0);
    std::size_t outside = 0;
    std::vector<int> idx(grid.dim());
    for (std::size_t i = traj.burn_in(); i < traj.size(); ++i) {
        bool in = true;
        for (int a = 0; a < grid.dim() && in; ++a) {
            idx[a] = grid.axes[a].locate(traj.at(i, a));
            in = idx[a] >= 0;
        }
        if (in) counts[grid.flat_index(idx)] += 1.0;
        else ++outside;
    }
    d.count = traj.size() - traj.burn_in();
    const double n = static_cast<double>(d.count);
    for (std::size_t c = 0; c < counts.size(); ++c) d.mass[c] = counts[c] / n;
    d.out_of_range_fraction = static_cast<double>(outside) / n;
    return d;
}

EmpiricalDensity build_density(const std::vector<double>& values, const Axis& axis) {
    Trajectory t(1);
    Eigen::VectorXd v(1);
    for (double x : values) {
        v[0] = x;
        t.push_back(v);
    }
    return build_density(t, GridSpec{{axis}});
}

std::vector<std::optional<double>> log_density(const EmpiricalDensity& d) {
    std::vector<std::optional<double>> out(d.mass.size());
    for (std::size_t c = 0; c < d.mass.size(); ++c)
        if (d.mass[c] > 0.0) out[c] = std::log(d.mass[c]);
    return out;
}

std::vector<std::vector<int>> local_modes(const EmpiricalDensity& d, double min_fraction) {
    const auto& g = d.grid;
    double peak = *std::max_element(d.mass.begin(), d.mass.end());
    std::vector<std::vector<int>> modes;
    if (peak <= 0.0) return modes;
    const int n = g.dim();
    int offsets = 1;
    for (int i = 0; i < n; ++i) offsets *= 3;
    for (std::size_t c = 0; c < d.mass.size(); ++c) {
        double m = d.mass[c];
        if (m < min_fraction * peak || m <= 0.0) continue;
        auto idx = g.unflatten(c);
        bool is_max = true;
        for (int o = 0; o < offsets && is_max; ++o) {
            std::vector<int> nb = idx;
            int r = o;
            bool self = true;
            bool inside = true;
            for (int a = 0; a < n; ++a) {
                int delta = r % 3 - 1;
                r /= 3;
                if (delta != 0) self = false;
                nb[a] += delta;
                if (nb[a] < 0 || nb[a] >= g.axes[a].bins) inside = false;
            }
            if (self || !inside) continue;
            double other = d.mass[g.flat_index(nb)];
            // ties broken by flat index so a plateau yields a single mode
            if (other > m || (other == m && g.flat_index(nb) < c)) is_max = false;
        }
        if (is_max) modes.push_back(idx);
    }
    return modes;
}

double variational_distance(const EmpiricalDensity& a, const EmpiricalDensity& b) {
    if (a.grid.dim() != b.grid.dim()) throw ConfigError("variational_distance: grid mismatch");
    for (int d = 0; d < a.grid.dim(); ++d) {
        const auto& x = a.grid.axes[d];
        const auto& y = b.grid.axes[d];
        if (x.low != y.low || x.high != y.high || x.bins != y.bins)
            throw ConfigError("variational_distance: grid mismatch on axis " + std::to_string(d));
    }
    double s = std::abs(a.out_of_range_fraction - b.out_of_range_fraction);
    for (std::size_t c = 0; c < a.mass.size(); ++c) s += std::abs(a.mass[c] - b.mass[c]);
    return 0.5 * s;
}

Ecdf::Ecdf(std::vector<double> values) : v_(std::move(values)) {
    if (v_.empty()) throw std::invalid_argument("Ecdf: empty sample");
    std::sort(v_.begin(), v_.end());
}

double Ecdf::operator()(double x) const {
    return static_cast<double>(std::upper_bound(v_.begin(), v_.end(), x) - v_.begin()) / static_cast<double>(v_.size());
}

double wasserstein1(const Ecdf& a, const Ecdf& b) {
    const auto& x = a.sorted();
    const auto& y = b.sorted();
    const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double prev = std::min(x.front(), y.front());
    double total = 0.0;
    while (i < x.size() || j < y.size()) {
        double next;
        if (j >= y.size() || (i < x.size() && x[i] <= y[j])) next = x[i];
        else next = y[j];
        total += std::abs(i / na - j / nb) * (next - prev);
        while (i < x.size() && x[i] == next) ++i;
        while (j < y.size() && y[j] == next) ++j;
        prev = next;
    }
    return total;
}

double mean(const std::vector<double>& x) {
    if (x.empty()) throw std::invalid_argument("mean of empty sample");
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(const std::vector<double>& x) {
    if (x.size() < 2) throw std::invalid_argument("variance needs at least two values");
    double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

std::vector<double> thin(const std::vector<double>& x, std::size_t stride) {
    if (stride == 0) stride = 1;
    std::vector<double> out;
    out.reserve(x.size() / stride + 1);
    for (std::size_t i = 0; i < x.size(); i += stride) out.push_back(x[i]);
    return out;
}

double autocorr_time(const std::vector<double>& x) {
    const std::size_t n = x.size();
    if (n < 1000) throw std::invalid_argument("autocorr_time: need at least 1000 post-burn-in samples");
    double m = mean(x);
    std::vector<double> c(x.size());
    for (std::size_t i = 0; i < n; ++i) c[i] = x[i] - m;
    double c0 = 0.0;
    for (double v : c) c0 += v * v;
    c0 /= static_cast<double>(n);
    if (!(c0 > 0.0)) throw std::invalid_argument("autocorr_time: constant sequence");
    // autocovariance through a zero-padded FFT
    std::size_t len = 1;
    while (len < 2 * n) len <<= 1;
    std::vector<double> padded(len, 0.0);
    std::copy(c.begin(), c.end(), padded.begin());
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spec;
    fft.fwd(spec, padded);
    for (auto& z : spec) z = std::norm(z);
    std::vector<double> acov;
    fft.inv(acov, spec);
    auto rho = [&](std::size_t lag) { return acov[lag] / (static_cast<double>(n) * c0); };
    // sum of consecutive pairs Gamma_m = rho(2m) + rho(2m+1) while positive
    double tau = -1.0;
    for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
        double gamma = rho(2 * m) + rho(2 * m + 1);
        if (gamma <= 0.0) break;
        tau += 2.0 * gamma;
    }
    return std::max(tau, 1e-12);
}

double autocorr_time(const Trajectory& traj, Eigen::Index coordinate) {
    if (coordinate < 0 || coordinate >= traj.dim()) throw ConfigError("autocorr_time: coordinate out of range");
    return autocorr_time(traj.coordinate(coordinate));
}

double kolmogorov_tail(double lambda) {
    if (lambda <= 0.0) return 1.0;
    if (lambda < 0.2) return 1.0;
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        double term = std::exp(-2.0 * k * k * lambda * lambda);
        s += (k % 2 ? 1.0 : -1.0) * term;
        if (term < 1e-17) break;
    }
    return std::clamp(2.0 * s, 0.0, 1.0);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        d = std::max(d, std::abs(i / na - j / nb));
    }
    double ne = std::sqrt(na * nb / (na + nb));
    return {d, kolmogorov_tail((ne + 0.12 + 0.11 / ne) * d)};
}

double normal_cdf(double x, double mean, double sd) { return 0.5 * std::erfc(-(x - mean) / (sd * std::sqrt(2.0))); }

}  // namespace plirl
