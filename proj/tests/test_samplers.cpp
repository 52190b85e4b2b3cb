#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "plirl/analysis.hpp"
#include "plirl/problems.hpp"
#include "plirl/samplers.hpp"

#include <cmath>
#include <cstring>
#include <numbers>
#include <sstream>

using namespace plirl;

namespace {

SamplerConfig passive_config(int dim, double mu, double bw) {
    SamplerConfig c;
    c.step = mu;
    c.beta = 2.0;
    c.kernel = Kernel(KernelFamily::gaussian, bw, dim);
    c.init_density = InitDensity::standard(dim);
    c.init = ParamVector::Zero(dim);
    return c;
}

GradientSample far_sample(int dim) {
    return GradientSample(ParamVector::Constant(dim, 30.0), ParamVector::Constant(dim, 5.0));
}

// Gibbs variance of the quadratic reward -a x^2/2 at inverse temperature beta.
double gibbs_variance(double a, double beta) { return 1.0 / (a * beta); }

double post_variance(const Trajectory& t) { return variance(t.coordinate(0)); }

}  // namespace

TEST_CASE("generalized step reduces to the prior drift when the kernel vanishes") {
    SamplerConfig c = passive_config(1, 1e-2, 0.05);
    ParamVector x = ParamVector::Constant(1, 0.4);
    RngStream rng(1), copy(1);
    ParamVector next = step_passive_generalized(x, far_sample(1), c, rng);
    auto [p, g] = c.init_density->density_and_grad(x);
    double w = gaussian_vector(copy, 1)[0];
    CHECK(next[0] == doctest::Approx(x[0] + c.step * g[0] * p + std::sqrt(c.step) * p * w).epsilon(1e-14));
}

TEST_CASE("generalized drift vanishes at the prior mode") {
    SamplerConfig c = passive_config(1, 1e-2, 0.05);
    RngStream rng(2), copy(2);
    ParamVector next = step_passive_generalized(ParamVector::Zero(1), far_sample(1), c, rng);
    double p0 = c.init_density->density(ParamVector::Zero(1));
    CHECK(next[0] - std::sqrt(c.step) * p0 * gaussian_vector(copy, 1)[0] == doctest::Approx(0.0));
}

TEST_CASE("generalized-b step does not move without kernel mass") {
    SamplerConfig c = passive_config(1, 1e-2, 0.05);
    c.kernel = Kernel(KernelFamily::truncated_gaussian, 0.05, 1);
    ParamVector x = ParamVector::Constant(1, 0.3);
    RngStream rng(3);
    CHECK(step_passive_generalized_b(x, far_sample(1), c, rng) == x);
}

TEST_CASE("passive classical step is a random walk without kernel mass") {
    SamplerConfig c = passive_config(2, 1e-2, 0.05);
    ParamVector x(2);
    x << 0.1, -0.2;
    RngStream rng(4), copy(4);
    ParamVector next = step_passive_classical(x, far_sample(2), c, rng);
    ParamVector expect = x + std::sqrt(c.step) * gaussian_vector(copy, 2);
    CHECK((next - expect).norm() < 1e-15);
}

TEST_CASE("passive classical refuses a vanishing init density") {
    SamplerConfig c = passive_config(1, 1e-2, 0.05);
    RngStream rng(5);
    CHECK_THROWS_AS(step_passive_classical(ParamVector::Constant(1, 40.0), far_sample(1), c, rng), NonFiniteError);
}

TEST_CASE("multikernel with a single sample uses its gradient") {
    SamplerConfig c;
    c.step = 1e-2;
    c.beta = 2.0;
    c.cond_std = 0.1;
    c.init = ParamVector::Zero(1);
    GradientSample s(ParamVector::Constant(1, 3.0), ParamVector::Constant(1, -2.0));
    RngStream rng(6), copy(6);
    ParamVector next = step_multikernel(ParamVector::Zero(1), {s}, c, rng);
    CHECK(next[0] == doctest::Approx(c.step * (-2.0) + std::sqrt(c.step) * gaussian_vector(copy, 1)[0]).epsilon(1e-14));
}

TEST_CASE("multikernel with identical points averages the gradients") {
    SamplerConfig c;
    c.step = 1e-2;
    c.beta = 1.0;
    c.cond_std = 0.1;
    c.init = ParamVector::Zero(2);
    std::vector<GradientSample> pool;
    ParamVector pt(2), mean = ParamVector::Zero(2);
    pt << 0.5, -0.5;
    RngStream gen(7);
    for (int i = 0; i < 8; ++i) {
        ParamVector g = gaussian_vector(gen, 2);
        mean += g / 8.0;
        pool.emplace_back(pt, g);
    }
    RngStream rng(8), copy(8);
    ParamVector next = step_multikernel(ParamVector::Zero(2), pool, c, rng);
    ParamVector expect = 0.5 * c.step * mean + std::sqrt(c.step) * gaussian_vector(copy, 2);
    CHECK((next - expect).norm() < 1e-14);
}

TEST_CASE("conditional weights are normalized and fall back to uniform") {
    RngStream rng(9);
    GradientStream s(3);
    for (int i = 0; i < 40; ++i) s.push_back(2.0 * gaussian_vector(rng, 3), gaussian_vector(rng, 3));
    std::vector<std::size_t> idx(40);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Eigen::VectorXd w(40);
    for (int t = 0; t < 100; ++t) {
        ParamVector x = 3.0 * gaussian_vector(rng, 3);
        CHECK(conditional_weights(x, s, idx, 0.05, w));
        CHECK(std::abs(w.sum() - 1.0) < 1e-12);
        CHECK((w.array() >= 0.0).all());
    }
    CHECK(conditional_weights(ParamVector::Constant(3, 40.0), s, idx, 0.05, w));
    CHECK(std::abs(w.sum() - 1.0) < 1e-12);
    CHECK_FALSE(conditional_weights(ParamVector::Constant(3, 1e200), s, idx, 0.05, w));
    CHECK((w.array() == 1.0 / 40).all());
}

TEST_CASE("multikernel counts underflow resets") {
    SamplerConfig c;
    c.step = 1e-4;
    c.cond_std = 1e-3;
    c.init = ParamVector::Zero(1);
    std::vector<GradientSample> pool{GradientSample(ParamVector::Constant(1, 1e160), ParamVector::Zero(1))};
    pool.push_back(pool.front());
    StepStats stats;
    RngStream rng(10);
    step_multikernel(ParamVector::Zero(1), pool, c, rng, &stats);
    CHECK(stats.underflow_resets == 1);
}

TEST_CASE("active kernel to density ratio") {
    for (int n = 1; n <= 3; ++n) {
        Kernel k(KernelFamily::gaussian, 0.1, n);
        CHECK(active_weight(k, 0.25, ParamVector::Zero(n)) == doctest::Approx(std::pow(2.5, n)).epsilon(1e-12));
        Kernel same(KernelFamily::gaussian, 0.25, n);
        RngStream rng(11);
        for (int i = 0; i < 50; ++i)
            CHECK(active_weight(same, 0.25, 0.25 * gaussian_vector(rng, n)) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("skew matrix validation") {
    SamplerConfig c = passive_config(2, 1e-3, 0.2);
    c.skew = Eigen::MatrixXd(2, 2);
    c.skew << 0, 1, 1, 0;
    CHECK_THROWS_AS(c.validate(Variant::nonreversible), ConfigError);
    c.skew << 0, 1, -1, 0;
    CHECK_NOTHROW(c.validate(Variant::nonreversible));
    CHECK_THROWS_AS(c.validate(Variant::passive_classical), ConfigError);
}

TEST_CASE("zero skew reproduces passive classical bitwise") {
    GradientStream s(1);
    RngStream gen(12);
    for (int i = 0; i < 5000; ++i) {
        ParamVector p = gaussian_vector(gen, 1);
        s.push_back(p, -p + gaussian_vector(gen, 1));
    }
    SamplerConfig a = passive_config(1, 1e-3, 0.3);
    SamplerConfig b = a;
    b.skew = Eigen::MatrixXd::Zero(1, 1);
    Trajectory ta = run_sampler(Variant::passive_classical, SampleSource::from_stream(s), a, 5000, RngStream(13));
    Trajectory tb = run_sampler(Variant::nonreversible, SampleSource::from_stream(s), b, 5000, RngStream(13));
    REQUIRE(ta.size() == tb.size());
    auto ca = ta.coordinate(0, false), cb = tb.coordinate(0, false);
    CHECK(std::memcmp(ca.data(), cb.data(), ca.size() * sizeof(double)) == 0);
}

TEST_CASE("run_sampler basics") {
    SamplerConfig c;
    c.init = ParamVector::Constant(1, 0.7);
    auto oracle = SampleSource::from_oracle(quadratic_oracle(1.0, 0.0));
    Trajectory t0 = run_sampler(Variant::classical_langevin, oracle, c, 0, RngStream(1));
    REQUIRE(t0.size() == 1);
    CHECK(t0.at(0, 0) == 0.7);

    std::ostringstream a, b;
    run_sampler(Variant::classical_langevin, oracle, c, 1000, RngStream(2)).write_csv(a);
    run_sampler(Variant::classical_langevin, oracle, c, 1000, RngStream(2)).write_csv(b);
    CHECK(a.str() == b.str());
    CHECK(a.str().rfind("step,theta_1\n0,", 0) == 0);

    c.thin = 10;
    Trajectory thinned = run_sampler(Variant::classical_langevin, oracle, c, 1000, RngStream(2));
    CHECK(thinned.size() == 101);
}

TEST_CASE("run_sampler rejects mismatched sources and reports exhaustion") {
    GradientStream s(1);
    for (int i = 0; i < 10; ++i) s.push_back(ParamVector::Zero(1), ParamVector::Zero(1));
    SamplerConfig c = passive_config(1, 1e-3, 0.3);
    CHECK_THROWS_AS(run_sampler(Variant::passive_classical, SampleSource::from_oracle(quadratic_oracle(1, 0)), c, 5,
                                RngStream(1)),
                    ConfigError);
    try {
        run_sampler(Variant::passive_classical, SampleSource::from_stream(s), c, 25, RngStream(1));
        FAIL("expected SourceExhausted");
    } catch (const SourceExhausted& e) {
        CHECK(e.consumed == 10);
    }
    CHECK_NOTHROW(run_sampler(Variant::passive_classical, SampleSource::from_stream(s, 3), c, 25, RngStream(1)));
}

TEST_CASE("classical Langevin samples the Gibbs measure") {
    SamplerConfig c;
    c.step = 1e-3;
    c.beta = 2.0;
    c.init = ParamVector::Zero(1);
    Trajectory t = run_sampler(Variant::classical_langevin, SampleSource::from_oracle(quadratic_oracle(1, 0)), c,
                               1000000, RngStream(21));
    double v = post_variance(t);
    CHECK(std::abs(v - 0.5) <= 0.025);

    auto x = t.coordinate(0);
    auto stride = static_cast<std::size_t>(std::ceil(2 * autocorr_time(x)));
    std::vector<double> ref;
    RngStream r(22);
    for (int i = 0; i < 100000; ++i) ref.push_back(std::sqrt(0.5) * r.normal());
    CHECK(ks_two_sample(thin(x, stride), ref).p_value > 1e-3);
}

TEST_CASE("doubling the inverse temperature halves the variance") {
    SamplerConfig c;
    c.step = 1e-3;
    c.init = ParamVector::Zero(1);
    auto src = SampleSource::from_oracle(quadratic_oracle(2.0, 0.0));
    c.beta = 1.0;
    double v1 = post_variance(run_sampler(Variant::classical_langevin, src, c, 1000000, RngStream(31)));
    c.beta = 2.0;
    double v2 = post_variance(run_sampler(Variant::classical_langevin, src, c, 1000000, RngStream(32)));
    CHECK(std::abs(v1 - gibbs_variance(2.0, 1.0)) <= 0.05 * gibbs_variance(2.0, 1.0));
    CHECK(std::abs(v2 - gibbs_variance(2.0, 2.0)) <= 0.05 * gibbs_variance(2.0, 2.0));
    CHECK(v2 / v1 == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("zero gradient gives Brownian increments") {
    SamplerConfig c;
    c.step = 1e-3;
    c.init = ParamVector::Zero(1);
    GradientOracle zero = [](const ParamVector& x, RngStream&) { return ParamVector(ParamVector::Zero(x.size())); };
    std::vector<double> ends;
    RngStream root(41);
    for (int i = 0; i < 2000; ++i) {
        RngStream r = root.child(i);
        ParamVector x = c.init;
        for (int k = 0; k < 1000; ++k) x = step_classical_langevin(x, zero, c, r);
        ends.push_back(x[0]);
    }
    CHECK(variance(ends) == doctest::Approx(c.step * 1000).epsilon(0.1));
}

TEST_CASE("active sampler reaches the Gibbs variance") {
    SamplerConfig c;
    c.step = 1e-2;
    c.beta = 2.0;
    c.kernel = Kernel(KernelFamily::gaussian, 0.1, 1);
    c.cond_std = 0.15;
    c.init = ParamVector::Zero(1);
    Trajectory t = run_sampler(Variant::active, SampleSource::from_oracle(quadratic_oracle(1, 0)), c, 1000000,
                               RngStream(51));
    CHECK(std::abs(post_variance(t) - 0.5) <= 0.05);
}

TEST_CASE("multikernel samples the Gibbs measure from agent pools") {
    AgentPoolConfig ac;
    ac.step = 1e-3;
    ac.num_agents = 10000;
    ac.run_length = 100;
    GradientStream s = run_agent_pool(quadratic_oracle(1, 0), InitDensity::standard(1), ac, RngStream(61));
    SamplerConfig c;
    c.step = 1e-2;
    c.beta = 2.0;
    c.pool_size = 50;
    c.cond_std = 0.15;
    c.init = ParamVector::Zero(1);
    Trajectory t = run_sampler(Variant::multikernel, SampleSource::pools(s), c, 1000000, RngStream(62));
    CHECK(std::abs(post_variance(t) - 0.5) <= 0.05);
    CHECK(t.stats.underflow_resets == 0);

    auto x = t.coordinate(0);
    auto stride = static_cast<std::size_t>(std::ceil(2 * autocorr_time(x)));
    std::vector<double> ref;
    RngStream r(63);
    for (int i = 0; i < 100000; ++i) ref.push_back(std::sqrt(0.5) * r.normal());
    CHECK(ks_two_sample(thin(x, stride), ref).p_value > 1e-3);
}

TEST_CASE("pooled drift has smaller variance than a single kernel-weighted sample") {
    const double at = 0.5, sigma = 0.3;
    const int L = 50, reps = 10000;
    RngStream rng(71);
    Kernel k(KernelFamily::gaussian, sigma, 1);
    InitDensity pi = InitDensity::standard(1);
    const double p_at = pi.density(ParamVector::Constant(1, at));
    std::vector<double> pooled, single;
    GradientStream s(1);
    std::vector<std::size_t> idx(L);
    for (int i = 0; i < L; ++i) idx[i] = i;
    Eigen::VectorXd w(L);
    for (int r = 0; r < reps; ++r) {
        s = GradientStream(1);
        for (int i = 0; i < L; ++i) {
            ParamVector p = gaussian_vector(rng, 1);
            s.push_back(p, p);
        }
        conditional_weights(ParamVector::Constant(1, at), s, idx, sigma, w);
        double d = 0.0;
        for (int i = 0; i < L; ++i) d += w[i] * s.gradient(i)[0];
        pooled.push_back(d);
        ParamVector p = gaussian_vector(rng, 1);
        single.push_back(k.scaled_eval(ParamVector::Constant(1, p[0] - at)) * p[0] / p_at);
    }
    CHECK(variance(pooled) < variance(single));
}

TEST_CASE("passive drift agrees in sign with the classical drift when evaluated in place") {
    SamplerConfig c = passive_config(1, 1e-3, 0.2);
    auto oracle = quadratic_oracle(1.0, 0.0);
    for (double at = -2.0; at <= 2.0; at += 0.25) {
        ParamVector x = ParamVector::Constant(1, at);
        RngStream dummy(0);
        ParamVector g = oracle(x, dummy);
        RngStream r1(5), c1(5), r2(6), c2(6);
        double passive = step_passive_classical(x, GradientSample(x, g), c, r1)[0] - at -
                         std::sqrt(c.step) * gaussian_vector(c1, 1)[0];
        double classical = step_classical_langevin(x, oracle, c, r2)[0] - at -
                           std::sqrt(c.step) * gaussian_vector(c2, 1)[0];
        CHECK((passive > 0) == (classical > 0));
        CHECK((passive < 0) == (classical < 0));
    }
}

TEST_CASE("metadata records the step to bandwidth ratio") {
    SamplerConfig c = passive_config(1, 1e-4, 0.1);
    Trajectory t(1);
    t.push_back(c.init);
    auto j = trajectory_metadata(Variant::passive_generalized_b, c, t, 3, 0);
    CHECK(j["step_over_bandwidth_pow_dim"].get<double>() == doctest::Approx(1e-3).epsilon(1e-12));
    CHECK(j["variant"] == "passive_generalized_b");
    CHECK(j["rng_algorithm"] == RngStream::algorithm);
}

TEST_CASE("reflection folds into the box") {
    ParamVector lo = ParamVector::Zero(2), hi = ParamVector::Ones(2);
    ParamVector x(2);
    x << 1.25, -0.25;
    reflect_into(x, lo, hi);
    CHECK(x[0] == doctest::Approx(0.75));
    CHECK(x[1] == doctest::Approx(0.25));
    x << 3.5, -2.25;
    reflect_into(x, lo, hi);
    CHECK(x[0] == doctest::Approx(0.5));
    CHECK(x[1] == doctest::Approx(0.25));
}

TEST_CASE("variant names round trip") {
    for (auto v : {Variant::passive_generalized, Variant::passive_generalized_b, Variant::passive_classical,
                   Variant::multikernel, Variant::active, Variant::nonreversible, Variant::classical_langevin,
                   Variant::naive})
        CHECK(variant_from_string(to_string(v)) == v);
    CHECK_THROWS_AS(variant_from_string("metropolis"), ConfigError);
}
