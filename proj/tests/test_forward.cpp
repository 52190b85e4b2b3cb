#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "plirl/analysis.hpp"
#include "plirl/forward.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

using namespace plirl;

namespace {

GradientOracle zero_oracle(int dim) {
    return [dim](const ParamVector&, RngStream&) { return ParamVector(ParamVector::Zero(dim)); };
}

GradientOracle contracting_oracle() {
    return [](const ParamVector& x, RngStream&) { return ParamVector(-x); };
}

}  // namespace

TEST_CASE("standard density and gradient at known points") {
    auto [d2, g2] = InitDensity::standard(2).density_and_grad(ParamVector::Zero(2));
    CHECK(d2 == doctest::Approx(1.0 / (2 * std::numbers::pi)).epsilon(1e-14));
    CHECK(g2.norm() == 0.0);

    ParamVector one = ParamVector::Ones(1);
    auto [d1, g1] = InitDensity::standard(1).density_and_grad(one);
    CHECK(d1 == doctest::Approx(0.24197).epsilon(1e-5));
    CHECK(g1[0] == doctest::Approx(-0.24197).epsilon(1e-5));
    CHECK(g1[0] == doctest::Approx(-d1).epsilon(1e-15));
}

TEST_CASE("density gradient matches central differences") {
    ParamVector mean(3), var(3);
    mean << 0.5, -1.0, 2.0;
    var << 0.7, 2.0, 1.5;
    InitDensity pi(mean, var);
    RngStream rng(11);
    const double h = 1e-6;
    for (int t = 0; t < 100; ++t) {
        ParamVector x = mean + gaussian_vector(rng, 3);
        ParamVector g = pi.density_and_grad(x).second;
        for (int d = 0; d < 3; ++d) {
            ParamVector xp = x, xm = x;
            xp[d] += h;
            xm[d] -= h;
            double fd = (pi.density(xp) - pi.density(xm)) / (2 * h);
            CHECK(std::abs(fd - g[d]) <= 1e-5 * std::max(std::abs(g[d]), 1e-3 * pi.density(x)));
        }
        CHECK(std::log(pi.density(x)) == doctest::Approx(pi.log_density(x)).epsilon(1e-12));
    }
}

TEST_CASE("init density validation") {
    CHECK_THROWS_AS(InitDensity(ParamVector::Zero(2), ParamVector::Ones(3)), ConfigError);
    CHECK_THROWS_AS(InitDensity(ParamVector::Zero(1), ParamVector::Zero(1)), ConfigError);
}

TEST_CASE("zero gradient keeps every agent at its initialization") {
    AgentPoolConfig cfg;
    cfg.step = 0.5;
    cfg.num_agents = 20;
    cfg.run_length = 10;
    cfg.dim = 2;
    GradientStream s = run_agent_pool(zero_oracle(2), InitDensity::standard(2), cfg, RngStream(1));
    REQUIRE(s.size() == 200);
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(s.step(i) == static_cast<int>(i % 10));
        CHECK(s.agent(i) == static_cast<int>(i / 10));
        CHECK(s.point(i) == s.point(i - i % 10));
    }
}

TEST_CASE("contracting oracle gives geometric decay") {
    AgentPoolConfig cfg;
    cfg.step = 0.1;
    cfg.num_agents = 1;
    cfg.run_length = 100;
    InitDensity at_one(ParamVector::Ones(1), ParamVector::Constant(1, 1e-30));
    GradientStream s = run_agent_pool(contracting_oracle(), at_one, cfg, RngStream(2));
    REQUIRE(s.size() == 100);
    double last = s.point(99)[0] + cfg.step * s.gradient(99)[0];
    CHECK(last == doctest::Approx(std::pow(0.9, 100)).epsilon(1e-12));
    CHECK(last == doctest::Approx(2.66e-5).epsilon(1e-2));
}

TEST_CASE("stream length is agents times run length") {
    AgentPoolConfig cfg;
    cfg.num_agents = 1000;
    cfg.run_length = 100;
    GradientStream s = run_agent_pool(contracting_oracle(), InitDensity::standard(1), cfg, RngStream(3));
    CHECK(s.size() == 100000);
}

TEST_CASE("random run lengths stay in range") {
    AgentPoolConfig cfg;
    cfg.num_agents = 200;
    cfg.random_run_length = std::make_pair(5, 9);
    GradientStream s = run_agent_pool(zero_oracle(1), InitDensity::standard(1), cfg, RngStream(4));
    int max_step = 0;
    for (std::size_t i = 0; i < s.size(); ++i) max_step = std::max(max_step, s.step(i));
    CHECK(max_step <= 8);
    CHECK(s.size() >= 200 * 5);
    CHECK(s.size() <= 200 * 9);
}

TEST_CASE("agent initializations pass a KS test against the init density") {
    ParamVector mean(2), var(2);
    mean << 1.0, -2.0;
    var << 0.5, 3.0;
    InitDensity pi(mean, var);
    AgentPoolConfig cfg;
    cfg.dim = 2;
    cfg.num_agents = 10000;
    cfg.run_length = 3;
    GradientStream s = run_agent_pool(zero_oracle(2), pi, cfg, RngStream(5));
    for (int d = 0; d < 2; ++d) {
        std::vector<double> x;
        for (std::size_t i = 0; i < s.size(); i += 3) x.push_back(s.point(i)[d]);
        double m = mean[d], sd = std::sqrt(var[d]);
        KsResult ks = ks_one_sample(x, [&](double v) { return normal_cdf(v, m, sd); });
        CHECK(ks.p_value > 0.01);
    }
}

TEST_CASE("non-finite agent iterate names agent and step") {
    AgentPoolConfig cfg;
    cfg.num_agents = 3;
    cfg.run_length = 5;
    GradientOracle bad = [](const ParamVector& x, RngStream&) {
        return ParamVector(ParamVector::Constant(x.size(), std::numeric_limits<double>::infinity()));
    };
    try {
        run_agent_pool(bad, InitDensity::standard(1), cfg, RngStream(6));
        FAIL("expected NonFiniteError");
    } catch (const NonFiniteError& e) {
        std::string msg = e.what();
        CHECK(msg.find("agent 0") != std::string::npos);
        CHECK(msg.find("step 0") != std::string::npos);
    }
}

TEST_CASE("pool output is deterministic given seed and worker count") {
    AgentPoolConfig cfg;
    cfg.num_agents = 50;
    cfg.run_length = 20;
    cfg.workers = 3;
    GradientOracle noisy = [](const ParamVector& x, RngStream& r) { return ParamVector(-x + gaussian_vector(r, 1)); };
    std::ostringstream a, b;
    run_agent_pool(noisy, InitDensity::standard(1), cfg, RngStream(7)).write_csv(a);
    run_agent_pool(noisy, InitDensity::standard(1), cfg, RngStream(7)).write_csv(b);
    CHECK(a.str() == b.str());
}

TEST_CASE("stream CSV round trip and shuffle") {
    AgentPoolConfig cfg;
    cfg.dim = 2;
    cfg.num_agents = 5;
    cfg.run_length = 4;
    GradientOracle noisy = [](const ParamVector& x, RngStream& r) { return ParamVector(-x + gaussian_vector(r, 2)); };
    GradientStream s = run_agent_pool(noisy, InitDensity::standard(2), cfg, RngStream(8));
    std::ostringstream out;
    s.write_csv(out);
    CHECK(out.str().rfind("agent,step,theta_1,theta_2,grad_1,grad_2\n", 0) == 0);
    std::istringstream in(out.str());
    GradientStream back = GradientStream::read_csv(in);
    REQUIRE(back.size() == s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(back.point(i) == s.point(i));
        CHECK(back.gradient(i) == s.gradient(i));
        CHECK(back.agent(i) == s.agent(i));
    }
    RngStream rng(9);
    GradientStream sh = s.shuffled(rng);
    REQUIRE(sh.size() == s.size());
    double sum_a = 0, sum_b = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        sum_a += s.point(i).sum();
        sum_b += sh.point(i).sum();
    }
    CHECK(sum_a == doctest::Approx(sum_b).epsilon(1e-12));
}

TEST_CASE("pool configuration validation") {
    AgentPoolConfig cfg;
    cfg.step = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.step = 1e-3;
    cfg.dim = 2;
    CHECK_THROWS_AS(run_agent_pool(zero_oracle(2), InitDensity::standard(1), cfg, RngStream(1)), ConfigError);
}
