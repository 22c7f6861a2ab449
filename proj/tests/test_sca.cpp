#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "ageshs/sca.hpp"
#include "oracle.hpp"

using namespace ageshs;

namespace {

ParametricFamily illustrative_family() {
    ParametricFamily f;
    f.dim = 1;
    f.objective_components = {0};
    f.build = [](const std::vector<double>& eta) { return illustrative_model(eta[0]); };
    return f;
}

ScaConfig base_config(std::vector<std::pair<double, double>> box, int order, double scale) {
    ScaConfig cfg;
    cfg.box = std::move(box);
    cfg.order = order;
    cfg.scale = scale;
    return cfg;
}

} // namespace

TEST_CASE("objective tracks the stationary mean age") {
    const ParametricFamily fam = illustrative_family();
    const ScaConfig cfg = base_config({{0.01, 1000.0}}, 60, 1.0);
    REQUIRE(objective(fam, {1.0}, cfg) ==
            Catch::Approx(oracle::stationary_moment(1.0, 1)).epsilon(0.01));
    REQUIRE(objective(fam, {100.0}, cfg) ==
            Catch::Approx(oracle::stationary_moment(100.0, 1)).epsilon(0.01));
}

TEST_CASE("objective is symmetric under link relabeling") {
    // symmetry is exact for the constant-rate family, whose moment system is
    // closed with no boundary fold (the fold's tie-break is not symmetric)
    ParametricFamily fam;
    fam.dim = 2;
    fam.objective_components = {0, 1};
    fam.build = [](const std::vector<double>& eta) {
        return age_blind_model(2, eta, {1.0, 1.0});
    };
    const ScaConfig cfg = base_config({{0.1, 10.0}, {0.1, 10.0}}, 3, 1.0);
    REQUIRE(objective(fam, {0.7, 1.9}, cfg) ==
            Catch::Approx(objective(fam, {1.9, 0.7}, cfg)).epsilon(1e-9));
}

TEST_CASE("analytic gradient matches the differentiated oracle") {
    const ParametricFamily fam = illustrative_family();
    const ScaConfig cfg = base_config({{0.01, 1000.0}}, 100, 1.0);
    const double g = gradient(fam, {1.0}, cfg)[0];
    const double truth = oracle::central_diff(
        [](double a) { return oracle::stationary_moment(a, 1); }, 1.0, 1e-4);
    REQUIRE(g == Catch::Approx(truth).epsilon(0.01));
}

TEST_CASE("analytic and finite-difference gradients coincide") {
    const ParametricFamily fam = csma_backoff_family(2, {1.0, 2.0});
    Rng rng(5);
    int checked = 0;
    for (int trial = 0; trial < 20 && checked < 4; ++trial) {
        const std::vector<double> eta = {0.5 + 3.0 * rng.uniform(), 0.5 + 3.0 * rng.uniform()};
        try {
            ScaConfig cfg = base_config({{0.1, 10.0}, {0.1, 10.0}}, 3, 6.0);
            const auto ga = gradient(fam, eta, cfg);
            cfg.gradient = ScaConfig::Gradient::FiniteDifference;
            const auto gf = gradient(fam, eta, cfg);
            for (int i = 0; i < 2; ++i)
                REQUIRE(ga[i] == Catch::Approx(gf[i]).margin(1e-6 * std::abs(gf[i]) + 1e-12));
            ++checked;
        } catch (const SolverError&) {
        }
    }
    REQUIRE(checked == 4);
}

TEST_CASE("gradient is symmetric at symmetric points") {
    ParametricFamily fam;
    fam.dim = 2;
    fam.objective_components = {0, 1};
    fam.build = [](const std::vector<double>& eta) {
        return age_blind_model(2, eta, {1.0, 1.0});
    };
    const ScaConfig cfg = base_config({{0.1, 10.0}, {0.1, 10.0}}, 3, 1.0);
    const auto g = gradient(fam, {1.2, 1.2}, cfg);
    REQUIRE(g[0] == Catch::Approx(g[1]).margin(1e-9 * std::abs(g[0])));
}

TEST_CASE("monotone objective drives the iterate to the box boundary") {
    const ParametricFamily fam = illustrative_family();
    ScaConfig cfg = base_config({{0.01, 1000.0}}, 8, 1.0);
    cfg.alpha0 = 1e9;
    cfg.epsilon = 1e-10;
    const ScaResult res = sca_minimize(fam, {500.0}, cfg);
    REQUIRE(res.eta[0] == Catch::Approx(1000.0));
    REQUIRE(res.converged);
}

TEST_CASE("zero gradient is a fixed point") {
    ParametricFamily fam;
    fam.dim = 1;
    fam.objective_components = {0};
    fam.build = [](const std::vector<double>&) { return illustrative_model(1.0); };
    ScaConfig cfg = base_config({{0.1, 10.0}}, 6, 1.0);
    const ScaResult res = sca_minimize(fam, {2.0}, cfg);
    REQUIRE(res.eta[0] == Catch::Approx(2.0));
    REQUIRE(res.converged);
}

TEST_CASE("objective trace is nonincreasing and epsilon-terminated") {
    ScaConfig cfg = base_config({{0.1, 10.0}, {0.1, 10.0}}, 3, 1.0);
    cfg.epsilon = 1e-8;
    cfg.max_iterations = 2000;
    // constant-rate family: the objective is exact at any order
    ParametricFamily blind;
    blind.dim = 2;
    blind.objective_components = {0, 1};
    blind.build = [](const std::vector<double>& eta) {
        return age_blind_model(2, eta, {1.0, 1.0});
    };
    const ScaResult res = sca_minimize(blind, {1.0, 1.0}, cfg);
    REQUIRE(res.converged);
    for (std::size_t i = 1; i < res.trace.size(); ++i)
        REQUIRE(res.trace[i].objective <= res.trace[i - 1].objective + 1e-10);
    REQUIRE(std::abs(res.eta[0] - res.eta[1]) < 1e-3);
    for (const auto& it : res.trace)
        for (int i = 0; i < 2; ++i) {
            REQUIRE(it.eta[i] >= 0.1);
            REQUIRE(it.eta[i] <= 10.0);
        }
}

TEST_CASE("surrogate equals the objective at the expansion point") {
    // first accepted surrogate value f + g d + d^2/(2 alpha) reduces to f
    // when the step is zero; verified through the fixed-point run above, and
    // directly: a zero-gradient family reports surrogate == objective
    ParametricFamily fam;
    fam.dim = 1;
    fam.objective_components = {0};
    fam.build = [](const std::vector<double>&) { return illustrative_model(2.0); };
    const ScaConfig cfg = base_config({{0.1, 10.0}}, 6, 1.0);
    const ScaResult res = sca_minimize(fam, {1.0}, cfg);
    REQUIRE_FALSE(res.trace.empty());
    REQUIRE(res.trace.front().surrogate ==
            Catch::Approx(res.trace.front().objective).epsilon(1e-12));
}

TEST_CASE("configuration validation") {
    const ParametricFamily fam = illustrative_family();
    ScaConfig cfg = base_config({{1.0, 0.5}}, 6, 1.0);
    REQUIRE_THROWS_AS(sca_minimize(fam, {0.7}, cfg), std::invalid_argument);
    cfg = base_config({{0.1, 10.0}}, 6, 1.0);
    cfg.epsilon = 0.0;
    REQUIRE_THROWS_AS(sca_minimize(fam, {1.0}, cfg), std::invalid_argument);
    cfg = base_config({{0.1, 10.0}}, 2, 1.0);
    REQUIRE_THROWS_AS(objective(fam, {1.0}, cfg), std::invalid_argument);
    REQUIRE_THROWS_AS(sca_minimize(fam, {1.0, 2.0}, base_config({{0.1, 1.0}}, 6, 1.0)),
                      std::invalid_argument);
}

TEST_CASE("trace CSV schema") {
    ParametricFamily blind;
    blind.dim = 2;
    blind.objective_components = {0, 1};
    blind.build = [](const std::vector<double>& eta) {
        return age_blind_model(2, eta, {1.0, 1.0});
    };
    const ScaResult res = sca_minimize(blind, {1.0, 1.0}, base_config({{0.1, 10.0}, {0.1, 10.0}}, 3, 1.0));
    std::ostringstream os;
    write_trace_csv(os, res);
    REQUIRE(os.str().rfind("iteration,eta0,eta1,objective,surrogate,grad_norm,alpha\n", 0) == 0);
}
