#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ageshs/csma.hpp"
#include "ageshs/simulator.hpp"
#include "oracle.hpp"

using namespace ageshs;

TEST_CASE("linear-hazard dwell inversion is exact") {
    // rate a x from x0 = 0: Lambda(tau) = a tau^2 / 2; u = e^-1 -> target 1
    const ShsModel m = illustrative_model(2.0);
    const NextEvent ev = next_event(m, 0, {0.0}, {std::exp(-1.0)});
    REQUIRE(ev.transition == 0);
    REQUIRE(ev.dwell == Catch::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("constant-rate dwell is the exponential quantile") {
    const ShsModel m = age_blind_model(1, {3.0}, {1.0});
    for (double u : {0.9, 0.5, 0.137}) {
        const NextEvent ev = next_event(m, 0, {1.0, 0.0}, {u, 0.5});
        REQUIRE(ev.transition == 0);
        REQUIRE(ev.dwell == Catch::Approx(-std::log(u) / 3.0).epsilon(1e-10));
    }
}

TEST_CASE("competing linear hazards match the quadrature win probability") {
    CsmaParams p;
    p.n = 2;
    p.a = {1.0, 1.0};
    p.h = {1.0, 1.0};
    const ShsModel m = csma_model(p);
    const std::vector<double> x = {3.0, 1.0, 0.0, 0.0};
    Rng rng(99);
    const int draws = 100000;
    int wins = 0;
    for (int i = 0; i < draws; ++i) {
        std::vector<double> u(m.transitions.size(), 0.5);
        u[0] = rng.uniform_pos();
        u[2] = rng.uniform_pos(); // transitions: 0: capture 1, 2: capture 2
        const NextEvent ev = next_event(m, 0, x, u);
        if (ev.transition == 0) ++wins;
    }
    const double p1 = oracle::linear_hazard_win_prob(1.0, 3.0, 1.0, 1.0);
    const double sigma = std::sqrt(p1 * (1 - p1) / draws);
    REQUIRE(std::abs(double(wins) / draws - p1) < 3 * sigma + 1e-9);
}

TEST_CASE("zero effective hazard coasts to the horizon: T/2 ramp") {
    // reset to zero at a rate that never fires within the horizon is not
    // expressible; instead use a rate so tiny nothing fires and check the
    // deterministic ramp average
    ShsModel m = illustrative_model(1e-300);
    SimConfig cfg;
    cfg.time_horizon = 10.0;
    cfg.warmup_fraction = 0.0;
    const SimStats st = run(m, cfg);
    REQUIRE(st.total_events == 0);
    REQUIRE(st.total_moment({1}) == Catch::Approx(5.0).epsilon(1e-9));
    REQUIRE(st.total_moment({2}) == Catch::Approx(100.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("moment estimates match the stationary density") {
    SimConfig cfg;
    cfg.max_events = 300000;
    cfg.seed = 2;
    const SimStats st = run(illustrative_model(100.0), cfg);
    for (int mth = 1; mth <= 3; ++mth)
        REQUIRE(st.total_moment({mth}) ==
                Catch::Approx(oracle::stationary_moment(100.0, mth)).epsilon(0.05));
    double occ = 0.0;
    for (const auto& [q, v] : st.state_occupancy) occ += v;
    REQUIRE(occ == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("runs are bit-identical for equal configs and diverge across streams") {
    SimConfig cfg;
    cfg.max_events = 50000;
    cfg.seed = 17;
    const ShsModel m = illustrative_model(1.0);
    const SimStats a = run(m, cfg);
    const SimStats b = run(m, cfg);
    REQUIRE(a.time_avg_moments == b.time_avg_moments);
    REQUIRE(a.state_occupancy == b.state_occupancy);
    REQUIRE(a.event_counts == b.event_counts);
    cfg.stream = 1;
    const SimStats c = run(m, cfg);
    REQUIRE(a.time_avg_moments != c.time_avg_moments);
}

TEST_CASE("replica merge is time-weighted and associative") {
    const ShsModel m = illustrative_model(1.0);
    SimConfig cfg;
    cfg.max_events = 40000;
    cfg.seed = 21;
    std::vector<SimStats> reps;
    for (int s = 0; s < 3; ++s) {
        cfg.stream = s;
        reps.push_back(run(m, cfg));
    }
    SimStats left = reps[0];
    left.merge(reps[1]);
    left.merge(reps[2]);
    SimStats right = reps[1];
    right.merge(reps[2]);
    SimStats first = reps[0];
    first.merge(right);
    REQUIRE(left.measured_time == Catch::Approx(first.measured_time).epsilon(1e-12));
    for (const auto& [idx, v] : left.time_avg_moments)
        REQUIRE(first.time_avg_moments.at(idx) == Catch::Approx(v).epsilon(1e-9));
    REQUIRE(left.total_events == first.total_events);
}

TEST_CASE("support hints hold at every CSMA event") {
    CsmaParams p;
    p.n = 2;
    p.a = {2.0, 1.0};
    p.h = {1.0, 2.0};
    SimConfig cfg;
    cfg.max_events = 100000;
    cfg.seed = 8;
    const SimStats st = run(csma_model(p), cfg);
    REQUIRE(st.support_violations == 0);
}

TEST_CASE("return times to the core interval stabilize") {
    SimConfig cfg;
    cfg.time_horizon = 4000.0;
    cfg.warmup_fraction = 0.0;
    cfg.seed = 31;
    cfg.record_event_log = true;
    const SimStats st = run(illustrative_model(1.0), cfg);
    const double bound = 2.0 * st.total_moment({1});
    // the age leaves [0, bound] when an inter-reset gap exceeds it and
    // returns at the next reset
    std::vector<double> returns;
    for (std::size_t i = 1; i < st.event_log.size(); ++i) {
        const double gap = st.event_log[i].time - st.event_log[i - 1].time;
        if (gap > bound) returns.push_back(gap - bound);
    }
    REQUIRE(returns.size() > 50);
    const std::size_t half = returns.size() / 2;
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < half; ++i) m1 += returns[i];
    for (std::size_t i = half; i < returns.size(); ++i) m2 += returns[i];
    m1 /= half;
    m2 /= static_cast<double>(returns.size() - half);
    REQUIRE(m1 / m2 > 0.5);
    REQUIRE(m1 / m2 < 2.0);
}

TEST_CASE("empirical moments respect the Jensen ordering") {
    SimConfig cfg;
    cfg.max_events = 300000;
    cfg.seed = 13;
    cfg.tracked_moment_orders = 4;
    const SimStats st = run(illustrative_model(1.0), cfg);
    for (int r = 1; r <= 4; ++r)
        for (int p = r; p <= 4; ++p)
            REQUIRE(std::pow(st.total_moment({r}), double(p) / r) <=
                    st.total_moment({p}) * 1.02);
}

TEST_CASE("slotted single link approaches the continuous limit") {
    SimConfig cfg;
    cfg.time_horizon = 3000.0;
    cfg.seed = 12;
    const SimStats st = run_slotted_csma(1, {100.0}, {1e5}, 1e-3, cfg);
    const double truth = oracle::stationary_moment(100.0, 1);
    REQUIRE(st.mean_age(0, 2) == Catch::Approx(truth).epsilon(0.05));
}

TEST_CASE("slotted symmetric links are statistically exchangeable") {
    SimConfig cfg;
    cfg.time_horizon = 5000.0;
    cfg.seed = 14;
    const SimStats st = run_slotted_csma(2, {2.0, 2.0}, {1.0, 1.0}, 1e-3, cfg);
    REQUIRE(st.mean_age(0, 4) == Catch::Approx(st.mean_age(1, 4)).epsilon(0.05));
    const SimStats st2 = run_slotted_csma(2, {2.0, 2.0}, {1.0, 1.0}, 1e-3, cfg);
    REQUIRE(st.time_avg_moments == st2.time_avg_moments); // determinism
}

TEST_CASE("config validation") {
    SimConfig cfg;
    REQUIRE_THROWS_AS(cfg.check(), std::invalid_argument); // no horizon
    cfg.max_events = 10;
    cfg.time_horizon = 1.0;
    REQUIRE_THROWS_AS(cfg.check(), std::invalid_argument); // both horizons
    cfg.time_horizon = 0.0;
    cfg.warmup_fraction = 1.0;
    REQUIRE_THROWS_AS(cfg.check(), std::invalid_argument);
}
