#ifndef AGESHS_SIMULATOR_HPP
#define AGESHS_SIMULATOR_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

#include "model.hpp"
#include "moment_system.hpp"
#include "polynomial.hpp"
#include "rng.hpp"

namespace ageshs {

struct AbsorbingStateError : std::runtime_error {
    AbsorbingStateError() : std::runtime_error("absorbing state: no transition can ever fire") {}
};

struct SimConfig {
    double time_horizon = 0.0;     // > 0 selects a time-based horizon
    std::uint64_t max_events = 0;  // > 0 selects an event-count horizon
    std::uint64_t seed = 1;
    std::uint64_t stream = 0;      // replica id; independent stream per (seed, stream)
    double warmup_fraction = 0.2;
    int tracked_moment_orders = 3;
    bool record_event_log = false;

    void check() const {
        if ((time_horizon > 0.0) == (max_events > 0))
            throw std::invalid_argument("SimConfig: set exactly one of time_horizon, max_events");
        if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0))
            throw std::invalid_argument("SimConfig: warmup_fraction must be in [0,1)");
        if (tracked_moment_orders < 0)
            throw std::invalid_argument("SimConfig: tracked_moment_orders < 0");
    }
};

struct EventLogEntry {
    double time;
    int state;
    std::vector<double> x;
};

struct SimStats {
    std::map<MomentIndex, double> time_avg_moments;
    std::map<int, double> state_occupancy;
    std::map<int, std::uint64_t> event_counts; // keyed by transition index
    std::uint64_t support_violations = 0;
    std::uint64_t total_events = 0;
    double measured_time = 0.0; // post-warmup span the averages cover
    std::uint64_t collision_slots = 0; // slotted runs only
    std::vector<EventLogEntry> event_log;

    double moment(const MomentIndex& idx) const {
        auto it = time_avg_moments.find(idx);
        return it == time_avg_moments.end() ? 0.0 : it->second;
    }

    /// E[x^m] summed over discrete states.
    double total_moment(const Exponents& m) const {
        double v = 0.0;
        for (const auto& [idx, val] : time_avg_moments)
            if (idx.exps == m) v += val;
        return v;
    }

    double mean_age(int comp, int n) const {
        Exponents m(n, 0);
        m[comp] = 1;
        return total_moment(m);
    }

    /// Associative merge of independent replicas (time-weighted).
    void merge(const SimStats& o) {
        const double wt = measured_time + o.measured_time;
        if (wt <= 0.0) return;
        const double wa = measured_time / wt, wb = o.measured_time / wt;
        std::map<MomentIndex, double> merged;
        for (const auto& [idx, v] : time_avg_moments) merged[idx] += wa * v;
        for (const auto& [idx, v] : o.time_avg_moments) merged[idx] += wb * v;
        time_avg_moments = std::move(merged);
        std::map<int, double> occ;
        for (const auto& [q, v] : state_occupancy) occ[q] += wa * v;
        for (const auto& [q, v] : o.state_occupancy) occ[q] += wb * v;
        state_occupancy = std::move(occ);
        for (const auto& [l, c] : o.event_counts) event_counts[l] += c;
        support_violations += o.support_violations;
        total_events += o.total_events;
        collision_slots += o.collision_slots;
        measured_time = wt;
    }
};

namespace detail {

/// Integrated hazard of transition `l` along the drift line from (q, x):
/// Lambda(tau) = int_0^tau lambda_l(x + b_q s) ds, as a polynomial in tau.
inline Poly1 hazard_along_drift(const ShsModel& model, int q, const std::vector<double>& x,
                                const Transition& t) {
    Poly1 lambda;
    lambda.c = {0.0};
    for (const auto& [m, a] : t.rate.terms) {
        Poly1 term = monomial_along_drift(m, x, model.drift[q]);
        term.scale(a);
        lambda += term;
    }
    return lambda;
}

/// Solves Lambda(tau) = target for the nondecreasing polynomial Lambda with
/// Lambda(0) = 0. Safeguarded Newton inside a doubling bracket. Returns
/// +inf when Lambda never reaches the target (identically zero hazard).
inline double invert_integrated_hazard(const Poly1& integrated, const Poly1& hazard,
                                       double target) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (hazard.is_zero()) return inf;
    double lo = 0.0, hi = 1.0;
    while (integrated.eval(hi) < target) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e30) return inf;
    }
    double t = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        const double f = integrated.eval(t) - target;
        if (f > 0.0)
            hi = t;
        else
            lo = t;
        const double d = hazard.eval(t);
        double tn = (d > 0.0) ? t - f / d : 0.5 * (lo + hi);
        if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
        if (std::abs(tn - t) <= 1e-12 * std::max(1.0, std::abs(tn))) return tn;
        t = tn;
    }
    return t;
}

} // namespace detail

struct NextEvent {
    int transition = -1; // -1: nothing can ever fire from here
    double dwell = std::numeric_limits<double>::infinity();
};

/// Competing-risks step: each candidate transition out of q gets its own
/// uniform draw u_l (indexed by transition position in the model); the firing
/// time solves Lambda_l(tau) = -ln u_l and the minimum wins.
inline NextEvent next_event_or_none(const ShsModel& model, int q, const std::vector<double>& x,
                                    const std::vector<double>& u) {
    NextEvent best;
    for (std::size_t l = 0; l < model.transitions.size(); ++l) {
        const auto& t = model.transitions[l];
        if (t.source != q) continue;
        const Poly1 hazard = detail::hazard_along_drift(model, q, x, t);
        const double tau =
            detail::invert_integrated_hazard(hazard.integral(), hazard, -std::log(u.at(l)));
        if (tau < best.dwell) {
            best.dwell = tau;
            best.transition = static_cast<int>(l);
        }
    }
    return best;
}

inline NextEvent next_event(const ShsModel& model, int q, const std::vector<double>& x,
                            const std::vector<double>& u) {
    NextEvent e = next_event_or_none(model, q, x, u);
    if (e.transition < 0) throw AbsorbingStateError{};
    return e;
}

namespace detail {

struct TrackedMonomials {
    // per state: the tracked exponent vectors and their target indices
    std::vector<std::vector<Exponents>> by_state;

    TrackedMonomials(const ShsModel& model, int max_order) : by_state(model.num_states) {
        for (const auto& idx : enumerate_indices(model, max_order))
            by_state[idx.state].push_back(idx.exps);
    }
};

inline std::uint64_t count_support_violations(const ShsModel& model, int q,
                                              const std::vector<double>& x) {
    if (model.support_hints.empty()) return 0;
    std::uint64_t v = 0;
    const auto& h = model.support_hints[q];
    for (int c : h.zero_components)
        if (std::abs(x[c]) > 1e-9) ++v;
    for (auto [a, b] : h.strict_less)
        if (!(x[a] < x[b] + 1e-12)) ++v;
    return v;
}

} // namespace detail

/// Exact event-driven simulation. Monomial time-averages are accumulated by
/// closed-form polynomial integration between events, so the only error in
/// the reported moments is statistical.
inline SimStats run(const ShsModel& model, const SimConfig& cfg) {
    cfg.check();
    {
        auto diags = validate_model(model);
        if (has_errors(diags))
            throw std::invalid_argument("run: model fails validation: " + diags.front().invariant);
    }
    const bool time_mode = cfg.time_horizon > 0.0;
    const double t_end = time_mode ? cfg.time_horizon : std::numeric_limits<double>::infinity();
    const double warmup_time = time_mode ? cfg.time_horizon * cfg.warmup_fraction : 0.0;
    const std::uint64_t warmup_events =
        time_mode ? 0 : static_cast<std::uint64_t>(static_cast<double>(cfg.max_events) * cfg.warmup_fraction);

    Rng rng(cfg.seed, cfg.stream);
    detail::TrackedMonomials tracked(model, cfg.tracked_moment_orders);

    SimStats stats;
    std::vector<double> x(model.n, 0.0);
    int q = 0;
    double t = 0.0;
    std::vector<double> u(model.transitions.size(), 0.5);

    // integral of every tracked monomial for the current state over
    // [t + s1, t + s2] along the drift
    auto accumulate = [&](double s1, double s2) {
        if (s2 <= s1) return;
        for (const auto& m : tracked.by_state[q]) {
            const Poly1 anti = monomial_along_drift(m, x, model.drift[q]).integral();
            stats.time_avg_moments[{q, m}] += anti.eval(s2) - anti.eval(s1);
        }
        stats.state_occupancy[q] += s2 - s1;
        stats.measured_time += s2 - s1;
    };

    while (true) {
        for (std::size_t l = 0; l < model.transitions.size(); ++l)
            if (model.transitions[l].source == q) u[l] = rng.uniform_pos();
        NextEvent ev = next_event_or_none(model, q, x, u);

        if (ev.transition < 0) {
            if (!time_mode) throw AbsorbingStateError{};
            // coast to the horizon; nothing will ever fire again
            accumulate(std::max(0.0, warmup_time - t), t_end - t);
            break;
        }

        double dwell = ev.dwell;
        bool fires = true;
        if (time_mode && t + dwell >= t_end) {
            dwell = t_end - t;
            fires = false;
        }

        const bool measuring = time_mode ? true : stats.total_events >= warmup_events;
        if (time_mode)
            accumulate(std::max(0.0, warmup_time - t), dwell);
        else if (measuring)
            accumulate(0.0, dwell);

        for (int i = 0; i < model.n; ++i) x[i] += model.drift[q][i] * dwell;
        t += dwell;
        if (!fires) break;

        const auto& tr = model.transitions[ev.transition];
        x = tr.reset.apply(x);
        q = tr.target;
        ++stats.total_events;
        if (measuring || time_mode) stats.event_counts[ev.transition] += 1;
        stats.support_violations += detail::count_support_violations(model, q, x);
        if (cfg.record_event_log) stats.event_log.push_back({t, q, x});

        if (!time_mode && stats.total_events >= cfg.max_events) break;
    }

    if (stats.measured_time > 0.0) {
        for (auto& [idx, v] : stats.time_avg_moments) v /= stats.measured_time;
        for (auto& [s, v] : stats.state_occupancy) v /= stats.measured_time;
    } else {
        throw std::invalid_argument("run: horizon does not extend past warmup");
    }
    return stats;
}

/// Slotted age-aware CSMA per the practical protocol: in each idle slot every
/// link attempts with p_i = 1 - exp(-a_i x_i T_slot); simultaneous attempts
/// are resolved by a uniform random winner (counted in collision_slots);
/// the captured channel is held for an exponential service time rounded up
/// to whole slots; delivery moves the packet age to the monitor.
inline SimStats run_slotted_csma(int n, const std::vector<double>& a,
                                 const std::vector<double>& h, double t_slot,
                                 const SimConfig& cfg) {
    if (n <= 0 || t_slot <= 0.0)
        throw std::invalid_argument("run_slotted_csma: need n > 0 and t_slot > 0");
    for (double v : a)
        if (!(v > 0.0)) throw std::invalid_argument("run_slotted_csma: a must be positive");
    for (double v : h)
        if (!(v > 0.0)) throw std::invalid_argument("run_slotted_csma: H must be positive");
    if (static_cast<int>(a.size()) != n || static_cast<int>(h.size()) != n)
        throw std::invalid_argument("run_slotted_csma: parameter length mismatch");
    if (cfg.time_horizon <= 0.0)
        throw std::invalid_argument("run_slotted_csma: needs a time horizon");

    Rng rng(cfg.seed, cfg.stream);
    SimStats stats;
    std::vector<double> x(2 * n, 0.0);
    int q = 0;                       // 0 idle, k busy on link k
    std::uint64_t service_left = 0;  // remaining busy slots
    const std::uint64_t total_slots = static_cast<std::uint64_t>(cfg.time_horizon / t_slot);
    const std::uint64_t warmup_slots =
        static_cast<std::uint64_t>(static_cast<double>(total_slots) * cfg.warmup_fraction);
    std::vector<int> attempters;

    for (std::uint64_t slot = 0; slot < total_slots; ++slot) {
        const bool measuring = slot >= warmup_slots;
        if (measuring) {
            // ages grow linearly within the slot: exact trapezoid
            for (int i = 0; i < 2 * n; ++i) {
                const bool grows = i < n || (q != 0 && i == n + q - 1);
                Exponents m(2 * n, 0);
                m[i] = 1;
                stats.time_avg_moments[{q, m}] +=
                    grows ? (x[i] + 0.5 * t_slot) * t_slot : x[i] * t_slot;
            }
            stats.state_occupancy[q] += t_slot;
            stats.measured_time += t_slot;
        }

        // drift over the slot
        for (int i = 0; i < n; ++i) x[i] += t_slot;
        if (q != 0) x[n + q - 1] += t_slot;

        if (q == 0) {
            attempters.clear();
            for (int i = 0; i < n; ++i) {
                const double p = 1.0 - std::exp(-a[i] * x[i] * t_slot);
                if (rng.uniform() < p) attempters.push_back(i);
            }
            if (!attempters.empty()) {
                if (attempters.size() > 1) ++stats.collision_slots;
                const int k = attempters[rng.below(attempters.size())];
                q = k + 1;
                x[n + k] = 0.0; // packet generated upon channel capture
                service_left = static_cast<std::uint64_t>(
                    std::max(1.0, std::ceil(rng.exponential(h[k]) / t_slot)));
                stats.event_counts[k] += 1; // captures keyed 0..n-1
            }
        } else if (--service_left == 0) {
            const int k = q - 1;
            x[k] = x[n + k];
            x[n + k] = 0.0;
            q = 0;
            stats.event_counts[n + k] += 1; // deliveries keyed n..2n-1
            ++stats.total_events;
        }
    }

    if (stats.measured_time <= 0.0)
        throw std::invalid_argument("run_slotted_csma: horizon does not extend past warmup");
    for (auto& [idx, v] : stats.time_avg_moments) v /= stats.measured_time;
    for (auto& [s, v] : stats.state_occupancy) v /= stats.measured_time;
    return stats;
}

} // namespace ageshs

#endif
