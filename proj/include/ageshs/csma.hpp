#ifndef AGESHS_CSMA_HPP
#define AGESHS_CSMA_HPP

#include <stdexcept>
#include <vector>

#include "closure.hpp"
#include "model.hpp"
#include "simulator.hpp"

namespace ageshs {

/// n-link age-aware CSMA: back-off rate of link k is a_k * (monitor age of
/// link k); service of link k is exponential with rate H_k.
struct CsmaParams {
    int n = 0;
    std::vector<double> a;
    std::vector<double> h;
    std::vector<std::pair<double, double>> bounds; // optimizer box per a_k

    void check() const {
        if (n <= 0) throw std::invalid_argument("CsmaParams: n must be positive");
        if (static_cast<int>(a.size()) != n || static_cast<int>(h.size()) != n)
            throw std::invalid_argument("CsmaParams: parameter length mismatch");
        for (double v : a)
            if (!(v > 0.0)) throw std::invalid_argument("CsmaParams: a must be positive");
        for (double v : h)
            if (!(v > 0.0)) throw std::invalid_argument("CsmaParams: H must be positive");
        for (auto [lo, hi] : bounds)
            if (!(lo > 0.0 && lo <= hi))
                throw std::invalid_argument("CsmaParams: bounds need 0 < lo <= hi");
    }
};

namespace detail {

/// Shared CSMA topology; the 0 -> k rates are supplied by the caller.
/// Components 0..n-1 are monitor ages, n..2n-1 packet ages; state 0 is idle,
/// state k means link k is transmitting.
inline ShsModel csma_skeleton(int n, const std::vector<double>& h,
                              const std::vector<PolynomialRate>& backoff_rates) {
    const int dims = 2 * n;
    ShsModel m;
    m.n = dims;
    m.num_states = n + 1;
    m.state_labels.push_back("idle");
    for (int k = 1; k <= n; ++k) m.state_labels.push_back("tx" + std::to_string(k));

    m.drift.assign(n + 1, std::vector<std::uint8_t>(dims, 0));
    for (int q = 0; q <= n; ++q) {
        for (int i = 0; i < n; ++i) m.drift[q][i] = 1; // monitor ages always grow
        if (q >= 1) m.drift[q][n + q - 1] = 1;         // in-flight packet age grows
    }

    for (int k = 1; k <= n; ++k) {
        // channel capture: ages untouched
        Transition cap;
        cap.source = 0;
        cap.target = k;
        cap.rate = backoff_rates[k - 1];
        cap.reset = ResetMap::identity(dims);
        m.transitions.push_back(std::move(cap));

        // delivery: monitor inherits the packet age, packet age cleared
        Transition del;
        del.source = k;
        del.target = 0;
        del.rate = PolynomialRate::constant(dims, h[k - 1]);
        auto mat = ResetMap::identity(dims).matrix;
        mat[k - 1].assign(dims, 0);
        mat[k - 1][n + k - 1] = 1;
        mat[n + k - 1].assign(dims, 0);
        del.reset = ResetMap::linear_binary(std::move(mat));
        m.transitions.push_back(std::move(del));
    }

    m.support_hints.assign(n + 1, SupportHint{});
    for (int j = 1; j <= n; ++j) m.support_hints[0].zero_components.push_back(n + j - 1);
    for (int k = 1; k <= n; ++k) {
        auto& hint = m.support_hints[k];
        for (int j = 1; j <= n; ++j)
            if (j != k) hint.zero_components.push_back(n + j - 1);
        for (int i = 0; i < n; ++i) hint.strict_less.emplace_back(n + k - 1, i);
    }
    return m;
}

} // namespace detail

inline ShsModel csma_model(const CsmaParams& p) {
    p.check();
    std::vector<PolynomialRate> rates;
    for (int k = 0; k < p.n; ++k) rates.push_back(PolynomialRate::linear(2 * p.n, k, p.a[k]));
    return detail::csma_skeleton(p.n, p.h, rates);
}

/// Age-blind baseline: same topology, constant back-off rates r_k. The
/// resulting moment system is exactly closed.
inline ShsModel age_blind_model(int n, const std::vector<double>& r,
                                const std::vector<double>& h) {
    if (n <= 0) throw std::invalid_argument("age_blind_model: n must be positive");
    if (static_cast<int>(r.size()) != n || static_cast<int>(h.size()) != n)
        throw std::invalid_argument("age_blind_model: parameter length mismatch");
    for (double v : r)
        if (!(v > 0.0)) throw std::invalid_argument("age_blind_model: r must be positive");
    for (double v : h)
        if (!(v > 0.0)) throw std::invalid_argument("age_blind_model: H must be positive");
    std::vector<PolynomialRate> rates;
    for (int k = 0; k < n; ++k) rates.push_back(PolynomialRate::constant(2 * n, r[k]));
    return detail::csma_skeleton(n, h, rates);
}

/// Network-average monitor age: unweighted mean over links of sum_q mu^{e_i}_q.
inline double network_age(const std::vector<double>& avg_age, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += avg_age[i];
    return s / static_cast<double>(n);
}

enum class CompareMethod { Solver, Simulator };

struct CompareReport {
    double age_aware = 0.0;
    double age_blind = 0.0;
    double gain = 0.0; // (blind - aware) / blind
};

struct CompareOptions {
    CompareMethod method = CompareMethod::Solver;
    int order = 16;            // solver truncation
    double scale_aware = 0.0;  // 0: auto_scale
    SimConfig sim;             // simulator method
};

inline CompareReport compare(const CsmaParams& aware, int n, const std::vector<double>& r_blind,
                             const std::vector<double>& h, const CompareOptions& opts = {}) {
    aware.check();
    const ShsModel model_aware = csma_model(aware);
    const ShsModel model_blind = age_blind_model(n, r_blind, h);

    CompareReport rep;
    if (opts.method == CompareMethod::Solver) {
        double c = opts.scale_aware;
        if (c <= 0.0) c = auto_scale(model_aware, 20000);
        const int last_even = opts.order - (opts.order % 2);
        const SolveReport sa = order_sweep(model_aware, {last_even - 1, last_even}, c);
        const SolveReport sb = solve(assemble(model_blind, 2, 1.0));
        rep.age_aware = network_age(sa.avg_age, n);
        rep.age_blind = network_age(sb.avg_age, n);
    } else {
        const SimStats sa = run(model_aware, opts.sim);
        SimConfig cfg_b = opts.sim;
        cfg_b.stream += 1;
        const SimStats sb = run(model_blind, cfg_b);
        double va = 0.0, vb = 0.0;
        for (int i = 0; i < n; ++i) {
            va += sa.mean_age(i, 2 * n);
            vb += sb.mean_age(i, 2 * n);
        }
        rep.age_aware = va / n;
        rep.age_blind = vb / n;
    }
    rep.gain = (rep.age_blind - rep.age_aware) / rep.age_blind;
    return rep;
}

} // namespace ageshs

#endif
