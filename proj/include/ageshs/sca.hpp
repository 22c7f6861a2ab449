#ifndef AGESHS_SCA_HPP
#define AGESHS_SCA_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "closure.hpp"
#include "csma.hpp"
#include "model.hpp"

namespace ageshs {

/// Parametric model family for optimization: eta -> model, plus which age
/// components enter the objective (their mean network age is minimized).
struct ParametricFamily {
    int dim = 0;
    std::function<ShsModel(const std::vector<double>&)> build;
    std::vector<int> objective_components;
};

/// CSMA family parameterized by the back-off gains a_1..a_n; service rates
/// fixed. Objective averages the n monitor ages.
inline ParametricFamily csma_backoff_family(int n, std::vector<double> h) {
    ParametricFamily f;
    f.dim = n;
    for (int i = 0; i < n; ++i) f.objective_components.push_back(i);
    f.build = [n, h = std::move(h)](const std::vector<double>& eta) {
        CsmaParams p;
        p.n = n;
        p.a = eta;
        p.h = h;
        return csma_model(p);
    };
    return f;
}

struct ScaConfig {
    double alpha0 = 1.0;           // initial proximal step
    double alpha_shrink = 0.5;     // backtracking factor
    int max_backtracks = 40;
    double epsilon = 1e-6;         // stop on surrogate-value change
    int max_iterations = 200;
    std::vector<std::pair<double, double>> box; // per-parameter bounds
    enum class Gradient { Analytic, FiniteDifference };
    Gradient gradient = Gradient::Analytic;
    double fd_step = 1e-5;         // central-difference half-width (relative)
    int order = 8;                 // closure truncation for the objective
    double scale = 1.0;            // moment scaling for the objective

    void check(int dim) const {
        if (!(alpha0 > 0.0)) throw std::invalid_argument("ScaConfig: alpha0 must be positive");
        if (!(alpha_shrink > 0.0 && alpha_shrink < 1.0))
            throw std::invalid_argument("ScaConfig: alpha_shrink must be in (0,1)");
        if (!(epsilon > 0.0)) throw std::invalid_argument("ScaConfig: epsilon must be positive");
        if (max_iterations < 1) throw std::invalid_argument("ScaConfig: max_iterations < 1");
        if (static_cast<int>(box.size()) != dim)
            throw std::invalid_argument("ScaConfig: box size must match parameter count");
        for (auto [lo, hi] : box)
            if (!(lo <= hi)) throw std::invalid_argument("ScaConfig: empty box interval");
    }
};

struct ScaIterate {
    int iteration = 0;
    std::vector<double> eta;
    double objective = 0.0;
    double surrogate = 0.0;
    double grad_norm = 0.0;
    double alpha = 0.0;
};

struct ScaResult {
    std::vector<double> eta;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<ScaIterate> trace;
};

namespace detail {

/// Mean age over the selected components, read off the scaled solution.
inline double read_objective(const MomentSystem& sys, const Eigen::VectorXd& z,
                             const std::vector<int>& comps) {
    double total = 0.0;
    for (std::size_t i = 0; i < sys.indices.size(); ++i) {
        const MomentIndex& idx = sys.indices[i];
        if (idx.order() != 1) continue;
        for (int c : comps)
            if (idx.exps[c] == 1) total += z(static_cast<int>(i)) * sys.scale;
    }
    return total / static_cast<double>(comps.size());
}

/// Single-truncation value dJ = c d^T E^{-1} b and, when wanted, its exact
/// gradient via the adjoint identity dJ/deta_i = -w^T (dE/deta_i) v. The
/// coefficient matrix is affine in each parameter of the families used here
/// (rate coefficients enter linearly), so dE/deta_i = E(eta + e_i) - E(eta)
/// exactly; b is parameter-independent.
struct OrderEval {
    double value = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> grad;
};

inline OrderEval eval_order(const ParametricFamily& family, const std::vector<double>& eta,
                            int order, double scale, bool want_grad) {
    OrderEval out;
    const MomentSystem sys = assemble(family.build(eta), order, scale);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys.e);
    const Eigen::VectorXd v = lu.solve(sys.b);
    if (!v.allFinite()) throw SolverError(std::numeric_limits<double>::infinity(), order, scale);
    out.value = read_objective(sys, v, family.objective_components);
    if (!want_grad) return out;

    Eigen::VectorXd d = Eigen::VectorXd::Zero(sys.e.rows());
    for (std::size_t i = 0; i < sys.indices.size(); ++i) {
        const MomentIndex& idx = sys.indices[i];
        if (idx.order() != 1) continue;
        for (int c : family.objective_components)
            if (idx.exps[c] == 1)
                d(static_cast<int>(i)) +=
                    sys.scale / static_cast<double>(family.objective_components.size());
    }
    const Eigen::VectorXd w = lu.transpose().solve(d);

    out.grad.assign(family.dim, 0.0);
    for (int i = 0; i < family.dim; ++i) {
        std::vector<double> shifted = eta;
        shifted[i] += 1.0;
        const MomentSystem sys_i = assemble(family.build(shifted), order, scale);
        if (sys_i.indices != sys.indices)
            throw std::logic_error("eval_order: parameter shift changed the index set");
        out.grad[i] = -w.dot((sys_i.e - sys.e) * v);
    }
    return out;
}

} // namespace detail

/// Average-age objective at eta: geometric mean of the closure estimates at
/// the two top truncation parities (each single-parity estimate carries a
/// reciprocal multiplicative bias that the combination cancels; see
/// order_sweep).
inline double objective(const ParametricFamily& family, const std::vector<double>& eta,
                        const ScaConfig& cfg) {
    if (cfg.order < 3) throw std::invalid_argument("objective: order must be >= 3");
    const auto a = detail::eval_order(family, eta, cfg.order, cfg.scale, false);
    const auto b = detail::eval_order(family, eta, cfg.order - 1, cfg.scale, false);
    if (!(a.value > 0.0 && b.value > 0.0))
        throw SolverError(std::numeric_limits<double>::infinity(), cfg.order, cfg.scale);
    return std::sqrt(a.value * b.value);
}

inline std::vector<double> gradient(const ParametricFamily& family, const std::vector<double>& eta,
                                    const ScaConfig& cfg) {
    const int dim = family.dim;
    std::vector<double> g(dim, 0.0);

    if (cfg.gradient == ScaConfig::Gradient::FiniteDifference) {
        for (int i = 0; i < dim; ++i) {
            const double h = cfg.fd_step * std::max(1.0, std::abs(eta[i]));
            std::vector<double> lo = eta, hi = eta;
            lo[i] -= h;
            hi[i] += h;
            g[i] = (objective(family, hi, cfg) - objective(family, lo, cfg)) / (2.0 * h);
        }
        return g;
    }

    if (cfg.order < 3) throw std::invalid_argument("gradient: order must be >= 3");
    const auto a = detail::eval_order(family, eta, cfg.order, cfg.scale, true);
    const auto b = detail::eval_order(family, eta, cfg.order - 1, cfg.scale, true);
    if (!(a.value > 0.0 && b.value > 0.0))
        throw SolverError(std::numeric_limits<double>::infinity(), cfg.order, cfg.scale);
    const double obj = std::sqrt(a.value * b.value);
    // d sqrt(Ja Jb) = (obj/2) (d ln Ja + d ln Jb)
    for (int i = 0; i < dim; ++i)
        g[i] = 0.5 * obj * (a.grad[i] / a.value + b.grad[i] / b.value);
    return g;
}

/// Proximal successive convex approximation over a box: minimize the
/// quadratic surrogate f(eta_k) + g^T (eta - eta_k) + ||eta - eta_k||^2 / (2
/// alpha), whose solution is a projected gradient step; alpha backtracks
/// until the surrogate majorizes f at the candidate; stop when the surrogate
/// optimum stalls.
inline ScaResult sca_minimize(const ParametricFamily& family, std::vector<double> eta,
                              const ScaConfig& cfg) {
    if (static_cast<int>(eta.size()) != family.dim)
        throw std::invalid_argument("sca_minimize: initial point has wrong dimension");
    cfg.check(family.dim);
    auto clip = [&](std::vector<double>& v) {
        for (int i = 0; i < family.dim; ++i)
            v[i] = std::min(std::max(v[i], cfg.box[i].first), cfg.box[i].second);
    };
    clip(eta);

    ScaResult res;
    double f = objective(family, eta, cfg);
    double prev_surrogate = std::numeric_limits<double>::infinity();
    double alpha = cfg.alpha0;

    for (int it = 0; it < cfg.max_iterations; ++it) {
        const std::vector<double> g = gradient(family, eta, cfg);
        double gnorm = 0.0;
        for (double v : g) gnorm += v * v;
        gnorm = std::sqrt(gnorm);

        std::vector<double> cand(family.dim);
        double f_cand = 0.0, surrogate = 0.0;
        bool accepted = false;
        for (int bt = 0; bt <= cfg.max_backtracks; ++bt) {
            for (int i = 0; i < family.dim; ++i) cand[i] = eta[i] - alpha * g[i];
            clip(cand);
            double lin = 0.0, quad = 0.0;
            for (int i = 0; i < family.dim; ++i) {
                const double d = cand[i] - eta[i];
                lin += g[i] * d;
                quad += d * d;
            }
            surrogate = f + lin + quad / (2.0 * alpha);
            bool ok = false;
            double fc = 0.0;
            try {
                fc = objective(family, cand, cfg);
                ok = true;
            } catch (const std::exception&) {
            }
            if (ok && fc <= surrogate + 1e-12 * std::abs(surrogate)) {
                f_cand = fc;
                accepted = true;
                break;
            }
            alpha *= cfg.alpha_shrink;
        }
        if (!accepted) break; // no majorizing step found; eta is the answer

        eta = cand;
        f = f_cand;
        res.trace.push_back({it, eta, f, surrogate, gnorm, alpha});
        res.iterations = it + 1;

        if (std::abs(surrogate - prev_surrogate) < cfg.epsilon) {
            res.converged = true;
            break;
        }
        prev_surrogate = surrogate;
    }

    res.eta = eta;
    res.objective = f;
    return res;
}

inline void write_trace_csv(std::ostream& os, const ScaResult& res) {
    os.precision(17);
    os << "iteration";
    if (!res.trace.empty())
        for (std::size_t i = 0; i < res.trace.front().eta.size(); ++i) os << ",eta" << i;
    os << ",objective,surrogate,grad_norm,alpha\n";
    for (const auto& it : res.trace) {
        os << it.iteration;
        for (double v : it.eta) os << "," << v;
        os << "," << it.objective << "," << it.surrogate << "," << it.grad_norm << "," << it.alpha
           << "\n";
    }
}

} // namespace ageshs

#endif
