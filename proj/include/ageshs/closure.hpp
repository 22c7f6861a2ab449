#ifndef AGESHS_CLOSURE_HPP
#define AGESHS_CLOSURE_HPP

#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "model.hpp"
#include "moment_system.hpp"
#include "simulator.hpp"

namespace ageshs {

enum class ClosureMode {
    MatchLowerOrder, // boundary moment of order m+1 := its order-m image (scaled space)
    Zero             // drop boundary moments entirely
};

struct AssembleOptions {
    ClosureMode closure = ClosureMode::MatchLowerOrder;
    int max_indices = 20000;
};

/// Truncated, scaled, closed steady-state linear system E mu_z = b over the
/// scaled moments z = x / c.
struct MomentSystem {
    std::vector<MomentIndex> indices;
    Eigen::MatrixXd e;
    Eigen::VectorXd b;
    double scale = 1.0;
    int max_order = 0;
    std::map<MomentIndex, MomentIndex> closure_map;
    int normalization_row = -1;
    std::map<MomentIndex, int> position;
};

struct SolverError : std::runtime_error {
    double condition_estimate;
    int order;
    double scale;
    SolverError(double cond, int ord, double c)
        : std::runtime_error("numerically singular moment system (order " + std::to_string(ord) +
                             ", scale " + std::to_string(c) +
                             "); closure order too low or scale mismatch"),
          condition_estimate(cond), order(ord), scale(c) {}
};

struct SolveReport {
    std::map<MomentIndex, double> moments; // rescaled back to the original process
    std::vector<double> avg_age;           // per component, summed over states
    std::vector<int> truncation_orders_tried;
    std::vector<double> estimates_by_order;
    double condition_estimate = 0.0;
    double scale_used = 1.0;
    double mass_residual = 0.0; // |sum of zero-order moments - 1|
};

namespace detail {

/// Closure target: decrement the largest exponent (ties: lowest component),
/// repeating until the image lies inside the truncation.
inline MomentIndex closure_image(const MomentIndex& boundary,
                                 const std::set<MomentIndex>& included) {
    MomentIndex idx = boundary;
    while (!included.count(idx)) {
        int arg = -1, best = 0;
        for (int i = 0; i < static_cast<int>(idx.exps.size()); ++i)
            if (idx.exps[i] > best) {
                best = idx.exps[i];
                arg = i;
            }
        if (arg < 0) throw std::logic_error("closure_image: no exponent left to decrement");
        idx.exps[arg] -= 1;
    }
    return idx;
}

} // namespace detail

inline MomentSystem assemble(const ShsModel& model, int max_order, double scale,
                             const AssembleOptions& opts = {}) {
    if (max_order < 2) throw std::invalid_argument("assemble: max_order must be >= 2");
    if (!(scale >= 1.0)) throw std::invalid_argument("assemble: scale must be >= 1");
    {
        auto diags = validate_model(model);
        if (has_errors(diags))
            throw std::invalid_argument("assemble: model fails validation: " +
                                        diags.front().invariant);
    }

    MomentSystem sys;
    sys.scale = scale;
    sys.max_order = max_order;
    sys.indices = enumerate_indices(model, max_order);
    const int dim = static_cast<int>(sys.indices.size());
    if (dim > opts.max_indices)
        throw std::invalid_argument("assemble: index count " + std::to_string(dim) +
                                    " exceeds cap " + std::to_string(opts.max_indices));
    for (int i = 0; i < dim; ++i) sys.position[sys.indices[i]] = i;

    std::set<MomentIndex> included(sys.indices.begin(), sys.indices.end());
    sys.e = Eigen::MatrixXd::Zero(dim, dim);
    sys.b = Eigen::VectorXd::Zero(dim);

    for (int r = 0; r < dim; ++r) {
        const OdeRow row = generator_row(model, sys.indices[r]);
        const int row_order = sys.indices[r].order();
        for (const auto& [idx, coeff] : row.terms) {
            // steady-state equation for z = x / c, the order-m row divided
            // by c^(m-1): a term of order s picks up the factor c^(s-r)
            const double factor = std::pow(scale, idx.order() - row_order);
            if (included.count(idx)) {
                sys.e(r, sys.position.at(idx)) += coeff * factor;
            } else if (opts.closure == ClosureMode::MatchLowerOrder) {
                const MomentIndex image = detail::closure_image(idx, included);
                auto it = sys.closure_map.find(idx);
                if (it == sys.closure_map.end()) sys.closure_map.emplace(idx, image);
                sys.e(r, sys.position.at(image)) += coeff * factor;
            } // ClosureMode::Zero drops the term
        }
    }

    // the zero-order rows form a conservative master equation (rank-deficient
    // by one); replace the first with the normalization sum_q mu0_q = 1
    sys.normalization_row = 0;
    sys.e.row(0).setZero();
    for (int i = 0; i < dim; ++i)
        if (sys.indices[i].order() == 0) sys.e(0, i) = 1.0;
    sys.b(0) = 1.0;
    return sys;
}

inline SolveReport solve(const MomentSystem& sys) {
    const int dim = static_cast<int>(sys.indices.size());
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys.e);
    const double rcond = lu.rcond();
    const double cond = (rcond > 0.0) ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    Eigen::VectorXd z = lu.solve(sys.b);
    // high-order truncations are legitimately ill-conditioned yet forward
    // stable, so gate on the solution, not on rcond alone
    if (!z.allFinite()) throw SolverError(cond, sys.max_order, sys.scale);

    SolveReport rep;
    rep.condition_estimate = cond;
    rep.scale_used = sys.scale;
    rep.truncation_orders_tried = {sys.max_order};

    const int n = static_cast<int>(sys.indices.front().exps.size());
    rep.avg_age.assign(n, 0.0);
    double mass = 0.0;
    for (int i = 0; i < dim; ++i) {
        const MomentIndex& idx = sys.indices[i];
        const double mu = z(i) * std::pow(sys.scale, idx.order());
        rep.moments[idx] = mu;
        if (idx.order() == 0) mass += mu;
        if (idx.order() == 1)
            for (int cpt = 0; cpt < n; ++cpt)
                if (idx.exps[cpt] == 1) rep.avg_age[cpt] += mu;
    }
    rep.mass_residual = std::abs(mass - 1.0);
    if (!(rep.mass_residual < 1e-6)) throw SolverError(cond, sys.max_order, sys.scale);
    return rep;
}

/// c = max(1, 2 * pilot-simulated mean of the largest age component),
/// rounded up to one significant figure. Heuristic; the theory only asks for
/// "sufficiently large".
inline double auto_scale(const ShsModel& model, std::uint64_t pilot_sim_budget,
                         std::uint64_t seed = 1) {
    if (pilot_sim_budget < 1000)
        throw std::invalid_argument("auto_scale: pilot budget must be >= 1000 events");
    SimConfig cfg;
    cfg.max_events = pilot_sim_budget;
    cfg.seed = seed;
    cfg.tracked_moment_orders = 1;
    const SimStats stats = run(model, cfg);
    double largest = 0.0;
    for (int i = 0; i < model.n; ++i) largest = std::max(largest, stats.mean_age(i, model.n));
    double c = std::max(1.0, 2.0 * largest);
    if (c > 1.0) {
        const double p = std::pow(10.0, std::floor(std::log10(c)));
        c = std::ceil(c / p - 1e-12) * p;
    }
    return c;
}

/// Runs the closure solve at each order. The single-parity estimates carry a
/// multiplicative parity bias (reciprocal between adjacent parities), so the
/// headline estimate is the geometric mean of the last even- and last
/// odd-order results, which cancels it; arithmetic fallback when signs make
/// the geometric mean undefined.
inline SolveReport order_sweep(const ShsModel& model, const std::vector<int>& orders, double scale,
                               const AssembleOptions& opts = {}) {
    if (orders.empty()) throw std::invalid_argument("order_sweep: no orders given");
    for (std::size_t i = 0; i < orders.size(); ++i) {
        if (orders[i] < 2) throw std::invalid_argument("order_sweep: orders must be >= 2");
        if (i && orders[i] <= orders[i - 1])
            throw std::invalid_argument("order_sweep: orders must be ascending");
    }

    SolveReport out;
    out.scale_used = scale;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> last_even, last_odd;
    for (int order : orders) {
        out.truncation_orders_tried.push_back(order);
        try {
            SolveReport rep = solve(assemble(model, order, scale, opts));
            double mean = 0.0;
            for (double v : rep.avg_age) mean += v;
            mean /= static_cast<double>(rep.avg_age.size());
            out.estimates_by_order.push_back(mean);
            (order % 2 == 0 ? last_even : last_odd) = rep.avg_age;
            out.moments = std::move(rep.moments);
            out.condition_estimate = rep.condition_estimate;
            out.mass_residual = rep.mass_residual;
        } catch (const SolverError&) {
            out.estimates_by_order.push_back(nan); // recorded, not fatal
        }
    }
    if (last_even.empty() && last_odd.empty())
        throw SolverError(std::numeric_limits<double>::infinity(), orders.back(), scale);
    if (last_even.empty())
        out.avg_age = last_odd;
    else if (last_odd.empty())
        out.avg_age = last_even;
    else {
        out.avg_age.resize(last_even.size());
        for (std::size_t i = 0; i < last_even.size(); ++i) {
            const double e = last_even[i], o = last_odd[i];
            out.avg_age[i] = (e > 0.0 && o > 0.0) ? std::sqrt(e * o) : 0.5 * (e + o);
        }
    }
    return out;
}

} // namespace ageshs

#endif
