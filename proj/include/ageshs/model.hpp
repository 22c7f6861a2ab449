#ifndef AGESHS_MODEL_HPP
#define AGESHS_MODEL_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "polynomial.hpp"

namespace ageshs {

/// Jump-time transformation of the age vector: either a binary substitution
/// matrix with row sums <= 1 (age inheritance / identity), or a reset to a
/// fixed nonnegative vector.
struct ResetMap {
    enum class Kind { LinearBinary, Constant };

    Kind kind = Kind::Constant;
    std::vector<std::vector<std::uint8_t>> matrix; // n x n, LinearBinary only
    std::vector<double> constant;                  // length n, Constant only

    static ResetMap identity(int n) {
        ResetMap r;
        r.kind = Kind::LinearBinary;
        r.matrix.assign(n, std::vector<std::uint8_t>(n, 0));
        for (int i = 0; i < n; ++i) r.matrix[i][i] = 1;
        return r;
    }

    static ResetMap linear_binary(std::vector<std::vector<std::uint8_t>> a) {
        ResetMap r;
        r.kind = Kind::LinearBinary;
        r.matrix = std::move(a);
        return r;
    }

    static ResetMap to_constant(std::vector<double> c) {
        ResetMap r;
        r.kind = Kind::Constant;
        r.constant = std::move(c);
        return r;
    }

    int dim() const {
        return kind == Kind::LinearBinary ? static_cast<int>(matrix.size())
                                          : static_cast<int>(constant.size());
    }

    std::vector<double> apply(const std::vector<double>& x) const {
        if (kind == Kind::Constant) return constant;
        std::vector<double> y(matrix.size(), 0.0);
        for (std::size_t i = 0; i < matrix.size(); ++i)
            for (std::size_t j = 0; j < matrix[i].size(); ++j)
                if (matrix[i][j]) y[i] += x[j];
        return y;
    }

    bool operator==(const ResetMap& o) const = default;
};

struct Transition {
    int source = 0;
    int target = 0;
    PolynomialRate rate;
    ResetMap reset;

    bool operator==(const Transition& o) const = default;
};

/// Declarative knowledge about the support of the age process in one discrete
/// state: components identically zero, and strict orderings between
/// components. The simulator asserts these; the moment enumerator prunes
/// with them.
struct SupportHint {
    std::vector<int> zero_components;
    std::vector<std::pair<int, int>> strict_less; // (a, b) meaning x_a < x_b

    bool operator==(const SupportHint& o) const = default;
};

/// Age-dependent SHS: unit/zero drifts per discrete state, polynomial
/// transition rates, binary-matrix or constant resets.
struct ShsModel {
    int n = 0;          // age-vector dimension
    int num_states = 0; // discrete states are 0 .. num_states-1
    std::vector<std::string> state_labels;          // optional, empty or size num_states
    std::vector<std::vector<std::uint8_t>> drift;   // num_states x n
    std::vector<Transition> transitions;
    std::vector<SupportHint> support_hints;         // empty or size num_states

    bool pinned_zero(int state, int comp) const {
        if (support_hints.empty()) return false;
        const auto& z = support_hints[state].zero_components;
        for (int c : z)
            if (c == comp) return true;
        return false;
    }

    bool operator==(const ShsModel& o) const = default;
};

struct Diagnostic {
    enum class Severity { Error, Warning };
    Severity severity = Severity::Error;
    std::string invariant;
    std::string detail;
};

struct ValidationGrid {
    double x_max = 10.0;
    int points_per_dim = 5;
};

namespace detail {

inline bool rate_negative_on_grid(const PolynomialRate& rate, int n, const ValidationGrid& grid,
                                  std::vector<double>* where) {
    // all-nonnegative coefficients make the rate nonnegative on [0,inf)^n
    bool has_negative_coeff = false;
    for (const auto& [m, a] : rate.terms)
        if (a < 0.0) has_negative_coeff = true;
    if (!has_negative_coeff) return false;

    std::vector<int> idx(n, 0);
    std::vector<double> x(n, 0.0);
    const int p = std::max(2, grid.points_per_dim);
    while (true) {
        for (int i = 0; i < n; ++i) x[i] = grid.x_max * idx[i] / (p - 1);
        if (rate.eval(x) < 0.0) {
            if (where) *where = x;
            return true;
        }
        int i = 0;
        for (; i < n; ++i) {
            if (++idx[i] < p) break;
            idx[i] = 0;
        }
        if (i == n) return false;
    }
}

inline bool all_reachable_from_every_state(const ShsModel& model) {
    const int q = model.num_states;
    std::vector<std::vector<bool>> reach(q, std::vector<bool>(q, false));
    for (int s = 0; s < q; ++s) reach[s][s] = true;
    for (const auto& t : model.transitions)
        if (!t.rate.is_zero()) reach[t.source][t.target] = true;
    for (int k = 0; k < q; ++k)
        for (int i = 0; i < q; ++i)
            for (int j = 0; j < q; ++j)
                if (reach[i][k] && reach[k][j]) reach[i][j] = true;
    for (int i = 0; i < q; ++i)
        for (int j = 0; j < q; ++j)
            if (!reach[i][j]) return false;
    return true;
}

} // namespace detail

/// Structural validation. Returns diagnostics rather than throwing; an empty
/// list means every invariant holds. State-graph connectivity failures are
/// warnings, everything else is an error.
inline std::vector<Diagnostic> validate_model(const ShsModel& model,
                                              const ValidationGrid& grid = {}) {
    std::vector<Diagnostic> out;
    auto error = [&](std::string inv, std::string det) {
        out.push_back({Diagnostic::Severity::Error, std::move(inv), std::move(det)});
    };

    if (model.n <= 0) error("dimension positive", "n = " + std::to_string(model.n));
    if (model.num_states <= 0)
        error("state set nonempty", "num_states = " + std::to_string(model.num_states));
    if (!model.state_labels.empty() &&
        static_cast<int>(model.state_labels.size()) != model.num_states)
        error("labels match states", "got " + std::to_string(model.state_labels.size()));
    if (static_cast<int>(model.drift.size()) != model.num_states)
        error("drift per state", "got " + std::to_string(model.drift.size()) + " drift vectors");

    for (std::size_t q = 0; q < model.drift.size(); ++q) {
        if (static_cast<int>(model.drift[q].size()) != model.n) {
            error("drift dimension", "state " + std::to_string(q));
            continue;
        }
        for (int i = 0; i < model.n; ++i)
            if (model.drift[q][i] > 1)
                error("drift entries binary",
                      "state " + std::to_string(q) + " component " + std::to_string(i));
    }

    for (std::size_t l = 0; l < model.transitions.size(); ++l) {
        const auto& t = model.transitions[l];
        const std::string tag = "transition " + std::to_string(l);
        if (t.source < 0 || t.source >= model.num_states)
            error("transition source in state set", tag);
        if (t.target < 0 || t.target >= model.num_states)
            error("transition target in state set", tag);
        if (t.rate.terms.empty() || t.rate.dim() != model.n) {
            error("rate dimension", tag);
        } else {
            for (const auto& [m, a] : t.rate.terms)
                if (static_cast<int>(m.size()) != model.n)
                    error("rate exponent length", tag);
            std::vector<double> where;
            if (detail::rate_negative_on_grid(t.rate, model.n, grid, &where)) {
                std::string pt = "(";
                for (std::size_t i = 0; i < where.size(); ++i)
                    pt += (i ? "," : "") + std::to_string(where[i]);
                error("rate negative at grid point", tag + " at " + pt + ")");
            }
        }
        if (t.reset.dim() != model.n) {
            error("reset dimension", tag);
        } else if (t.reset.kind == ResetMap::Kind::LinearBinary) {
            for (std::size_t i = 0; i < t.reset.matrix.size(); ++i) {
                int row_sum = 0;
                if (static_cast<int>(t.reset.matrix[i].size()) != model.n)
                    error("reset row length", tag);
                for (auto v : t.reset.matrix[i]) {
                    if (v > 1) error("reset entries binary", tag + " row " + std::to_string(i));
                    row_sum += v;
                }
                if (row_sum > 1)
                    error("reset row sum > 1", tag + " row " + std::to_string(i) + " sum " +
                                                   std::to_string(row_sum));
            }
        } else {
            for (double v : t.reset.constant)
                if (v < 0.0) error("reset constant nonnegative", tag);
        }
    }

    if (!model.support_hints.empty() &&
        static_cast<int>(model.support_hints.size()) != model.num_states)
        error("support hints per state", "got " + std::to_string(model.support_hints.size()));
    for (std::size_t q = 0; q < model.support_hints.size(); ++q) {
        for (int c : model.support_hints[q].zero_components)
            if (c < 0 || c >= model.n)
                error("support hint component range", "state " + std::to_string(q));
        for (auto [a, b] : model.support_hints[q].strict_less)
            if (a < 0 || a >= model.n || b < 0 || b >= model.n)
                error("support hint component range", "state " + std::to_string(q));
    }

    if (out.empty() && model.num_states > 1 && !detail::all_reachable_from_every_state(model))
        out.push_back({Diagnostic::Severity::Warning, "state graph irreducible",
                       "some state cannot reach every other state"});
    return out;
}

inline bool has_errors(const std::vector<Diagnostic>& diags) {
    for (const auto& d : diags)
        if (d.severity == Diagnostic::Severity::Error) return true;
    return false;
}

/// Single state, scalar age, self-transition at rate a1*x resetting the age
/// to zero.
inline ShsModel illustrative_model(double a1) {
    if (!(a1 > 0.0)) throw std::invalid_argument("illustrative_model: a1 must be positive");
    ShsModel m;
    m.n = 1;
    m.num_states = 1;
    m.drift = {{1}};
    Transition t;
    t.source = 0;
    t.target = 0;
    t.rate = PolynomialRate::linear(1, 0, a1);
    t.reset = ResetMap::to_constant({0.0});
    m.transitions.push_back(std::move(t));
    return m;
}

} // namespace ageshs

#endif
