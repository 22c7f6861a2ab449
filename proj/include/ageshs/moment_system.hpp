#ifndef AGESHS_MOMENT_SYSTEM_HPP
#define AGESHS_MOMENT_SYSTEM_HPP

#include <algorithm>
#include <compare>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>
#include <vector>

#include "model.hpp"

namespace ageshs {

/// Names the moment E[x^m delta_{q,q(t)}]: a discrete state paired with an
/// exponent vector.
struct MomentIndex {
    int state = 0;
    Exponents exps;

    int order() const { return total_order(exps); }

    // graded lexicographic: order ascending, then (state, exps)
    friend bool operator<(const MomentIndex& a, const MomentIndex& b) {
        const int oa = a.order(), ob = b.order();
        if (oa != ob) return oa < ob;
        if (a.state != b.state) return a.state < b.state;
        return a.exps < b.exps;
    }
    friend bool operator==(const MomentIndex& a, const MomentIndex& b) {
        return a.state == b.state && a.exps == b.exps;
    }
};

/// One steady-state equation: the linear combination of moment indices that
/// the generator produces for `target`. Pure index/coefficient data.
struct OdeRow {
    MomentIndex target;
    std::map<MomentIndex, double> terms;
};

/// True when support hints force the moment to be identically zero (some
/// exponent sits on a component pinned to zero in that state).
inline bool index_pruned(const ShsModel& model, const MomentIndex& idx) {
    for (int i = 0; i < static_cast<int>(idx.exps.size()); ++i)
        if (idx.exps[i] > 0 && model.pinned_zero(idx.state, i)) return true;
    return false;
}

inline void check_index(const ShsModel& model, const MomentIndex& idx) {
    if (idx.state < 0 || idx.state >= model.num_states)
        throw std::invalid_argument("moment index: state out of range");
    if (static_cast<int>(idx.exps.size()) != model.n)
        throw std::invalid_argument("moment index: exponent length mismatch");
    for (int e : idx.exps)
        if (e < 0) throw std::invalid_argument("moment index: negative exponent");
    if (index_pruned(model, idx))
        throw std::invalid_argument("moment index: pruned by support hints");
}

namespace detail {

/// Monomial x^m after the substitution x -> A x for a binary matrix with row
/// sums <= 1: each component of A x is 0 or a single x_j, so the image is
/// again a single monomial (or vanishes). Returns false when it vanishes.
inline bool substitute_monomial(const Exponents& m,
                                const std::vector<std::vector<std::uint8_t>>& a, Exponents& out) {
    const int n = static_cast<int>(m.size());
    out.assign(n, 0);
    for (int i = 0; i < n; ++i) {
        if (m[i] == 0) continue;
        int col = -1;
        for (int j = 0; j < n; ++j)
            if (a[i][j]) col = j;
        if (col < 0) return false; // zero row kills the term
        out[col] += m[i];
    }
    return true;
}

inline Exponents add_exps(const Exponents& a, const Exponents& b) {
    Exponents r = a;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += b[i];
    return r;
}

} // namespace detail

/// Extended-generator row for one moment index: drift terms, inflow through
/// reset maps, and outflow scaled by the polynomial rates. Terms referencing
/// support-pruned (identically zero) indices are dropped; exact cancellations
/// are merged away.
inline OdeRow generator_row(const ShsModel& model, const MomentIndex& target) {
    check_index(model, target);
    OdeRow row;
    row.target = target;
    const int q = target.state;
    const Exponents& m = target.exps;

    auto add = [&](MomentIndex idx, double coeff) {
        if (coeff == 0.0 || index_pruned(model, idx)) return;
        auto [it, inserted] = row.terms.emplace(std::move(idx), coeff);
        if (!inserted) it->second += coeff;
    };

    // drift: b^i_q m_i x^{m - e_i}
    for (int i = 0; i < model.n; ++i) {
        if (model.drift[q][i] && m[i] >= 1) {
            Exponents lower = m;
            lower[i] -= 1;
            add({q, std::move(lower)}, static_cast<double>(m[i]));
        }
    }

    for (const auto& t : model.transitions) {
        if (t.source == q) {
            // outflow: -lambda_l x^m
            for (const auto& [j, a] : t.rate.terms) add({q, detail::add_exps(m, j)}, -a);
        }
        if (t.target == q) {
            // inflow: lambda_l (phi^x_l(x))^m in the source state
            if (t.reset.kind == ResetMap::Kind::LinearBinary) {
                Exponents image;
                if (detail::substitute_monomial(m, t.reset.matrix, image))
                    for (const auto& [j, a] : t.rate.terms)
                        add({t.source, detail::add_exps(image, j)}, a);
            } else {
                double cm = 1.0;
                for (int i = 0; i < model.n; ++i)
                    for (int k = 0; k < m[i]; ++k) cm *= t.reset.constant[i];
                if (cm != 0.0)
                    for (const auto& [j, a] : t.rate.terms) add({t.source, j}, a * cm);
            }
        }
    }

    std::erase_if(row.terms, [](const auto& kv) { return kv.second == 0.0; });
    return row;
}

/// All unpruned moment indices with total order <= max_order, in graded
/// lexicographic order. Deterministic.
inline std::vector<MomentIndex> enumerate_indices(const ShsModel& model, int max_order) {
    if (max_order < 0) throw std::invalid_argument("enumerate_indices: max_order < 0");
    std::vector<MomentIndex> out;
    for (int q = 0; q < model.num_states; ++q) {
        std::vector<int> free_comps;
        for (int i = 0; i < model.n; ++i)
            if (!model.pinned_zero(q, i)) free_comps.push_back(i);

        Exponents exps(model.n, 0);
        // enumerate exponents over the free components, total <= max_order
        auto recurse = [&](auto&& self, std::size_t pos, int budget) -> void {
            if (pos == free_comps.size()) {
                out.push_back({q, exps});
                return;
            }
            for (int e = 0; e <= budget; ++e) {
                exps[free_comps[pos]] = e;
                self(self, pos + 1, budget - e);
            }
            exps[free_comps[pos]] = 0;
        };
        recurse(recurse, 0, max_order);
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Indices referenced by the rows but not included in the truncation: the
/// higher-order moments that need closure.
inline std::set<MomentIndex> boundary_indices(const std::vector<OdeRow>& rows,
                                              const std::set<MomentIndex>& included) {
    std::set<MomentIndex> out;
    for (const auto& row : rows)
        for (const auto& [idx, coeff] : row.terms)
            if (!included.count(idx)) out.insert(idx);
    return out;
}

inline std::string format_index(const MomentIndex& idx) {
    std::string s = "q" + std::to_string(idx.state) + ":(";
    for (std::size_t i = 0; i < idx.exps.size(); ++i)
        s += (i ? "," : "") + std::to_string(idx.exps[i]);
    return s + ")";
}

/// CSV dump: target index, term index, coefficient.
inline void write_rows_csv(std::ostream& os, const std::vector<OdeRow>& rows) {
    os << "target,term,coefficient\n";
    os.precision(17);
    for (const auto& row : rows)
        for (const auto& [idx, coeff] : row.terms)
            os << format_index(row.target) << "," << format_index(idx) << "," << coeff << "\n";
}

} // namespace ageshs

#endif
