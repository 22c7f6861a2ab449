#ifndef AGESHS_POLYNOMIAL_HPP
#define AGESHS_POLYNOMIAL_HPP

#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace ageshs {

/// Exponent vector of a monomial x_1^{m_1} ... x_n^{m_n}.
using Exponents = std::vector<int>;

inline int total_order(const Exponents& m) {
    return std::accumulate(m.begin(), m.end(), 0);
}

inline double eval_monomial(const Exponents& m, const std::vector<double>& x) {
    double v = 1.0;
    for (std::size_t i = 0; i < m.size(); ++i)
        for (int k = 0; k < m[i]; ++k) v *= x[i];
    return v;
}

/// Sparse multivariate polynomial over the age vector; used as a transition
/// rate, so it must be nonnegative on the age domain (checked by the model
/// validator, not here).
struct PolynomialRate {
    std::map<Exponents, double> terms;

    int dim() const {
        return terms.empty() ? 0 : static_cast<int>(terms.begin()->first.size());
    }

    int max_order() const {
        int d = 0;
        for (const auto& [m, a] : terms) d = std::max(d, total_order(m));
        return d;
    }

    double eval(const std::vector<double>& x) const {
        double v = 0.0;
        for (const auto& [m, a] : terms) v += a * eval_monomial(m, x);
        return v;
    }

    void add_term(Exponents m, double coeff) {
        auto [it, inserted] = terms.emplace(std::move(m), coeff);
        if (!inserted) it->second += coeff;
    }

    bool is_zero() const {
        for (const auto& [m, a] : terms)
            if (a != 0.0) return false;
        return true;
    }

    static PolynomialRate constant(int n, double a) {
        PolynomialRate p;
        p.terms[Exponents(n, 0)] = a;
        return p;
    }

    /// a * x_comp
    static PolynomialRate linear(int n, int comp, double a) {
        Exponents m(n, 0);
        m.at(comp) = 1;
        PolynomialRate p;
        p.terms[std::move(m)] = a;
        return p;
    }

    bool operator==(const PolynomialRate& o) const = default;
};

/// Dense univariate polynomial, coefficient of s^k at index k. Scratch type
/// for hazard integrals along drift lines and exact monomial time-averages.
struct Poly1 {
    std::vector<double> c;

    double eval(double s) const {
        double v = 0.0;
        for (std::size_t k = c.size(); k-- > 0;) v = v * s + c[k];
        return v;
    }

    Poly1& operator+=(const Poly1& o) {
        if (o.c.size() > c.size()) c.resize(o.c.size(), 0.0);
        for (std::size_t k = 0; k < o.c.size(); ++k) c[k] += o.c[k];
        return *this;
    }

    Poly1& scale(double a) {
        for (auto& v : c) v *= a;
        return *this;
    }

    /// multiply by (p + q s)
    Poly1& mul_linear(double p, double q) {
        c.push_back(0.0);
        for (std::size_t k = c.size() - 1; k > 0; --k) c[k] = c[k] * p + c[k - 1] * q;
        c[0] *= p;
        return *this;
    }

    /// antiderivative with zero constant term
    Poly1 integral() const {
        Poly1 r;
        r.c.resize(c.size() + 1, 0.0);
        for (std::size_t k = 0; k < c.size(); ++k) r.c[k + 1] = c[k] / static_cast<double>(k + 1);
        return r;
    }

    bool is_zero() const {
        for (double v : c)
            if (v != 0.0) return false;
        return true;
    }
};

/// Monomial x^m composed with the drift line s -> x + b s, expanded in s.
inline Poly1 monomial_along_drift(const Exponents& m, const std::vector<double>& x,
                                  const std::vector<std::uint8_t>& b) {
    Poly1 p;
    p.c = {1.0};
    for (std::size_t i = 0; i < m.size(); ++i)
        for (int k = 0; k < m[i]; ++k) p.mul_linear(x[i], static_cast<double>(b[i]));
    return p;
}

} // namespace ageshs

#endif
