#ifndef AGESHS_TESTS_ORACLE_HPP
#define AGESHS_TESTS_ORACLE_HPP

// Independent reference computations used by the tests: plain quadrature and
// renewal-reward arguments, sharing no code with the library under test.

#include <cmath>
#include <functional>

namespace oracle {

// composite Simpson on [a, b]
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        int panels = 4000) {
    const double h = (b - a) / (2 * panels);
    double s = f(a) + f(b);
    for (int i = 1; i < 2 * panels; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

// m-th stationary moment of the scalar age process with reset rate a1*x:
// density proportional to exp(-a1 x^2 / 2) on [0, inf)
inline double stationary_moment(double a1, int m) {
    const double cut = 12.0 / std::sqrt(a1);
    auto w = [a1](double x) { return std::exp(-0.5 * a1 * x * x); };
    const double z = integrate(w, 0.0, cut);
    return integrate([&](double x) { return std::pow(x, m) * w(x); }, 0.0, cut) / z;
}

// mean age of the single-link constant-rate cycle: exp(r) idle, exp(h)
// service, monitor age set to the service duration at delivery. Renewal
// reward over the delivery cycle T = I + S with the previous service age
// carried in: mean = E[S] + E[T^2] / (2 E[T]).
inline double blind_single_link_age(double r, double h) {
    const double et = 1.0 / r + 1.0 / h;
    const double et2 = 2.0 / (r * r) + 2.0 / (r * h) + 2.0 / (h * h);
    return 1.0 / h + et2 / (2.0 * et);
}

// P(T1 < T2) for competing linear hazards a1 (x1 + s), a2 (x2 + s):
// integral of lambda1(s) S1(s) S2(s) ds
inline double linear_hazard_win_prob(double a1, double x1, double a2, double x2) {
    auto surv = [](double a, double x, double s) {
        return std::exp(-a * (x * s + 0.5 * s * s));
    };
    return integrate(
        [&](double s) { return a1 * (x1 + s) * surv(a1, x1, s) * surv(a2, x2, s); }, 0.0,
        50.0 / (1.0 + std::min(a1, a2)), 20000);
}

inline double central_diff(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

} // namespace oracle

#endif
