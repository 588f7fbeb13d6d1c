#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>

#include "core.hpp"

namespace opuc::quad {

inline constexpr double default_tol = 1e-10;

// Adaptive Gauss-Kronrod.  Boost treats tol as relative to the L1 norm, which
// for the O(1) integrals here is the same scale as an absolute tolerance.
template <class F>
double gk(F&& f, double a, double b, double tol = default_tol, double* err = nullptr) {
    double e = 0.0;
    double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 12, tol, &e);
    if (err) *err = e;
    return v;
}

// Integral over [lo, hi] of an integrand with square-root behaviour at both
// ends.  theta = mid + half*sin(phi) turns sqrt(hi - theta) into a smooth
// function of phi.
template <class F>
double arc(F&& f, double lo, double hi, double tol = default_tol, double* err = nullptr) {
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    auto g = [&](double phi) { return f(mid + half * std::sin(phi)) * half * std::cos(phi); };
    return gk(g, -pi / 2, pi / 2, tol, err);
}

// Double-exponential rule; tolerates integrable endpoint singularities
// (logarithms, inverse square roots).
inline boost::math::quadrature::tanh_sinh<double>& ts_engine() {
    thread_local boost::math::quadrature::tanh_sinh<double> engine(15);
    return engine;
}

template <class F>
double tanh_sinh(F&& f, double a, double b, double tol = 1e-12, double* err = nullptr) {
    if (!(b > a)) return 0.0;
    double e = 0.0;
    // two-argument form: boost then tolerates abscissas rounding onto an end
    auto g = [&](double x, double) { return f(x); };
    double v = ts_engine().integrate(g, a, b, tol, &e);
    if (err) *err = e;
    return v;
}

}  // namespace opuc::quad
