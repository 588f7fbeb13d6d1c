#pragma once

#include <array>
#include <functional>
#include <limits>
#include <optional>
#include <string>

#include "coefficients.hpp"
#include "core.hpp"
#include "measure.hpp"

namespace opuc {

enum class Family { GW, HP };

inline std::string family_name(Family f) { return f == Family::GW ? "gw" : "hp"; }

// Equilibrium data of one circular ensemble.  Off the support the density
// continues as (1/pi) S(phi) sqrt(q(phi)) per dtheta with q < 0; that pair is
// what the closed-form effective potential integrates.
struct EnsembleSpec {
    Family family = Family::HP;
    double param = 0.0;
    double edge = 0.0;          // theta_d or theta_g (0 when ungapped)
    double arc_lo = 0.0, arc_hi = two_pi;
    double F = 0.0, xi = 0.0;   // free energy, modified Robin constant
    // value of J/2 on the support; differs from xi only for ungapped GW
    double xi_effective = 0.0;
    bool gapped = false;

    double potential(double theta) const {
        if (family == Family::GW) return -param * std::cos(theta);
        const double s = 2.0 * std::abs(std::sin(theta / 2));
        if (param == 0.0) return 0.0;
        return s == 0.0 ? inf : -2.0 * param * std::log(s);
    }

    double S(double phi) const {
        if (family == Family::HP) return (1.0 + param) / (2.0 * std::abs(std::sin(phi / 2)));
        return param > 0 ? param * std::abs(std::cos(phi / 2)) : -param * std::abs(std::sin(phi / 2));
    }
    double q(double phi) const {
        const double s2 = sq(std::sin(phi / 2));
        if (family == Family::HP) return s2 - sq(std::sin(edge / 2));
        if (!gapped) return 1.0;
        return param > 0 ? sq(std::sin(edge / 2)) - s2 : s2 - sq(std::cos(edge / 2));
    }

    // density w.r.t. dtheta/2pi
    double density(double theta) const {
        if (family == Family::GW && !gapped) return 1.0 + param * std::cos(theta);
        if (family == Family::HP && param == 0.0) return 1.0;
        const double qq = q(theta);
        return qq > 0.0 ? 2.0 * S(theta) * std::sqrt(qq) : 0.0;
    }

    CircleMeasure measure() const {
        CircleMeasure mu;
        mu.arc_lo = arc_lo;
        mu.arc_hi = arc_hi;
        const EnsembleSpec self = *this;
        mu.density = [self](double t) { return self.density(t); };
        return mu;
    }

    // angle of the point 1 is always in the gap for HP and GW(g > 1)
    bool in_support(double theta) const { return measure().in_closed_arc(theta); }
};

// ------------------------------------------------------------- Gross-Witten

inline std::pair<double, double> gw_constants(double g) {
    const double a = std::abs(g);
    if (a <= 1.0) return {g * g / 2, g * g / 4};
    return {-a + 0.5 * std::log(a) + 0.75, 0.5 * (std::log(a) - a + 1.0)};
}

inline EnsembleSpec gw_ensemble(double g) {
    if (!std::isfinite(g)) throw domain_error("GW parameter must be finite");
    EnsembleSpec e;
    e.family = Family::GW;
    e.param = g;
    std::tie(e.F, e.xi) = gw_constants(g);
    if (std::abs(g) <= 1.0) {
        e.xi_effective = 0.0;
        return e;
    }
    e.gapped = true;
    e.edge = 2.0 * std::asin(1.0 / std::sqrt(std::abs(g)));
    e.xi_effective = e.xi;
    if (g > 1) {
        // [-theta_g, theta_g] stored past 2pi
        e.arc_lo = two_pi - e.edge;
        e.arc_hi = two_pi + e.edge;
    } else {
        e.arc_lo = pi - e.edge;
        e.arc_hi = pi + e.edge;
    }
    return e;
}

inline CircleMeasure gw_equilibrium(double g) { return gw_ensemble(g).measure(); }

// closed-form coefficients of the ungapped equilibrium
inline cplx gw_equilibrium_alphas(double g, int k) {
    if (k < 0) throw domain_error("negative index");
    if (std::abs(g) > 1.0) throw domain_error("no closed form for |g| > 1");
    if (g == 0.0) return 0.0;
    if (std::abs(g) == 1.0) return -std::pow(-g, k + 1) / (k + 2);
    // x^2 + (2/g) x + 1 = 0; xm is the root outside the unit disk
    const double b = 1.0 / g, disc = std::sqrt(b * b - 1.0);
    const double xm = (g > 0) ? -b - disc : -b + disc;
    const double xp = 1.0 / xm;
    const double r = xp / xm;
    const double num = -(xp - xm) * std::pow(1.0 / xm, k + 2);
    return num / (std::pow(r, k + 2) - 1.0);
}

// ------------------------------------------------------------- Hua-Pickrell

inline std::pair<double, double> hp_constants(double d) {
    if (d < 0) throw domain_error("HP parameter must be nonnegative");
    const double dl = d > 0 ? d * d * std::log(d) : 0.0;
    const double F = sq(1 + d) * std::log1p(d) + dl - 0.5 * sq(1 + 2 * d) * std::log1p(2 * d) + 2 * d * d * std::log(2.0);
    const double xi = (1 + d) * std::log1p(d) - 0.5 * (1 + 2 * d) * std::log1p(2 * d);
    return {F, xi};
}

inline double gamma_d(double d) { return -d / (1.0 + d); }

inline EnsembleSpec hp_ensemble(double d) {
    if (!(d >= 0.0) || !std::isfinite(d)) throw domain_error("HP parameter must be nonnegative");
    EnsembleSpec e;
    e.family = Family::HP;
    e.param = d;
    std::tie(e.F, e.xi) = hp_constants(d);
    e.xi_effective = e.xi;
    if (d == 0.0) return e;
    e.gapped = true;
    e.edge = 2.0 * std::asin(d / (1.0 + d));
    e.arc_lo = e.edge;
    e.arc_hi = two_pi - e.edge;
    return e;
}

inline CircleMeasure hp_equilibrium(double d) { return hp_ensemble(d).measure(); }

inline EnsembleSpec make_ensemble(Family f, double p) { return f == Family::GW ? gw_ensemble(p) : hp_ensemble(p); }

// ------------------------------------------------------------- Cayley map

// tau(z) = i(1+z)/(1-z); on the circle x = -cot(theta/2).  The point 1 goes
// to infinity, reported as nullopt.
inline std::optional<double> cayley_point(double theta) {
    const double t = wrap_angle(theta);
    if (t == 0.0) return std::nullopt;
    return -std::cos(t / 2) / std::sin(t / 2);
}

inline cplx cayley_point(cplx z) {
    if (z == 1.0) throw domain_error("Cayley transform of 1 is the point at infinity");
    return I * (1.0 + z) / (1.0 - z);
}

// angle in (0, 2pi) of tau^{-1}(x)
inline double cayley_inverse(double x) { return pi + 2.0 * std::atan(x); }

struct RealMeasure {
    std::function<double(double)> density;  // w.r.t. dx
    std::vector<std::pair<double, double>> atoms;
    double endpoint = inf;  // support [-endpoint, endpoint]; inf for the whole line
    double mass = 1.0;
};

// dtheta = 2 dx/(1 + x^2); the atom at angle 0 is dropped
inline RealMeasure cayley_pushforward(const CircleMeasure& mu) {
    RealMeasure r;
    if (mu.has_density()) {
        const CircleMeasure m = mu;
        r.density = [m](double x) { return m.density_at(cayley_inverse(x)) / pi / (1.0 + x * x); };
    }
    r.mass = mu.total_mass();
    for (const auto& a : mu.atoms) {
        auto x = cayley_point(a.theta);
        if (x)
            r.atoms.push_back({*x, a.w});
        else
            r.mass -= a.w;
    }
    return r;
}

struct RealPotential {
    std::function<double(double)> V;  // transferred potential plus additive_constant
    double additive_constant = 0.0;
};

// V(x) = calV(tau^{-1}(x)) + log(1 + x^2) + c
inline RealPotential potential_transfer(std::function<double(double)> circle_potential, double c = 0.0) {
    RealPotential p;
    p.additive_constant = c;
    p.V = [cp = std::move(circle_potential), c](double x) { return cp(cayley_inverse(x)) + std::log1p(x * x) + c; };
    return p;
}

// inverse of potential_transfer at angle theta != 0
inline double potential_untransfer(const RealPotential& p, double theta) {
    const auto x = cayley_point(theta);
    if (!x) throw domain_error("angle 0 has no real preimage");
    return p.V(*x) - std::log1p(*x * *x) - p.additive_constant;
}

enum class RealFamily { GWreal, HPreal };

struct RealEnsembleSpec {
    RealFamily family = RealFamily::HPreal;
    double param = 0.0;
    double endpoint = inf;  // p for HP, m for gapped GW
    RealPotential potential;
    std::function<double(double)> density;
    std::optional<double> F_tilde, xi_tilde;  // displayed constants, HP only
    // Jacobi coefficients a_1, a_k (k > 1), b_1, b_k (k > 1), HP only
    std::optional<std::array<double, 4>> jacobi;
};

// GWreal(g) is the pushforward of GW_{-g}, g >= 0
inline RealEnsembleSpec real_ensembles(RealFamily fam, double param) {
    RealEnsembleSpec r;
    r.family = fam;
    r.param = param;
    if (fam == RealFamily::GWreal) {
        const double g = param;
        if (!(g >= 0.0)) throw domain_error("real GW ensemble requires g >= 0");
        r.potential.V = [g](double x) { return g * (x * x - 1) / (x * x + 1) + std::log1p(x * x); };
        if (g <= 1.0) {
            r.density = [g](double x) { return ((1 - g) * x * x + 1 + g) / (pi * sq(x * x + 1)); };
        } else {
            const double m2 = 1.0 / (g - 1.0), m = std::sqrt(m2);
            r.endpoint = m;
            r.density = [m2, m](double x) {
                if (std::abs(x) >= m) return 0.0;
                return 2.0 * std::sqrt(1 + m2) / (pi * m2) * std::sqrt(m2 - x * x) / sq(1 + x * x);
            };
        }
        return r;
    }
    const double d = param;
    if (!(d >= 0.0)) throw domain_error("real HP ensemble requires d >= 0");
    // displayed form (1+d) log(1+x^2); the transfer of -2d log|1-z| differs by 2d log 2
    r.potential.V = [d](double x) { return (1 + d) * std::log1p(x * x); };
    r.potential.additive_constant = 2 * d * std::log(2.0);
    if (d == 0.0) {
        r.density = [](double x) { return 1.0 / (pi * (1 + x * x)); };
    } else {
        const double p2 = (1 + 2 * d) / (d * d), p = std::sqrt(p2);
        r.endpoint = p;
        const double c = 1.0 / (pi * (std::sqrt(1 + p2) - 1));
        r.density = [p, p2, c](double x) { return std::abs(x) >= p ? 0.0 : c * std::sqrt(p2 - x * x) / (1 + x * x); };
    }
    const double dl = d > 0 ? d * std::log(d) : 0.0;
    r.F_tilde = sq(1 + d) * std::log1p(d) + d * dl - 0.5 * sq(1 + 2 * d) * std::log1p(2 * d) + (2 * d * d - 1) * std::log(2.0);
    r.xi_tilde = (d + 0.5) * std::log1p(2 * d) - dl - (1 + 2 * d) * std::log(2.0);
    r.jacobi = std::array<double, 4>{std::sqrt(2 * (1 + 2 * d) / std::pow(1 + d, 3)), (1 + 2 * d) / sq(1 + d),
                                     -2 * d / (1 + d), -2 * d * d / sq(1 + d)};
    return r;
}

}  // namespace opuc
