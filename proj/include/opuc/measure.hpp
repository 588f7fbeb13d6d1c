#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include "core.hpp"
#include "quadrature.hpp"

namespace opuc {

struct Atom {
    double theta = 0.0;
    double w = 0.0;
};

// Measure on the unit circle: density w.r.t. dtheta/2pi carried by the arc
// [arc_lo, arc_hi] plus finitely many atoms.  arc_lo lies in [0, 2pi) and
// arc_hi in (arc_lo, arc_lo + 2pi], so an arc may straddle the angle 0; the
// density evaluator must then accept angles above 2pi (it is read
// periodically).
struct CircleMeasure {
    double arc_lo = 0.0;
    double arc_hi = two_pi;
    std::function<double(double)> density;
    std::vector<Atom> atoms;

    bool has_density() const { return static_cast<bool>(density); }
    bool full_circle() const { return arc_hi - arc_lo >= two_pi * (1.0 - 1e-15); }
    double arc_length() const { return arc_hi - arc_lo; }

    // offset of theta from arc_lo, in [0, 2pi)
    double offset(double theta) const { return wrap_angle(theta - arc_lo); }

    bool in_open_arc(double theta) const {
        if (full_circle()) return true;
        const double t = offset(theta);
        return t > 0.0 && t < arc_length();
    }
    bool in_closed_arc(double theta) const {
        if (full_circle()) return true;
        const double t = offset(theta);
        return t <= arc_length() || t >= two_pi - 1e-15;
    }

    // angular distance from theta to the closed arc (0 inside)
    double distance_to_arc(double theta) const {
        if (in_closed_arc(theta)) return 0.0;
        const double t = offset(theta);
        return std::min(t - arc_length(), two_pi - t);
    }

    double density_at(double theta) const {
        if (!has_density() || !in_closed_arc(theta)) return 0.0;
        return density(arc_lo + offset(theta));
    }

    double ac_mass(double tol = quad::default_tol) const {
        if (!has_density()) return 0.0;
        return quad::arc([&](double t) { return density(t); }, arc_lo, arc_hi, tol) / two_pi;
    }

    double atom_mass() const {
        double s = 0.0;
        for (const auto& a : atoms) s += a.w;
        return s;
    }

    double total_mass(double tol = quad::default_tol) const { return ac_mass(tol) + atom_mass(); }

    void validate() const {
        if (!(arc_lo >= 0.0 && arc_lo < two_pi && arc_hi > arc_lo && arc_hi <= arc_lo + two_pi + 1e-12))
            throw domain_error("arc endpoints out of range");
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            if (!(atoms[i].w > 0.0)) throw domain_error("atom weight must be positive");
            for (std::size_t j = 0; j < i; ++j)
                if (wrap_angle(atoms[i].theta) == wrap_angle(atoms[j].theta))
                    throw domain_error("duplicate atom angle");
        }
    }
};

inline CircleMeasure uniform_measure() {
    CircleMeasure m;
    m.density = [](double) { return 1.0; };
    return m;
}

// int z^k dmu
inline cplx moments_of_measure(const CircleMeasure& mu, int k, double tol = 1e-12) {
    if (k < 0) throw domain_error("moment order must be nonnegative");
    if (k == 0) return mu.total_mass(tol);
    cplx s = 0.0;
    if (mu.has_density()) {
        const double kk = k;
        double re = quad::arc([&](double t) { return mu.density(t) * std::cos(kk * t); }, mu.arc_lo, mu.arc_hi, tol);
        double im = quad::arc([&](double t) { return mu.density(t) * std::sin(kk * t); }, mu.arc_lo, mu.arc_hi, tol);
        s = cplx(re, im) / two_pi;
    }
    for (const auto& a : mu.atoms) s += a.w * unit(k * a.theta);
    return s;
}

// m_1 .. m_kmax
inline cvec moment_list(const CircleMeasure& mu, int kmax, double tol = 1e-12) {
    cvec out;
    for (int k = 1; k <= kmax; ++k) out.push_back(moments_of_measure(mu, k, tol));
    return out;
}

}  // namespace opuc
