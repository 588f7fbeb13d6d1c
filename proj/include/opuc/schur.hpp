#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "cmv.hpp"
#include "coefficients.hpp"
#include "core.hpp"
#include "measure.hpp"

namespace opuc {

enum class SchurTail { zero, geronimus };

// Schur function with Schur parameters alpha_0, alpha_1, ... and, past the
// head, either zeros or a constant parameter c (Geronimus tail).
struct SchurFunction {
    cvec head;
    SchurTail tail = SchurTail::zero;
    cplx c = 0.0;

    static SchurFunction from(const CoefficientSequence& a) {
        if (a.kind != Kind::plain) throw domain_error("Schur function needs plain coefficients");
        SchurFunction f;
        f.head = a.head;
        for (auto& x : f.head)
            if (!(std::abs(x) < 1.0)) throw domain_error("Schur parameters must lie in the open disk");
        if (a.tail == TailType::constant && a.tail_value != 0.0) {
            f.tail = SchurTail::geronimus;
            f.c = a.tail_value;
        } else if (a.tail == TailType::none) {
            throw domain_error("Schur function needs a zero or constant tail");
        }
        return f;
    }

    // half-width of the gap around angle 0 carried by the tail
    double gap_half_width() const {
        return tail == SchurTail::geronimus ? 2.0 * std::asin(std::min(1.0, std::abs(c))) : 0.0;
    }

    double arc_lo() const { return gap_half_width(); }
    double arc_hi() const { return two_pi - gap_half_width(); }
};

namespace detail {

// root of conj(c) z f^2 + (1 - z) f - c = 0 written as 2c/((1-z) + s),
// s = +-sqrt((1-z)^2 + 4|c|^2 z); the sign with the larger denominator is the
// root inside the disk when |z| < 1.
inline cplx geronimus_root(cplx c, cplx z, bool larger) {
    const cplx b = 1.0 - z;
    const cplx s = std::sqrt(b * b + 4.0 * std::norm(c) * z);
    const cplx d1 = b + s, d2 = b - s;
    const bool first = (std::abs(d1) >= std::abs(d2)) == larger;
    return 2.0 * c / (first ? d1 : d2);
}

inline cplx tail_value(const SchurFunction& f, cplx z) {
    if (f.tail == SchurTail::zero || f.c == 0.0) return 0.0;
    return geronimus_root(f.c, z, true);
}

// boundary value of the tail on |z| = 1; inside the support arc the roots
// differ in modulus and the inner one is the radial limit, in the gap both
// are unimodular and the branch is chosen by continuity from r = 1 - 1e-7
inline cplx tail_boundary(const SchurFunction& f, double theta) {
    if (f.tail == SchurTail::zero || f.c == 0.0) return 0.0;
    const cplx z = unit(theta);
    const double s2 = sq(std::sin(theta / 2));
    if (s2 > std::norm(f.c)) return geronimus_root(f.c, z, true);
    const cplx ref = geronimus_root(f.c, (1.0 - 1e-7) * z, true);
    const cplx r1 = geronimus_root(f.c, z, true), r2 = geronimus_root(f.c, z, false);
    return std::abs(r1 - ref) <= std::abs(r2 - ref) ? r1 : r2;
}

inline cplx unwind(const SchurFunction& f, cplx z, cplx ft) {
    for (std::size_t j = f.head.size(); j-- > 0;) {
        const cplx a = f.head[j];
        const cplx w = z * ft;
        ft = (w + a) / (1.0 + std::conj(a) * w);
    }
    return ft;
}

}  // namespace detail

// f_j = T_{-alpha_j}(z f_{j+1}), T_{-a}(w) = (w + a)/(1 + conj(a) w)
inline cplx schur_eval(const SchurFunction& f, cplx z) {
    if (!(std::abs(z) < 1.0)) throw domain_error("Schur function evaluated outside the open disk");
    return detail::unwind(f, z, detail::tail_value(f, z));
}

// unimodular-z evaluation with the radial-limit branch of the tail
inline cplx schur_boundary(const SchurFunction& f, double theta) {
    return detail::unwind(f, unit(theta), detail::tail_boundary(f, theta));
}

inline cplx caratheodory(const SchurFunction& f, cplx z) {
    const cplx w = z * schur_eval(f, z);
    return (1.0 + w) / (1.0 - w);
}

// density of the a.c. part w.r.t. dtheta/2pi: Re F on the boundary,
// (1 - |zf|^2)/|1 - zf|^2
inline double caratheodory_density(const SchurFunction& f, double theta) {
    if (f.tail == SchurTail::geronimus && sq(std::sin(theta / 2)) <= std::norm(f.c)) return 0.0;
    const cplx w = unit(theta) * schur_boundary(f, theta);
    const double num = 1.0 - std::norm(w);
    const double den = std::norm(1.0 - w);
    if (num <= 0.0 || den == 0.0) return 0.0;
    return num / den;
}

struct RadialLimit {
    double value = 0.0;
    double change = 0.0;  // last Richardson correction, a convergence proxy
    bool converged = false;
};

// lim_{r -> 1} (1 - r)/2 Re F(r e^{i theta}), r_j = 1 - 2^-j, j = 8..20,
// Richardson extrapolation in h = 1 - r
inline RadialLimit atom_mass_detail(const SchurFunction& f, double theta) {
    std::vector<double> v;
    for (int j = 8; j <= 20; ++j) {
        const double h = std::ldexp(1.0, -j);
        const cplx F = caratheodory(f, (1.0 - h) * unit(theta));
        v.push_back(0.5 * h * F.real());
    }
    // table T[i][k]: k-th extrapolation from the samples ending at i
    const std::size_t n = v.size();
    std::vector<std::vector<double>> T(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        T[i][0] = v[i];
        for (std::size_t k = 1; k <= i; ++k) {
            const double p = std::ldexp(1.0, static_cast<int>(k));
            T[i][k] = T[i][k - 1] + (T[i][k - 1] - T[i - 1][k - 1]) / (p - 1.0);
        }
    }
    const std::size_t depth = std::min<std::size_t>(4, n - 1);
    RadialLimit out;
    out.value = std::max(0.0, T[n - 1][depth]);
    out.change = std::abs(T[n - 1][depth] - T[n - 2][depth]);
    out.converged = out.change <= 1e-8 + 1e-4 * out.value;
    return out;
}

inline double atom_mass(const SchurFunction& f, double theta) {
    auto r = atom_mass_detail(f, theta);
    if (!r.converged) throw numeric_error("radial limit did not converge at theta = " + std::to_string(theta));
    return r.value;
}

struct AtomDetection {
    std::vector<Atom> atoms;
    std::vector<double> candidates;  // eigenangles flagged by the truncation
    std::vector<double> rejected;    // candidates with no boundary root / no mass
    std::size_t scan_hits = 0;       // roots found only by the phase scan
};

namespace detail {

// signed angle in (-pi, pi]
inline double signed_angle(double t) {
    t = wrap_angle(t);
    return t > pi ? t - two_pi : t;
}

// upward zero crossings of arg(z f(z)) across the gap (-gap, gap).  On the
// gap z f is unimodular and its argument increases, so every crossing not
// adjacent to the +-pi wrap is an atom.  Grid is uniform in the middle and
// geometric toward both edges.
inline std::vector<std::pair<double, double>> phase_brackets(const SchurFunction& f, double gap) {
    std::vector<double> g;
    const int mid = 2048, edge = 40;
    for (int k = edge; k >= 1; --k) g.push_back(-gap + gap * std::ldexp(1.0, -k));
    for (int i = 1; i < mid; ++i) g.push_back(-gap + 2 * gap * i / mid);
    for (int k = 1; k <= edge; ++k) g.push_back(gap - gap * std::ldexp(1.0, -k));
    std::sort(g.begin(), g.end());
    std::vector<std::pair<double, double>> out;
    double pt = g[0], pv = std::arg(unit(g[0]) * schur_boundary(f, g[0]));
    for (std::size_t i = 1; i < g.size(); ++i) {
        const double v = std::arg(unit(g[i]) * schur_boundary(f, g[i]));
        if (pv < 0 && v >= 0 && pv > -1.0 && v < 1.0) out.push_back({pt, g[i]});
        pt = g[i], pv = v;
    }
    return out;
}

}  // namespace detail

// Candidates: eigenvalues of the N x N truncated CMV matrix (tail extended,
// final coefficient c/|c|) further than 2pi/N from the support arc.  Atoms hugging
// an edge fall inside that margin, so the gap is also scanned for zeros of
// arg(z f(z)) directly.  Each root is bisected and kept when its radial mass
// limit exceeds min_mass.
inline AtomDetection detect_atoms(const SchurFunction& f, std::size_t N = 256, double min_mass = 1e-10) {
    AtomDetection out;
    if (f.tail == SchurTail::zero || f.c == 0.0) {
        // zero tail: Bernstein-Szego class, a.c. with positive density
        return out;
    }
    const double gap = f.gap_half_width();
    CoefficientSequence a = plain(f.head, TailType::constant, f.c);
    cvec coeffs(N);
    for (std::size_t k = 0; k + 1 < N; ++k) coeffs[k] = a.at(k);
    coeffs[N - 1] = f.c / std::abs(f.c);  // closing along the tail keeps the gap free of spurious eigenvalues
    const auto angles = eigenangles(cmv_assemble(plain(coeffs, TailType::none), N).dense());
    const double margin = two_pi / static_cast<double>(N);
    for (double t : angles)
        if (std::abs(detail::signed_angle(t)) < gap - margin) out.candidates.push_back(t);

    auto phase = [&](double t) { return std::arg(unit(t) * schur_boundary(f, t)); };
    const auto brackets = detail::phase_brackets(f, gap);
    std::vector<bool> matched(out.candidates.size(), false);
    for (auto [lo, hi] : brackets) {
        for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
            const double m = 0.5 * (lo + hi);
            if (phase(m) < 0) lo = m; else hi = m;
        }
        const double root = 0.5 * (lo + hi);
        bool seen = false;
        for (std::size_t i = 0; i < out.candidates.size(); ++i)
            if (std::abs(detail::signed_angle(out.candidates[i] - root)) < 4 * margin) matched[i] = seen = true;
        const auto r = atom_mass_detail(f, root);
        if (r.value > min_mass) {
            out.atoms.push_back({wrap_angle(root), r.value});
            if (!seen) ++out.scan_hits;
        }
    }
    for (std::size_t i = 0; i < out.candidates.size(); ++i)
        if (!matched[i]) out.rejected.push_back(out.candidates[i]);
    std::sort(out.atoms.begin(), out.atoms.end(), [](const Atom& x, const Atom& y) { return x.theta < y.theta; });
    return out;
}

// measure of a Schur function: boundary density on the support arc plus the
// detected atoms
inline CircleMeasure measure_from_schur(const SchurFunction& f, std::size_t N = 256) {
    CircleMeasure mu;
    mu.arc_lo = f.arc_lo();
    mu.arc_hi = f.arc_hi();
    mu.density = [f](double t) { return caratheodory_density(f, t); };
    mu.atoms = detect_atoms(f, N).atoms;
    return mu;
}

// b_k = phi_k(1)/phi_k*(1), the inverse Schur iterates at z = 1
inline cvec inverse_schur_iterates(const cvec& alphas) {
    cvec b{1.0};
    for (std::size_t k = 0; k < alphas.size(); ++k) {
        const cplx a = alphas[k], p = b.back();
        b.push_back((p - std::conj(a)) / (1.0 - a * p));
    }
    return b;
}

}  // namespace opuc
