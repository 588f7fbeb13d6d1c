#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "coefficients.hpp"
#include "core.hpp"
#include "ensembles.hpp"
#include "measure.hpp"
#include "quadrature.hpp"

namespace opuc {

// ------------------------------------------------------------ reports

enum class Status { verified, tolerance_exceeded, lhs_infinite, rhs_infinite };

inline std::string status_name(Status s) {
    switch (s) {
        case Status::verified: return "verified";
        case Status::tolerance_exceeded: return "tolerance_exceeded";
        case Status::lhs_infinite: return "lhs_infinite";
        case Status::rhs_infinite: return "rhs_infinite";
    }
    return "?";
}

struct Outlier {
    double theta = 0.0;
    double weight = 0.0;
    double rate = 0.0;
};

struct RateReport {
    std::string rule;
    std::string label;  // "CONJECTURE" for probes
    double kl_term = 0.0;
    std::vector<Outlier> outlier_plus, outlier_minus;
    double lhs_total = 0.0;
    std::vector<double> rhs_terms;
    std::vector<double> rhs_partial_sums;
    double rhs_tail_bound = 0.0;
    double rhs_total = 0.0;
    double residual = inf;
    double tolerance = 0.0;
    Status status = Status::tolerance_exceeded;
    bool finiteness_agrees = true;
    std::map<std::string, double> diagnostics;
    std::vector<std::string> notes;

    double outlier_sum() const {
        double s = 0.0;
        for (auto& o : outlier_plus) s += o.rate;
        for (auto& o : outlier_minus) s += o.rate;
        return s;
    }

    // fills residual/status from lhs_total and rhs_total
    void settle(double tol) {
        tolerance = tol;
        const bool lf = std::isfinite(lhs_total), rf = std::isfinite(rhs_total);
        finiteness_agrees = (lf == rf);
        if (!lf) {
            status = Status::lhs_infinite;
            residual = rf ? inf : 0.0;
        } else if (!rf) {
            status = Status::rhs_infinite;
            residual = inf;
        } else {
            residual = std::abs(lhs_total - rhs_total);
            status = residual <= tol ? Status::verified : Status::tolerance_exceeded;
        }
    }
};

// ----------------------------------------------------- logarithmic energy

// U(theta) = -int log|e^{i theta} - e^{i phi}| dmu(phi) over the a.c. part,
// split at theta so the log singularity sits at a panel end
inline double log_potential(const CircleMeasure& mu, double theta, double tol = 1e-12) {
    if (!mu.has_density()) return 0.0;
    const double lo = mu.arc_lo, hi = mu.arc_hi;
    const double t = lo + mu.offset(theta);
    // panels parametrized by the distance s from the singular point
    auto panel = [&](double from, double len, double dir) {
        auto f = [&](double s) {
            const double r = 2.0 * std::abs(std::sin(s / 2));
            return r > 0 ? -std::log(r) * mu.density(from + dir * s) : 0.0;
        };
        return quad::tanh_sinh(f, 0.0, len, tol);
    };
    double v = 0.0;
    if (t > lo && t < hi) {
        v = panel(t, t - lo, -1.0) + panel(t, hi - t, 1.0);
    } else {
        // theta off the arc; near-singular behaviour sits at an arc end where
        // the double-exponential nodes cluster
        auto f = [&](double phi) {
            const double r = 2.0 * std::abs(std::sin((theta - phi) / 2));
            return r > 0 ? -std::log(r) * mu.density(phi) : 0.0;
        };
        v = quad::tanh_sinh(f, lo, hi, tol);
    }
    double out = v / two_pi;
    for (const auto& a : mu.atoms) {
        const double s = 2.0 * std::abs(std::sin((theta - a.theta) / 2));
        out += s > 0 ? -a.w * std::log(s) : inf;
    }
    return out;
}

struct EnergyResult {
    double value = 0.0;
    std::string reason;
};

// int V dmu - double integral of log|z - zeta|
inline EnergyResult energy_functional(const CircleMeasure& mu, const std::function<double(double)>& V,
                                      double tol = 1e-10) {
    if (!mu.atoms.empty()) return {inf, "atoms have infinite logarithmic self-energy"};
    if (!mu.has_density()) return {inf, "measure has no density"};
    auto f = [&](double t) {
        const double w = mu.density(t);
        if (w == 0.0) return 0.0;
        return w * (V(t) + log_potential(mu, t, 1e-12));
    };
    return {quad::arc(f, mu.arc_lo, mu.arc_hi, tol) / two_pi, ""};
}

// -------------------------------------------------- effective potentials

enum class EffMethod { direct_double_integral, closed_form_S };

namespace detail {

// the gap of an ensemble as (centre, half-width); half-width 0 when there is
// none
inline std::pair<double, double> gap_of(const EnsembleSpec& e) {
    if (!e.gapped) return {0.0, 0.0};
    if (e.family == Family::HP) return {0.0, e.edge};
    return e.param > 0 ? std::pair{pi, pi - e.edge} : std::pair{0.0, pi - e.edge};
}

inline double signed_offset(double t) {
    t = wrap_angle(t);
    return t > pi ? t - two_pi : t;
}

}  // namespace detail

// J(theta) - 2 xi at a gap point: 2 int S sqrt(-q) from theta out to the
// nearer support edge; 0 on the support
inline double gap_excess(const EnsembleSpec& e, double theta) {
    const auto [c, h] = detail::gap_of(e);
    if (h == 0.0) return 0.0;
    const double delta = std::abs(detail::signed_offset(theta - c));
    if (delta >= h) return 0.0;
    if (e.family == Family::HP && delta == 0.0) return inf;
    auto f = [&](double phi) {
        const double qq = e.q(phi);
        return qq < 0 ? e.S(phi) * std::sqrt(-qq) : 0.0;
    };
    return 2.0 * quad::tanh_sinh(f, c + delta, c + h, 1e-13);
}

inline double effective_potential(double theta, const EnsembleSpec& e, EffMethod method = EffMethod::closed_form_S) {
    if (method == EffMethod::closed_form_S) {
        const double g = gap_excess(e, theta);
        return std::isfinite(g) ? 2.0 * e.xi_effective + g : inf;
    }
    const double v = e.potential(theta);
    if (!std::isfinite(v)) return inf;
    return v + 2.0 * log_potential(e.measure(), theta, 1e-13);
}

// ------------------------------------------------------------ divergence

struct KlOptions {
    double zero_threshold = 1e-300;
    double tol = 1e-10;
};

// int log(d ref/d mu) d ref, ref absolutely continuous; only the a.c. part of
// mu enters
inline double kl_divergence(const CircleMeasure& ref, const CircleMeasure& mu, KlOptions opt = {}) {
    if (!ref.has_density()) throw domain_error("reference measure needs a density");
    bool vanished = false;
    auto f = [&](double t) {
        const double r = ref.density(t);
        if (r <= 0.0) return 0.0;
        const double m = mu.density_at(t);
        if (m < 0.0) throw domain_error("negative density");
        if (m < opt.zero_threshold) {
            vanished = true;
            return 0.0;
        }
        return r * std::log(r / m);
    };
    const double v = quad::arc(f, ref.arc_lo, ref.arc_hi, opt.tol) / two_pi;
    return vanished ? inf : v;
}

// ------------------------------------------------------------ outlier rates

enum class Side { plus, minus };

inline double outlier_rate_hp(double theta, double d, Side side) {
    const EnsembleSpec e = hp_ensemble(d);
    const double t = wrap_angle(theta);
    if (t == 0.0) return inf;
    if (d == 0.0) return inf;  // no gap, nothing outside the support
    const double s = detail::signed_offset(t);
    if (side == Side::minus && !(s > 0 && s <= e.edge)) return inf;
    if (side == Side::plus && !(s < 0 && -s <= e.edge)) return inf;
    return gap_excess(e, t);
}

namespace detail {
// 4 int_1^U sqrt(u^2 - 1) du
inline double gw_primitive(double U) {
    if (U <= 1.0) return 0.0;
    const double r = std::sqrt(U * U - 1.0);
    return 2.0 * (U * r - std::log(U + r));
}
}  // namespace detail

// circle GW; gap around 0 for g < -1 (minus side just above 0), around pi for
// g > 1 (plus side just above theta_g)
inline double outlier_rate_gw(double theta, double g, Side side) {
    if (std::abs(g) <= 1.0) throw domain_error("no outlier regime for |g| <= 1");
    const EnsembleSpec e = gw_ensemble(g);
    const auto [c, h] = detail::gap_of(e);
    const double s = detail::signed_offset(theta - c);
    if (std::abs(s) > h) return inf;
    const bool on_minus = (g < 0) ? s >= 0 : s <= 0;
    if ((side == Side::minus) != on_minus && s != 0.0) return inf;
    const double U = std::sqrt(std::abs(g)) * (g < 0 ? std::abs(std::cos(theta / 2)) : std::abs(std::sin(theta / 2)));
    return detail::gw_primitive(U);
}

// real-line pushforward of GW_{-g}, g > 1, support [-m, m]; the upper limit
// is sqrt(g)|x|/sqrt(1+x^2), which equals 1 at the edge
inline double outlier_rate_gw_real(double x, double g, Side side) {
    if (!(g > 1.0)) throw domain_error("no outlier regime for g <= 1");
    const double m = 1.0 / std::sqrt(g - 1.0);
    if (side == Side::plus && x < m) return inf;
    if (side == Side::minus && x > -m) return inf;
    const double U = std::sqrt(g) * std::abs(x) / std::sqrt(1.0 + x * x);
    return detail::gw_primitive(U);
}

// same rate through the real-line density: 2 int_m^|x| S~ sqrt(xi^2 - m^2)
inline double outlier_rate_gw_real_direct(double x, double g) {
    const double m2 = 1.0 / (g - 1.0), m = std::sqrt(m2);
    if (std::abs(x) <= m) return 0.0;
    auto f = [&](double u) { return 4.0 * std::sqrt(1 + m2) / m2 * std::sqrt(std::max(0.0, u * u - m2)) / sq(1 + u * u); };
    return quad::tanh_sinh(f, m, std::abs(x), 1e-14);
}

// rate of a single atom at theta for ensemble e: 0 on the closed support
inline double outlier_rate(const EnsembleSpec& e, double theta) {
    if (e.in_support(theta)) return 0.0;
    return gap_excess(e, theta);
}

// ------------------------------------------------------ coefficient rates

inline double H_d0(double d) { return (1 + 2 * d) * std::log1p(2 * d) - 2 * (1 + d) * std::log1p(d); }

inline double H_d(cplx gamma, double d) {
    const double r2 = std::norm(gamma);
    if (r2 > 1.0 + 1e-14) throw domain_error("H_d argument outside the closed disk");
    if (r2 >= 1.0) return inf;
    const double lin = (d == 0.0) ? 0.0 : -2.0 * d * std::log(std::abs(1.0 - gamma));
    return -std::log1p(-r2) + lin + H_d0(d);
}

inline double H_gw(double g) {
    if (std::abs(g) > 1.0) throw domain_error("H(g) defined for |g| <= 1");
    const double s = std::sqrt(1.0 - g * g);
    return 1.0 - s + std::log((1.0 + s) / 2.0);
}

inline double h_simon(cplx alpha) {
    const double r2 = std::norm(alpha);
    if (r2 >= 1.0) return inf;
    return -std::log1p(-r2) - r2;
}

struct SeriesResult {
    std::vector<double> terms;
    std::vector<double> partial_sums;
    double tail_bound = 0.0;
    double total = 0.0;  // last partial sum, or +inf when the series diverges
};

inline void accumulate(SeriesResult& s) {
    double acc = 0.0;
    s.partial_sums.clear();
    for (double t : s.terms) s.partial_sums.push_back(acc += t);
}

// sum_k H_d(gamma_k)
inline SeriesResult coefficient_rate_hp(const CoefficientSequence& g, double d) {
    if (g.kind != Kind::deformed) throw domain_error("coefficient_rate_hp needs deformed coefficients");
    SeriesResult s;
    for (const auto& x : g.head) s.terms.push_back(H_d(x, d));
    accumulate(s);
    const double gd = gamma_d(d);
    s.total = s.partial_sums.empty() ? 0.0 : s.partial_sums.back();
    if (g.tail == TailType::none && g.trivial()) {
        s.total = inf;  // |gamma_{n-1}| = 1
        return s;
    }
    if (g.tail == TailType::zero) {
        s.tail_bound = d == 0.0 ? 0.0 : inf;
    } else if (g.tail == TailType::constant) {
        s.tail_bound = std::abs(g.tail_value - gd) < 1e-15 ? 0.0 : inf;
    } else {
        // geometric extrapolation of |gamma_k - gamma_d| over the last 20
        // terms, scaled by the upper quadratic envelope
        const std::size_t n = g.head.size(), k0 = n > 20 ? n - 20 : 0;
        double mx = 0.0, ratio = 0.0;
        for (std::size_t k = k0; k < n; ++k) mx = std::max(mx, std::abs(g.head[k] - gd));
        if (n >= 2 && n - k0 >= 2) {
            const double a = std::abs(g.head[k0] - gd), b = std::abs(g.head[n - 1] - gd);
            ratio = a > 0 ? std::pow(b / a, 1.0 / double(n - 1 - k0)) : 0.0;
        }
        const double C = 1.1 * std::pow(1 + d, 3) / (1 + 2 * d);
        s.tail_bound = ratio < 1.0 ? C * mx * mx * ratio * ratio / (1 - ratio * ratio) : inf;
    }
    if (!std::isfinite(s.tail_bound) && g.tail != TailType::none) s.total = inf;
    return s;
}

// Re(alpha_0 - sum_{k>=1} alpha_k conj(alpha_{k-1})) over the head (the real
// part of the CMV trace)
inline double re_trace_functional(const cvec& a) {
    if (a.empty()) return 0.0;
    cplx s = a[0];
    for (std::size_t k = 1; k < a.size(); ++k) s -= a[k] * std::conj(a[k - 1]);
    return s.real();
}

struct ProbeResult {
    double value = 0.0;
    double tail_term_limit = 0.0;  // per-term limit of the series in the tail
    std::string label = "CONJECTURE";
};

// H(g) - g Re(alpha_0 - sum alpha_k conj alpha_{k-1}) - sum log(1 - |alpha_k|^2)
inline ProbeResult coefficient_rate_gw_probe(const CoefficientSequence& a, double g) {
    if (a.kind != Kind::plain) throw domain_error("GW probe needs plain coefficients");
    ProbeResult r;
    cvec h = a.head;
    double v = H_gw(g) - g * re_trace_functional(h);
    for (auto& x : h) {
        if (std::norm(x) >= 1.0) return {inf, inf, r.label};
        v -= std::log1p(-std::norm(x));
    }
    if (a.tail == TailType::constant && a.tail_value != 0.0) {
        const cplx c = a.tail_value;
        if (!h.empty()) v += g * (c * std::conj(h.back())).real() - std::log1p(-std::norm(c));
        r.tail_term_limit = g * std::norm(c) - std::log1p(-std::norm(c));
        v = r.tail_term_limit > 0 ? inf : (r.tail_term_limit < 0 ? -inf : v);
    } else if (a.tail == TailType::none) {
        r.label += " (truncated)";
    }
    r.value = v;
    return r;
}

// kappa = J(1) - min J for the circle ensemble; +inf for HP
inline double kappa(const EnsembleSpec& e) {
    if (e.family == Family::HP) return e.param == 0.0 ? 0.0 : inf;
    return gap_excess(e, 0.0);
}

// mass-defect term added to a real-line rate
inline double mass_defect_rate(const RealMeasure& mu, const EnsembleSpec& e) {
    if (mu.mass >= 1.0 - 1e-12) return 0.0;
    return kappa(e);
}

// spectral side K(ref | mu) + sum of outlier rates; infinite when the a.c.
// part of mu leaks outside the support of the equilibrium
inline RateReport spectral_rate(const CircleMeasure& mu, const EnsembleSpec& e, KlOptions opt = {}) {
    RateReport r;
    r.rule = "spectral_rate";
    const CircleMeasure ref = e.measure();
    if (mu.has_density() && e.gapped) {
        // sample the a.c. part of mu across the gap
        const auto [c, h] = detail::gap_of(e);
        for (int i = 1; i < 400; ++i) {
            const double t = c - h + 2 * h * i / 400.0;
            if (!e.in_support(t) && mu.density_at(t) > 1e-12) {
                r.lhs_total = inf;
                r.kl_term = inf;
                r.diagnostics["in_S1T"] = 0.0;
                r.notes.push_back("absolutely continuous part outside the support arc");
                return r;
            }
        }
    }
    r.diagnostics["in_S1T"] = 1.0;
    r.kl_term = kl_divergence(ref, mu, opt);
    for (const auto& a : mu.atoms) {
        if (e.in_support(a.theta)) continue;
        const double rate = outlier_rate(e, a.theta);
        const auto [c, h] = detail::gap_of(e);
        const double s = detail::signed_offset(a.theta - c);
        // minus side: counterclockwise from the gap centre (clockwise for GW g > 1)
        const bool minus = (e.family == Family::GW && e.param > 0) ? s < 0 : s > 0;
        (minus ? r.outlier_minus : r.outlier_plus).push_back({a.theta, a.w, rate});
    }
    r.lhs_total = r.kl_term + r.outlier_sum();
    return r;
}

}  // namespace opuc
