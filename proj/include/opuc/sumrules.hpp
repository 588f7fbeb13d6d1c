#pragma once

#include <atomic>
#include <functional>
#include <optional>
#include <thread>
#include <vector>

#include "cmv.hpp"
#include "coefficients.hpp"
#include "ensembles.hpp"
#include "measure.hpp"
#include "rates.hpp"
#include "schur.hpp"

namespace opuc {

// A measure given either by its coefficients or by density + atoms.
struct MeasureSpec {
    std::optional<CoefficientSequence> coeffs;
    std::optional<CircleMeasure> measure;
    std::size_t moment_count = 128;  // coefficients extracted from a density spec

    static MeasureSpec from(CoefficientSequence c) { return {std::move(c), std::nullopt}; }
    static MeasureSpec from(CircleMeasure m) { return {std::nullopt, std::move(m)}; }
};

inline CoefficientSequence as_plain(const CoefficientSequence& c) {
    return c.kind == Kind::plain ? c : alphas_from_deformed(c);
}
inline CoefficientSequence as_deformed(const CoefficientSequence& c) {
    return c.kind == Kind::deformed ? c : deformed_from_alphas(c);
}

// Verblunsky coefficients of a density spec from its moments.  The forward
// recursion amplifies moment errors geometrically when mu has a gap, so it
// is rerun on moments perturbed at the 1e-12 level and only the prefix on
// which both runs agree to `agree` is kept.
inline CoefficientSequence coefficients_of(const CircleMeasure& mu, std::size_t count, double agree = 1e-9) {
    const double m0 = mu.total_mass(1e-13);
    cvec m = moment_list(mu, static_cast<int>(count), 1e-13);
    for (auto& x : m) x /= m0;
    cvec mp = m;
    for (std::size_t j = 0; j < mp.size(); ++j) mp[j] += 1e-12 * unit(2.4 * double(j + 1));
    CoefficientSequence a = verblunsky_from_moments(m, count, true);
    const CoefficientSequence b = verblunsky_from_moments(mp, count, true);
    std::size_t keep = 0;
    while (keep < a.head.size() && keep < b.head.size() && std::abs(a.head[keep] - b.head[keep]) <= agree) ++keep;
    a.head.resize(keep);
    return a;
}

// measure of a coefficient sequence: Caratheodory density + detected atoms
inline CircleMeasure reconstruct(const CoefficientSequence& c, AtomDetection* det = nullptr) {
    const SchurFunction f = SchurFunction::from(as_plain(c));
    CircleMeasure mu;
    mu.arc_lo = f.arc_lo();
    mu.arc_hi = f.arc_hi();
    mu.density = [f](double t) { return caratheodory_density(f, t); };
    AtomDetection d = detect_atoms(f);
    mu.atoms = d.atoms;
    if (det) *det = std::move(d);
    return mu;
}

namespace detail {

inline void fill_series(RateReport& r, const SeriesResult& s) {
    r.rhs_terms = s.terms;
    r.rhs_partial_sums = s.partial_sums;
    r.rhs_tail_bound = s.tail_bound;
    r.rhs_total = std::isfinite(s.total) ? s.total + (std::isfinite(s.tail_bound) ? 0.0 : inf) : inf;
}

// geometric extrapolation of a nonnegative term sequence; +inf when the terms
// do not decay
inline double geometric_tail(const std::vector<double>& t) {
    const std::size_t n = t.size();
    if (n < 4) return 0.0;
    const std::size_t k0 = n > 20 ? n - 20 : 0;
    const double a = std::abs(t[k0]), b = std::abs(t[n - 1]);
    if (b < 1e-14) return 0.0;  // noise floor
    if (a == 0.0) return inf;
    const double r = std::pow(b / a, 1.0 / double(n - 1 - k0));
    return r < 1.0 ? b * r / (1.0 - r) : inf;
}

// power-law extrapolation t_k ~ C k^-p fitted over the second half;
// sum_{k>n} C k^-p ~ C (n + 1/2)^{1-p}/(p-1).  +inf when p <= 1.
inline double power_tail(const std::vector<double>& t) {
    const std::size_t n = t.size();
    if (n < 8) return 0.0;
    // terms at the moment-extraction noise floor carry no information
    if (std::abs(t[n - 1]) < 1e-14) return 0.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (std::size_t k = n / 2; k < n; ++k) {
        if (!(std::abs(t[k]) > 0.0)) continue;
        const double x = std::log(double(k)), y = std::log(std::abs(t[k]));
        sx += x, sy += y, sxx += x * x, sxy += x * y, ++m;
    }
    if (m < 3) return 0.0;
    const double p = -(m * sxy - sx * sy) / (m * sxx - sx * sx);
    if (!(p > 1.0)) return inf;
    const double C = std::abs(t[n - 1]) * std::pow(double(n - 1), p);
    return C * std::pow(n - 0.5, 1.0 - p) / (p - 1.0);
}

}  // namespace detail

// ------------------------------------------------------- Szego-Verblunsky

// K(UNIF | mu) = -sum log(1 - |alpha_k|^2)
inline RateReport verify_szego_verblunsky(const MeasureSpec& spec, double tol = 1e-6, KlOptions kl = {}) {
    RateReport r;
    r.rule = "sv";
    SeriesResult s;
    CircleMeasure mu;
    if (spec.coeffs) {
        const CoefficientSequence a = as_plain(*spec.coeffs);
        a.validate();
        if (a.trivial()) {
            r.lhs_total = r.kl_term = inf;
            r.rhs_total = inf;
            r.notes.push_back("finitely supported measure: both sides infinite");
            r.settle(tol);
            r.status = Status::rhs_infinite;
            return r;
        }
        for (auto& x : a.head) s.terms.push_back(-std::log1p(-std::norm(x)));
        accumulate(s);
        s.total = s.partial_sums.empty() ? 0.0 : s.partial_sums.back();
        if (a.tail == TailType::constant && a.tail_value != 0.0) s.tail_bound = inf;
        mu = reconstruct(a);
    } else if (spec.measure) {
        mu = *spec.measure;
        const CoefficientSequence a = coefficients_of(mu, spec.moment_count);
        for (auto& x : a.head) s.terms.push_back(-std::log1p(-std::norm(x)));
        accumulate(s);
        s.total = s.partial_sums.back();
        s.tail_bound = detail::geometric_tail(s.terms);
    } else {
        throw domain_error("empty measure spec");
    }
    detail::fill_series(r, s);
    r.kl_term = kl_divergence(uniform_measure(), mu, kl);
    r.lhs_total = r.kl_term;
    r.diagnostics["lhs_kl"] = r.kl_term;
    r.settle(tol);
    return r;
}

// ------------------------------------------------------------ Hua-Pickrell

// K(HP_d | mu) + sum F+ + sum F- = sum H_d(gamma_k)
inline RateReport verify_hp(const MeasureSpec& spec, double d, double tol = 1e-4, KlOptions kl = {}) {
    if (!(d >= 0.0)) throw domain_error("HP parameter must be nonnegative");
    if (d == 0.0) {
        RateReport r = verify_szego_verblunsky(spec, tol, kl);
        r.rule = "hp";
        return r;
    }
    RateReport r;
    r.rule = "hp";
    const EnsembleSpec e = hp_ensemble(d);
    CircleMeasure mu;
    SeriesResult s;
    if (spec.coeffs) {
        const CoefficientSequence g = as_deformed(*spec.coeffs);
        g.validate();
        s = coefficient_rate_hp(g, d);
        if (std::isfinite(s.total) && g.tail == TailType::constant) {
            AtomDetection det;
            mu = reconstruct(g, &det);
            r.diagnostics["atom_candidates"] = double(det.candidates.size());
            r.diagnostics["atom_scan_hits"] = double(det.scan_hits);
            r.diagnostics["atom_mass"] = mu.atom_mass();
        } else if (g.trivial()) {
            r.lhs_total = inf;
            detail::fill_series(r, s);
            r.rhs_total = inf;
            r.notes.push_back("finitely supported measure");
            r.settle(tol);
            return r;
        } else {
            // tail off gamma_d: the reconstruction has the wrong support
            mu = reconstruct(g);
        }
    } else if (spec.measure) {
        mu = *spec.measure;
        const CoefficientSequence g = deformed_from_alphas(coefficients_of(mu, spec.moment_count));
        s = coefficient_rate_hp(g, d);
    } else {
        throw domain_error("empty measure spec");
    }
    detail::fill_series(r, s);
    const RateReport lhs = spectral_rate(mu, e, kl);
    r.kl_term = lhs.kl_term;
    r.outlier_plus = lhs.outlier_plus;
    r.outlier_minus = lhs.outlier_minus;
    r.lhs_total = lhs.lhs_total;
    for (auto& n : lhs.notes) r.notes.push_back(n);
    r.settle(tol);
    return r;
}

// ------------------------------------------------------ Simon / GW (|g|<=1)

struct GwRhs {
    double simon_form = 0.0;  // H + g(Re a0 + |a0|^2/2 + 1/2 sum |a_k - a_{k-1}|^2) + sum h_g
    double trace_form = 0.0;  // H + g Re(a0 - sum a_k conj a_{k-1}) - sum log(1-|a_k|^2)
    std::vector<double> terms;  // summands of the first form
};

// both right-hand sides for a head closed by zeros; closed = false treats the
// head as the start of a longer sequence and drops the transition into zeros
inline GwRhs gw_rhs(const cvec& a, double g, bool closed = true) {
    GwRhs out;
    const double H = H_gw(g);
    if (a.empty()) {
        out.simon_form = out.trace_form = H;
        out.terms = {H};
        return out;
    }
    auto hg = [g](cplx x) { return -std::log1p(-std::norm(x)) - g * std::norm(x); };
    out.terms.push_back(H + g * (a[0].real() + 0.5 * std::norm(a[0])) + hg(a[0]));
    for (std::size_t k = 1; k < a.size() + (closed ? 1 : 0); ++k) {
        const cplx ak = k < a.size() ? a[k] : cplx(0.0);
        double t = 0.5 * g * std::norm(ak - a[k - 1]);
        if (k < a.size()) t += hg(ak);
        out.terms.push_back(t);
    }
    for (double t : out.terms) out.simon_form += t;
    double tr = H + g * re_trace_functional(a);
    if (!closed) tr -= 0.5 * g * std::norm(a.back());
    for (auto& x : a) tr -= std::log1p(-std::norm(x));
    out.trace_form = tr;
    return out;
}

inline RateReport verify_gw_strong(const MeasureSpec& spec, double g, double tol = 1e-6, KlOptions kl = {}) {
    if (!(g >= 0.0 && g <= 1.0)) throw domain_error("gw-strong requires 0 <= g <= 1");
    RateReport r;
    r.rule = "gw-strong";
    CircleMeasure mu;
    cvec a;
    bool truncated = false;
    if (spec.coeffs) {
        const CoefficientSequence c = as_plain(*spec.coeffs);
        c.validate();
        if (c.trivial()) {
            r.lhs_total = r.rhs_total = inf;
            r.settle(tol);
            r.status = Status::rhs_infinite;
            return r;
        }
        if (c.tail == TailType::constant && c.tail_value != 0.0)
            throw domain_error("gw-strong expects a zero tail");
        a = c.head;
        truncated = (c.tail == TailType::none);
        if (!truncated) mu = reconstruct(c);
    } else if (spec.measure) {
        mu = *spec.measure;
        a = coefficients_of(mu, spec.moment_count).head;
        truncated = true;
    } else {
        throw domain_error("empty measure spec");
    }
    const GwRhs rhs = gw_rhs(a, g, !truncated);
    r.rhs_terms = rhs.terms;
    double acc = 0.0;
    for (double t : rhs.terms) r.rhs_partial_sums.push_back(acc += t);
    r.rhs_total = rhs.simon_form;
    r.diagnostics["rhs_trace_form"] = rhs.trace_form;
    r.diagnostics["rhs_form_difference"] = std::abs(rhs.simon_form - rhs.trace_form);
    if (truncated) {
        // the summands past the first are nonnegative, so the fitted tail is
        // added rather than only reported
        const double pt = detail::power_tail(r.rhs_terms);
        r.rhs_tail_bound = std::isfinite(pt) ? pt : detail::geometric_tail(r.rhs_terms);
        r.rhs_total += r.rhs_tail_bound;
        r.notes.push_back("coefficient series truncated; power-law tail added");
    }
    if (spec.coeffs && truncated) {
        r.notes.push_back("no density supplied; spectral side not evaluated");
        r.lhs_total = std::numeric_limits<double>::quiet_NaN();
        r.status = Status::tolerance_exceeded;
        return r;
    }
    const EnsembleSpec ref = gw_ensemble(-g);
    r.kl_term = kl_divergence(ref.measure(), mu, kl);
    r.lhs_total = r.kl_term;
    r.settle(tol);
    return r;
}

// --------------------------------------------- gapped GW conjecture probe

// K(GW_g | mu) + outliers vs -g Re(a0 - sum a_k conj a_{k-1}) - sum log(1-|a_k|^2)
// for g < -1.  H(g) has no formula there, so the probe reports the series
// and the constant the left side would force; nothing is asserted.
inline RateReport probe_gw_gapped(const MeasureSpec& spec, double g, KlOptions kl = {}) {
    if (!(g < -1.0)) throw domain_error("gapped GW probe requires g < -1");
    RateReport r;
    r.rule = "gw-gapped";
    r.label = "CONJECTURE";
    const EnsembleSpec e = gw_ensemble(g);
    CircleMeasure mu;
    cvec a;
    if (spec.measure) {
        mu = *spec.measure;
        a = coefficients_of(mu, spec.moment_count).head;
    } else if (spec.coeffs) {
        const CoefficientSequence c = as_plain(*spec.coeffs);
        a = c.head;
        mu = reconstruct(c);
    } else {
        throw domain_error("empty measure spec");
    }
    const RateReport lhs = spectral_rate(mu, e, kl);
    r.kl_term = lhs.kl_term;
    r.outlier_plus = lhs.outlier_plus;
    r.outlier_minus = lhs.outlier_minus;
    r.lhs_total = lhs.lhs_total;
    r.notes = lhs.notes;
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        double t = -std::log1p(-std::norm(a[k]));
        t += (k == 0) ? -g * a[0].real() : g * (a[k] * std::conj(a[k - 1])).real();
        r.rhs_terms.push_back(t);
        r.rhs_partial_sums.push_back(acc += t);
    }
    r.rhs_total = acc;
    const std::size_t n = a.size();
    if (n >= 4) {
        double tail = 0.0;
        for (std::size_t k = n - 4; k < n; ++k) tail += r.rhs_terms[k];
        r.diagnostics["rhs_term_limit"] = tail / 4.0;
        if (std::abs(tail / 4.0) > 1e-6) r.notes.push_back("coefficient series does not converge: terms tend to a nonzero constant");
    }
    r.diagnostics["implied_H"] = std::isfinite(r.lhs_total) ? r.lhs_total - acc : inf;
    r.diagnostics["two_xi"] = 2.0 * e.xi;
    r.residual = std::numeric_limits<double>::quiet_NaN();
    r.finiteness_agrees = true;
    r.status = std::isfinite(r.lhs_total) ? Status::verified : Status::lhs_infinite;
    r.notes.push_back("probe only: no equality asserted");
    return r;
}

// J_g(mu) for |g| <= 1, labelled
inline RateReport probe_gw_ldp(const CoefficientSequence& a, double g) {
    RateReport r;
    r.rule = "gw-ldp";
    r.label = "CONJECTURE";
    const ProbeResult p = coefficient_rate_gw_probe(as_plain(a), g);
    r.rhs_total = p.value;
    r.diagnostics["tail_term_limit"] = p.tail_term_limit;
    r.residual = std::numeric_limits<double>::quiet_NaN();
    r.status = Status::verified;
    r.notes.push_back("probe only: no equality asserted");
    return r;
}

// ------------------------------------------------------------------ gems

enum class Finiteness { finite, infinite, inconclusive };

inline std::string finiteness_name(Finiteness f) {
    return f == Finiteness::finite ? "finite" : f == Finiteness::infinite ? "infinite" : "inconclusive";
}

// power-law exponent q of a positive sequence t_j ~ j^-q, from a log-log
// least-squares fit over the second half
inline double decay_exponent(const std::vector<double>& t) {
    const std::size_t n = t.size(), k0 = n / 2;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (std::size_t k = k0; k < n; ++k) {
        if (!(t[k] > 0)) continue;
        const double x = std::log(double(k + 1)), y = std::log(t[k]);
        sx += x, sy += y, sxx += x * x, sxy += x * y, ++m;
    }
    if (m < 3) return inf;  // terms vanish: treat as summable
    return -(m * sxy - sx * sy) / (m * sxx - sx * sx);
}

inline Finiteness classify_series(const std::vector<double>& t, std::size_t min_terms = 10) {
    if (t.size() < min_terms) return Finiteness::finite;
    const double q = decay_exponent(t);
    if (q > 1.1) return Finiteness::finite;
    if (q < 0.9) return Finiteness::infinite;
    return Finiteness::inconclusive;
}

struct GemsReport {
    bool in_S1T = true;
    Finiteness edge_sum = Finiteness::finite;
    bool atom_at_one = false;
    bool szego_integral_finite = true;
    double coefficient_sum = 0.0;
    Finiteness coefficient_finiteness = Finiteness::finite;
    double coefficient_exponent = inf;
    bool consistent = true;  // conjunction of the three conditions == coefficient finiteness
    bool conclusive = true;
};

// Conditions: membership, summable (edge distance)^{3/2} with no atom at 1,
// finite weighted log-integral; against sum |gamma_k - gamma_d|^2.
inline GemsReport gems_check_hp(const CircleMeasure& mu, double d, std::size_t coefficient_count = 40,
                                KlOptions kl = {}) {
    GemsReport g;
    const EnsembleSpec e = hp_ensemble(d);
    const RateReport lhs = spectral_rate(mu, e, kl);
    g.in_S1T = lhs.diagnostics.at("in_S1T") > 0.5;
    std::vector<double> lower, upper;
    for (const auto& a : mu.atoms) {
        if (e.in_support(a.theta)) continue;
        const double s = detail::signed_offset(a.theta);
        if (s == 0.0) g.atom_at_one = true;
        (s > 0 ? lower : upper).push_back(std::pow(e.edge - std::abs(s), 1.5));
    }
    auto by_size = [](std::vector<double>& v) { std::sort(v.begin(), v.end(), std::greater<>()); };
    by_size(lower), by_size(upper);
    const Finiteness fl = classify_series(lower), fu = classify_series(upper);
    g.edge_sum = (fl == Finiteness::infinite || fu == Finiteness::infinite) ? Finiteness::infinite
                 : (fl == Finiteness::inconclusive || fu == Finiteness::inconclusive) ? Finiteness::inconclusive
                                                                                       : Finiteness::finite;
    g.szego_integral_finite = g.in_S1T && std::isfinite(kl_divergence(e.measure(), mu, kl));

    const CoefficientSequence gam = deformed_from_alphas(coefficients_of(mu, coefficient_count));
    std::vector<double> terms;
    for (std::size_t k = 1; k < gam.head.size(); ++k) terms.push_back(std::norm(gam.head[k] - gamma_d(d)));
    // trailing terms at the moment-noise floor are zero
    const bool zero_tail = !terms.empty() && terms.back() < 1e-16;
    while (!terms.empty() && terms.back() < 1e-16) terms.pop_back();
    for (double t : terms) g.coefficient_sum += t;
    g.coefficient_exponent = decay_exponent(terms);
    // geometric decay counts as summable regardless of the power fit
    g.coefficient_finiteness = (zero_tail || terms.empty() || std::isfinite(detail::geometric_tail(terms)))
                                   ? Finiteness::finite
                                   : classify_series(terms);
    if (g.coefficient_finiteness == Finiteness::infinite) g.coefficient_sum = inf;

    const bool cond2 = g.edge_sum == Finiteness::finite && !g.atom_at_one;
    const bool spectral_finite = g.in_S1T && cond2 && g.szego_integral_finite;
    g.conclusive = g.edge_sum != Finiteness::inconclusive && g.coefficient_finiteness != Finiteness::inconclusive;
    g.consistent = !g.conclusive || spectral_finite == (g.coefficient_finiteness == Finiteness::finite);
    return g;
}

// Quadratic envelope around gamma_d:
//   (1+d)^3/(1+2d)^2 |h|^2 <= H_d(gamma_d + h) <= (1+d)^3/(1+2d) |h|^2
// sampled on a spiral of radii up to hmax.
struct EnvelopeReport {
    double d = 0.0, hmax = 0.0;
    double min_lower_ratio = inf;  // min H / lower bound
    double max_upper_ratio = 0.0;  // max H / upper bound
    std::size_t samples = 0;
    bool holds(double slack) const { return min_lower_ratio >= 1.0 - slack && max_upper_ratio <= 1.0 + slack; }
};

inline EnvelopeReport hp_envelope_check(double d, double hmax = 0.01, std::size_t samples = 400) {
    if (!(d > 0.0)) throw domain_error("envelope check needs d > 0");
    EnvelopeReport r{d, hmax};
    const double gd = gamma_d(d), c = std::pow(1 + d, 3) / (1 + 2 * d);
    for (std::size_t i = 0; i < samples; ++i) {
        const cplx h = hmax * double(i % 20 + 1) / 20.0 * unit(two_pi * 7.3 * double(i) / double(samples));
        const double v = H_d(gd + h, d), n2 = std::norm(h);
        r.min_lower_ratio = std::min(r.min_lower_ratio, v / (c / (1 + 2 * d) * n2));
        r.max_upper_ratio = std::max(r.max_upper_ratio, v / (c * n2));
    }
    r.samples = samples;
    return r;
}

// log-log slope of the inner outlier rate against the distance to the edge,
// on the last `window` fraction of the gap
inline double hp_edge_exponent(double d, double window = 0.1, std::size_t points = 40) {
    const double td = hp_ensemble(d).edge;
    std::vector<double> x, y;
    for (std::size_t i = 0; i < points; ++i) {
        const double t = td * (1.0 - window + 0.99 * window * double(i) / double(points - 1));
        x.push_back(std::log(td - t));
        y.push_back(std::log(outlier_rate_hp(t, d, Side::minus)));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = double(points);
    for (std::size_t i = 0; i < points; ++i) sx += x[i], sy += y[i], sxx += x[i] * x[i], sxy += x[i] * y[i];
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

// ----------------------------------------------------- outlier test cases

// eigenvalues of the N-truncation that sit more than `exit` inside the gap
inline int gap_eigen_count(const CoefficientSequence& plain_seq, double gap, std::size_t N, double exit) {
    cvec a(N);
    for (std::size_t k = 0; k + 1 < N; ++k) a[k] = plain_seq.at(k);
    const cplx c = plain_seq.tail == TailType::constant ? plain_seq.tail_value : cplx(1.0);
    a[N - 1] = std::abs(c) > 0 ? c / std::abs(c) : cplx(1.0);
    int n = 0;
    for (double t : eigenangles(cmv_assemble(plain(a, TailType::none), N).dense()))
        if (std::abs(detail::signed_offset(t)) < gap - exit) ++n;
    return n;
}

// gamma_0 = gamma_d + t e^{i psi}, rest gamma_d, with t bisected until exactly
// one truncated-CMV eigenvalue lies more than `exit` rad inside the gap
inline CoefficientSequence single_outlier_case(double d, double psi = pi / 6, std::size_t N = 128, double exit = 0.05) {
    const double gd = gamma_d(d), gap = hp_ensemble(d).edge;
    auto seq = [&](double t) { return deformed({gd + t * unit(psi)}, TailType::constant, gd); };
    auto count = [&](double t) { return gap_eigen_count(alphas_from_deformed(seq(t)), gap, N, exit); };
    // largest t keeping gamma_0 inside the disk
    const cplx u = unit(psi);
    const double b = gd * u.real();
    const double tmax = -b + std::sqrt(b * b - gd * gd + 1.0);
    double lo = 0.0, hi = -1.0;
    for (int i = 1; i <= 64; ++i) {
        const double t = tmax * (1.0 - 1e-3) * i / 64;
        const int c = count(t);
        if (c == 0) lo = t;
        if (c >= 1) {
            hi = t;
            break;
        }
    }
    if (hi < 0) throw numeric_error("no outlier reachable in this direction");
    for (int it = 0; it < 60; ++it) {
        const double m = 0.5 * (lo + hi);
        (count(m) >= 1 ? hi : lo) = m;
    }
    if (count(hi) != 1) throw numeric_error("bisection did not isolate a single outlier");
    return seq(hi);
}

// ------------------------------------------------------------------ batch

// runs cases on `jobs` threads; results are stored by case index
template <class Case, class Fn>
auto run_batch(const std::vector<Case>& cases, Fn fn, unsigned jobs) {
    using R = decltype(fn(cases.front()));
    std::vector<R> out(cases.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < cases.size();) out[i] = fn(cases[i]);
    };
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(cases.size())));
    std::vector<std::thread> pool;
    for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return out;
}

}  // namespace opuc
