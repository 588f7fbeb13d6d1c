#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cmv.hpp"
#include "coefficients.hpp"
#include "core.hpp"
#include "ensembles.hpp"
#include "quadrature.hpp"

namespace opuc {

// mt19937_64 seeded from (seed, stream) through seed_seq; different stream ids
// give unrelated states.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed = 0, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {
        std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(stream),
                          std::uint32_t(stream >> 32), std::uint32_t(0x6f707563u)};
        eng_.seed(seq);
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }
    static std::string algorithm() { return "mt19937_64/seed_seq"; }

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(eng_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng_); }
    double exponential() { return std::exponential_distribution<double>(1.0)(eng_); }
    double gamma(double shape) { return std::gamma_distribution<double>(shape, 1.0)(eng_); }
    double beta(double a, double b) {
        const double x = gamma(a), y = gamma(b);
        return x / (x + y);
    }
    cplx unimodular() { return unit(two_pi * uniform()); }

    std::mt19937_64& engine() { return eng_; }

private:
    std::uint64_t seed_, stream_;
    std::mt19937_64 eng_;
};

// Per-draw chain statistics.  Independent samplers leave them at their
// defaults.
struct ChainDiagnostics {
    std::string method = "exact";
    double acceptance = 1.0;
    double autocorrelation_time = 1.0;
    std::size_t steps = 0;
    bool warning = false;
    std::string message;
};

// point with density (m+1)/pi (1 - |z|^2)^m on the disk; |z|^2 ~ Beta(1, m+1)
inline cplx sample_eta(double m, RngStream& rng) {
    const double r2 = 1.0 - std::pow(rng.uniform(), 1.0 / (m + 1.0));
    return std::sqrt(r2) * rng.unimodular();
}

// alpha_k with |alpha_k|^2 ~ Beta(1, n-k-1), last one uniform on the circle
inline CoefficientSequence sample_cue_alphas(std::size_t n, RngStream& rng) {
    if (n == 0) throw domain_error("n must be positive");
    cvec a(n);
    for (std::size_t k = 0; k + 1 < n; ++k) a[k] = sample_eta(double(n - k - 2), rng);
    a[n - 1] = rng.unimodular();
    return plain(std::move(a), TailType::none);
}

namespace detail {

// E[|1 - z|^{2 delta}] / 4^delta for z ~ eta density exponent m (m = -1 is
// the uniform law on the circle)
inline double hp_acceptance(double m, double delta) {
    return std::exp(std::lgamma(m + 2) + std::lgamma(m + 2 + 2 * delta) - 2 * std::lgamma(m + 2 + delta) -
                    2 * delta * std::log(2.0));
}

// log of (1 - |z|^2)^m |1 - z|^{2 delta}
inline double hp_log_target(cplx z, double m, double delta) {
    const double r2 = std::norm(z);
    if (!(r2 < 1.0)) return -inf;
    return m * std::log1p(-r2) + delta * std::log(std::norm(1.0 - z));
}

// random-walk Metropolis on the disk targeting hp_log_target, started at the
// mode -delta/(m+delta) and tuned during burn-in toward 30% acceptance
inline cplx hp_metropolis(double m, double delta, RngStream& rng, ChainDiagnostics& diag, std::size_t burn = 400) {
    cplx z = -delta / (m + delta);
    double lp = hp_log_target(z, m, delta);
    double step = std::max(1e-3, (1.0 + z.real()) / std::sqrt(m + delta + 1.0));
    std::size_t acc = 0, tot = 0, win = 0;
    for (std::size_t i = 0; i < burn; ++i) {
        const cplx w = z + step * cplx(rng.normal(), rng.normal());
        const double lw = hp_log_target(w, m, delta);
        ++tot;
        if (std::log(rng.uniform()) < lw - lp) z = w, lp = lw, ++acc, ++win;
        if ((i + 1) % 50 == 0) {
            const double rate = win / 50.0;
            if (rate < 0.25) step *= 0.7;
            if (rate > 0.35) step *= 1.4;
            win = 0;
        }
    }
    diag.steps += tot;
    diag.acceptance = (diag.acceptance * double(diag.steps - tot) + double(acc)) / double(diag.steps);
    return z;
}

}  // namespace detail

// Deformed coefficients of the HP_d ensemble with delta = n d:
// gamma_k ~ (1 - |z|^2)^{n-k-2} |1 - z|^{2 delta}, gamma_{n-1} ~ |1 - zeta|^{2 delta}
// on the circle.  Rejection from eta while the mean acceptance stays above
// 1e-4, Metropolis below.  The circle factor is exact: zeta = e^{i theta},
// theta in [0, 2pi), with (1 + cos(theta/2))/2 ~ Beta(delta + 1/2, delta + 1/2).
inline CoefficientSequence sample_hp_gammas(std::size_t n, double d, RngStream& rng, ChainDiagnostics* diag = nullptr) {
    if (n == 0) throw domain_error("n must be positive");
    if (!(d >= 0.0)) throw domain_error("HP parameter must be nonnegative");
    const double delta = double(n) * d;
    ChainDiagnostics local;
    ChainDiagnostics& dg = diag ? *diag : local;
    dg = {};
    dg.steps = 0;
    bool used_chain = false;
    cvec g(n);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double m = double(n - k - 2);
        if (delta == 0.0) {
            g[k] = sample_eta(m, rng);
        } else if (detail::hp_acceptance(m, delta) >= 1e-4) {
            const double shift = 2 * delta * std::log(2.0);
            for (;;) {
                const cplx z = sample_eta(m, rng);
                if (std::log(rng.uniform()) < delta * std::log(std::norm(1.0 - z)) - shift) {
                    g[k] = z;
                    break;
                }
            }
        } else {
            if (!used_chain) dg.acceptance = 0.0;
            used_chain = true;
            g[k] = detail::hp_metropolis(m, delta, rng, dg);
        }
    }
    if (delta == 0.0) {
        g[n - 1] = rng.unimodular();
    } else {
        g[n - 1] = unit(2.0 * std::acos(2.0 * rng.beta(delta + 0.5, delta + 0.5) - 1.0));
    }
    if (used_chain) {
        dg.method = "metropolis";
        if (dg.acceptance < 0.1 || dg.acceptance > 0.6) {
            dg.warning = true;
            dg.message = "acceptance outside the tuned range";
        }
    }
    return deformed(std::move(g), TailType::none);
}

// Dirichlet(1, ..., 1)
inline std::vector<double> sample_weights(std::size_t n, RngStream& rng) {
    if (n == 0) throw domain_error("n must be positive");
    std::vector<double> w(n);
    double s = 0.0;
    for (auto& x : w) s += (x = rng.exponential());
    for (auto& x : w) x /= s;
    return w;
}

// ------------------------------------------------------------- Gross-Witten

namespace detail {

// integrated autocorrelation time, Sokal's window c = 5
inline double integrated_autocorrelation(const std::vector<double>& x) {
    const std::size_t n = x.size();
    if (n < 16) return 1.0;
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= double(n);
    double c0 = 0.0;
    for (double v : x) c0 += sq(v - mean);
    c0 /= double(n);
    if (c0 <= 0.0) return 1.0;
    double tau = 1.0;
    for (std::size_t lag = 1; lag < n / 2; ++lag) {
        double c = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i) c += (x[i] - mean) * (x[i + lag] - mean);
        tau += 2.0 * c / (double(n) * c0);
        if (double(lag) >= 5.0 * tau) break;
    }
    return std::max(1.0, tau);
}

}  // namespace detail

// Re tr C = Re(alpha_0 - sum_{k >= 1} alpha_k conj(alpha_{k-1}))
inline double cmv_re_trace(const cvec& a) {
    cplx s = a.empty() ? cplx(0.0) : a[0];
    for (std::size_t k = 1; k < a.size(); ++k) s -= a[k] * std::conj(a[k - 1]);
    return s.real();
}

// Single-site Metropolis chain on (alpha_0, ..., alpha_{n-2}, alpha_{n-1} in T)
// with weight exp(n g Re tr C) prod eta_{n-k-2}.
class GwChain {
public:
    GwChain(std::size_t n, double g, RngStream& rng) : n_(n), g_(g), rng_(rng), step_(n, 0.3), win_(n, 0) {
        if (n == 0) throw domain_error("n must be positive");
        a_ = sample_cue_alphas(n, rng).head;
        for (std::size_t k = 0; k + 1 < n; ++k) step_[k] = std::min(0.3, 1.0 / std::sqrt(double(n - k)));
    }

    const cvec& state() const { return a_; }

    // coordinate ascent toward the mode of the weight.  Each site maximises
    // m log(1 - |z|^2) + Re(z conj v) in closed form: z along v with
    // |v| r^2 + 2 m r - |v| = 0.
    void climb(std::size_t sweeps) {
        for (std::size_t s = 0; s < sweeps; ++s) {
            for (std::size_t k = 0; k < n_; ++k) {
                cplx v = (k == 0) ? cplx(1.0) : -a_[k - 1];
                if (k + 1 < n_) v -= a_[k + 1];
                v *= double(n_) * g_;
                const double av = std::abs(v);
                if (av == 0.0) continue;
                if (k + 1 == n_) {
                    a_[k] = v / av;
                    continue;
                }
                const double m = double(n_ - k - 2);
                const double r = m > 0 ? av / (m + std::sqrt(m * m + av * av)) : 1.0 - 1e-6;
                a_[k] = std::min(r, 1.0 - 1e-6) * v / av;
            }
        }
    }

    // one sweep over all sites; tune = adapt the per-site step
    void sweep(bool tune) {
        for (std::size_t k = 0; k < n_; ++k) {
            const bool last = (k + 1 == n_);
            const cplx old = a_[k];
            const cplx prop = last ? old * unit(step_[k] * rng_.normal())
                                   : old + step_[k] * cplx(rng_.normal(), rng_.normal()) / std::sqrt(2.0);
            const double dl = site_log(k, prop) - site_log(k, old);
            ++steps_;
            if (std::log(rng_.uniform()) < dl) {
                a_[k] = prop;
                ++accepted_;
                ++win_[k];
            }
        }
        ++sweeps_;
        if (tune && sweeps_ % 50 == 0) {
            for (std::size_t k = 0; k < n_; ++k) {
                const double rate = win_[k] / 50.0;
                if (rate < 0.25) step_[k] *= 0.75;
                if (rate > 0.35) step_[k] = std::min(step_[k] * 1.3, k + 1 == n_ ? pi : 1.0);
                win_[k] = 0;
            }
        }
    }

    double acceptance() const { return steps_ ? double(accepted_) / double(steps_) : 0.0; }
    double re_trace() const { return cmv_re_trace(a_); }

private:
    // log weight of site k as a function of its value, others fixed
    double site_log(std::size_t k, cplx z) const {
        const bool last = (k + 1 == n_);
        double l = 0.0;
        if (!last) {
            const double r2 = std::norm(z);
            if (!(r2 < 1.0)) return -inf;
            l += double(n_ - k - 2) * std::log1p(-r2);
        }
        cplx t = (k == 0) ? z : -z * std::conj(a_[k - 1]);
        if (k + 1 < n_) t -= a_[k + 1] * std::conj(z);
        return l + double(n_) * g_ * t.real();
    }

    std::size_t n_;
    double g_;
    RngStream& rng_;
    cvec a_;
    std::vector<double> step_;
    std::vector<int> win_;
    std::size_t steps_ = 0, accepted_ = 0, sweeps_ = 0;
};

struct GwSampleOptions {
    std::size_t climb_sweeps = 500;  // deterministic ascent before burn-in
    std::size_t burn_sweeps = 2000;
    std::size_t pilot_sweeps = 400;  // for the autocorrelation estimate
};

// `reps` thinned draws from one chain.  g = 0 is exact CUE.
inline std::vector<CoefficientSequence> sample_gw_alphas(std::size_t n, double g, std::size_t reps, RngStream& rng,
                                                         ChainDiagnostics* diag = nullptr, GwSampleOptions opt = {}) {
    if (n == 0) throw domain_error("n must be positive");
    if (!std::isfinite(g)) throw domain_error("GW parameter must be finite");
    ChainDiagnostics local;
    ChainDiagnostics& dg = diag ? *diag : local;
    dg = {};
    std::vector<CoefficientSequence> out;
    if (g == 0.0) {
        for (std::size_t r = 0; r < reps; ++r) out.push_back(sample_cue_alphas(n, rng));
        return out;
    }
    dg.method = "metropolis";
    GwChain chain(n, g, rng);
    chain.climb(opt.climb_sweeps);
    for (std::size_t s = 0; s < opt.burn_sweeps; ++s) chain.sweep(true);
    std::vector<double> trace;
    for (std::size_t s = 0; s < opt.pilot_sweeps; ++s) {
        chain.sweep(false);
        trace.push_back(chain.re_trace());
    }
    dg.autocorrelation_time = detail::integrated_autocorrelation(trace);
    const std::size_t thin = static_cast<std::size_t>(std::ceil(dg.autocorrelation_time));
    for (std::size_t r = 0; r < reps; ++r) {
        for (std::size_t s = 0; s < thin; ++s) chain.sweep(false);
        out.push_back(plain(chain.state(), TailType::none));
    }
    dg.acceptance = chain.acceptance();
    dg.steps = (opt.burn_sweeps + opt.pilot_sweeps + thin * reps) * n;
    if (dg.acceptance < 0.1 || dg.acceptance > 0.7) {
        dg.warning = true;
        dg.message = "acceptance outside the tuned range";
    }
    if (double(opt.pilot_sweeps) < 20.0 * dg.autocorrelation_time) {
        dg.warning = true;
        dg.message = "pilot run shorter than 20 autocorrelation times";
    }
    return out;
}

inline CoefficientSequence sample_gw_alphas(std::size_t n, double g, RngStream& rng, ChainDiagnostics* diag = nullptr) {
    return sample_gw_alphas(n, g, 1, rng, diag).front();
}

// ---------------------------------------------------------------- KS tools

// P(K > lambda) for the Kolmogorov limit law
inline double kolmogorov_survival(double lambda) {
    if (lambda < 0.2) return 1.0;
    double s = 0.0;
    for (int j = 1; j <= 100; ++j) {
        const double t = 2.0 * ((j % 2) ? 1.0 : -1.0) * std::exp(-2.0 * j * j * lambda * lambda);
        s += t;
        if (std::abs(t) < 1e-16) break;
    }
    return std::clamp(s, 0.0, 1.0);
}

struct KsResult {
    double distance = 0.0;
    double p_value = 1.0;
};

// one-sample test against a continuous CDF
template <class Cdf>
KsResult ks_one_sample(std::vector<double> x, Cdf&& cdf) {
    std::sort(x.begin(), x.end());
    const double n = double(x.size());
    double D = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double F = cdf(x[i]);
        D = std::max({D, (i + 1) / n - F, F - i / n});
    }
    const double sn = std::sqrt(n);
    return {D, kolmogorov_survival((sn + 0.12 + 0.11 / sn) * D)};
}

inline KsResult ks_two_sample(std::vector<double> x, std::vector<double> y) {
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double n = double(x.size()), m = double(y.size());
    std::size_t i = 0, j = 0;
    double D = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v) ++i;
        while (j < y.size() && y[j] == v) ++j;
        D = std::max(D, std::abs(i / n - j / m));
    }
    const double ne = std::sqrt(n * m / (n + m));
    return {D, kolmogorov_survival((ne + 0.12 + 0.11 / ne) * D)};
}

// ------------------------------------------------------ empirical ESD check

// cumulative distribution of an equilibrium measure on [0, 2pi), tabulated on
// a grid refined at the support edges and linearly interpolated
class EquilibriumCdf {
public:
    explicit EquilibriumCdf(const EnsembleSpec& e, std::size_t cells = 4096) {
        const CircleMeasure mu = e.measure();
        std::vector<double> cuts{0.0, two_pi};
        if (!mu.full_circle()) {
            cuts.push_back(wrap_angle(mu.arc_lo));
            cuts.push_back(wrap_angle(mu.arc_hi));
        }
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        x_.push_back(0.0);
        F_.push_back(0.0);
        for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
            const double lo = cuts[p], hi = cuts[p + 1];
            const std::size_t m = std::max<std::size_t>(8, std::size_t(cells * (hi - lo) / two_pi));
            // sin-spaced nodes cluster at both ends of each piece
            for (std::size_t i = 1; i <= m; ++i) {
                const double u = -pi / 2 + pi * double(i) / double(m);
                const double a = x_.back(), b = lo + (hi - lo) * 0.5 * (1 + std::sin(u));
                const double v = quad::arc([&](double t) { return mu.density_at(t); }, a, b, 1e-10) / two_pi;
                x_.push_back(b);
                F_.push_back(F_.back() + v);
            }
        }
        total_ = F_.back();
    }

    double operator()(double t) const {
        t = wrap_angle(t);
        const auto it = std::upper_bound(x_.begin(), x_.end(), t);
        if (it == x_.end()) return 1.0;
        const std::size_t i = std::size_t(it - x_.begin());
        const double w = (t - x_[i - 1]) / (x_[i] - x_[i - 1]);
        return ((1 - w) * F_[i - 1] + w * F_[i]) / total_;
    }

    double total() const { return total_; }

private:
    std::vector<double> x_, F_;
    double total_ = 1.0;
};

struct EsdReport {
    double ks_distance = 0.0;
    double support_violation_rate = 0.0;
    std::size_t eigenvalues = 0;
    ChainDiagnostics diagnostics;
};

inline std::vector<double> eigenangles_of(const CoefficientSequence& c) {
    const CoefficientSequence a = c.kind == Kind::deformed ? alphas_from_deformed(c) : c;
    return eigenangles(cmv_assemble(a, a.head.size()).dense());
}

// pooled eigenangles of `reps` matrices of size n against the equilibrium CDF
inline EsdReport empirical_esd_check(const EnsembleSpec& e, std::size_t n, std::size_t reps, RngStream& rng) {
    EsdReport rep;
    std::vector<double> pooled;
    if (e.family == Family::GW) {
        for (const auto& c : sample_gw_alphas(n, e.param, reps, rng, &rep.diagnostics)) {
            const auto t = eigenangles_of(c);
            pooled.insert(pooled.end(), t.begin(), t.end());
        }
    } else {
        for (std::size_t r = 0; r < reps; ++r) {
            ChainDiagnostics dg;
            const auto t = eigenangles_of(sample_hp_gammas(n, e.param, rng, &dg));
            pooled.insert(pooled.end(), t.begin(), t.end());
            if (dg.method != "exact") rep.diagnostics = dg;
        }
    }
    const CircleMeasure mu = e.measure();
    std::size_t outside = 0;
    for (double t : pooled)
        if (!mu.in_closed_arc(t)) ++outside;
    rep.eigenvalues = pooled.size();
    rep.support_violation_rate = pooled.empty() ? 0.0 : double(outside) / double(pooled.size());
    const EquilibriumCdf cdf(e);
    rep.ks_distance = ks_one_sample(std::move(pooled), cdf).distance;
    return rep;
}

}  // namespace opuc
