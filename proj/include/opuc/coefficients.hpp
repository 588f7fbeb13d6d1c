#pragma once

#include <utility>
#include <vector>

#include "core.hpp"

namespace opuc {

// ---------------------------------------------------------------- polynomials

// monomial basis, p[i] is the coefficient of z^i
using Poly = cvec;

inline constexpr std::size_t max_degree = 4096;

inline cplx poly_eval(const Poly& p, cplx z) {
    cplx s = 0.0;
    for (std::size_t i = p.size(); i-- > 0;) s = s * z + p[i];
    return s;
}

// P*(z) = z^n conj(P(1/conj z)) for deg P = n
inline Poly reversed(const Poly& p) {
    Poly r(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) r[i] = std::conj(p[p.size() - 1 - i]);
    return r;
}

// phi_{k+1} = z phi_k - conj(alpha) phi_k*,  phi*_{k+1} = phi_k* - alpha z phi_k
inline std::pair<Poly, Poly> szego_step(const Poly& phi, const Poly& phi_star, cplx alpha) {
    if (std::abs(alpha) > 1.0) throw domain_error("Verblunsky coefficient outside the closed disk");
    if (phi.size() != phi_star.size() || phi.empty()) throw domain_error("phi and phi* must have equal degree");
    if (phi.size() > max_degree) throw domain_error("degree cap exceeded");
    const std::size_t n = phi.size();
    Poly a(n + 1, 0.0), b(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        a[i + 1] += phi[i];
        a[i] -= std::conj(alpha) * phi_star[i];
        b[i] += phi_star[i];
        b[i + 1] -= alpha * phi[i];
    }
    return {a, b};
}

// monic phi_n from alpha_0 .. alpha_{n-1}
inline std::pair<Poly, Poly> monic_opuc(const cvec& alphas, std::size_t n) {
    Poly phi{1.0}, star{1.0};
    for (std::size_t k = 0; k < n; ++k) std::tie(phi, star) = szego_step(phi, star, alphas.at(k));
    return {phi, star};
}

// ------------------------------------------------------ coefficient sequences

enum class Kind { plain, deformed };
enum class TailType { zero, constant, none };

struct CoefficientSequence {
    Kind kind = Kind::plain;
    cvec head;
    TailType tail = TailType::zero;
    cplx tail_value = 0.0;

    std::size_t size() const { return head.size(); }

    // k-th coefficient, reading into the tail past the head
    cplx at(std::size_t k) const {
        if (k < head.size()) return head[k];
        if (tail == TailType::zero) return 0.0;
        if (tail == TailType::constant) return tail_value;
        throw domain_error("coefficient index past a head with no tail");
    }

    // a unimodular final head value marks a finitely supported measure
    bool trivial() const { return !head.empty() && std::abs(head.back()) >= 1.0 - 1e-14 && tail == TailType::none; }

    void validate() const {
        for (std::size_t k = 0; k < head.size(); ++k) {
            const double r = std::abs(head[k]);
            if (r > 1.0 + 1e-14) throw domain_error("coefficient outside the closed disk");
            const bool last = (k + 1 == head.size());
            if (r >= 1.0 - 1e-14 && !(last && tail == TailType::none))
                throw domain_error("unimodular coefficient before the final position");
        }
        if (tail == TailType::constant && std::abs(tail_value) >= 1.0) throw domain_error("tail constant must lie in the open disk");
    }
};

inline CoefficientSequence plain(cvec head, TailType tail = TailType::zero, cplx c = 0.0) {
    return {Kind::plain, std::move(head), tail, c};
}
inline CoefficientSequence deformed(cvec head, TailType tail = TailType::zero, cplx c = 0.0) {
    return {Kind::deformed, std::move(head), tail, c};
}

// gamma_0 = conj(alpha_0), gamma_k = conj(alpha_k) prod_{j<k} (1 - conj gamma_j)/(1 - gamma_j)
inline CoefficientSequence deformed_from_alphas(const CoefficientSequence& a) {
    if (a.kind != Kind::plain) throw domain_error("expected plain coefficients");
    CoefficientSequence g;
    g.kind = Kind::deformed;
    cplx phase = 1.0;
    for (std::size_t k = 0; k < a.head.size(); ++k) {
        if (std::abs(a.head[k]) > 1.0 + 1e-14) throw domain_error("coefficient outside the closed disk");
        const cplx gk = std::conj(a.head[k]) * phase;
        g.head.push_back(gk);
        if (gk == 1.0) {
            if (k + 1 < a.head.size() || a.tail != TailType::none) throw singular_error("deformed coefficient equal to 1");
            break;
        }
        phase *= (1.0 - std::conj(gk)) / (1.0 - gk);
    }
    g.tail = a.tail;
    if (a.tail == TailType::constant) {
        // gamma_k = conj(c) * phase is constant only when it is real
        const cplx t = std::conj(a.tail_value) * phase;
        if (std::abs(t.imag()) > 1e-13 * std::max(1.0, std::abs(t))) {
            g.tail = TailType::none;
        } else {
            g.tail_value = t.real();
        }
    }
    return g;
}

// inverse map: alpha_k = conj(gamma_k) * prod_{j<k} (1 - conj gamma_j)/(1 - gamma_j)
inline CoefficientSequence alphas_from_deformed(const CoefficientSequence& g) {
    if (g.kind != Kind::deformed) throw domain_error("expected deformed coefficients");
    CoefficientSequence a;
    a.kind = Kind::plain;
    cplx phase = 1.0;
    for (std::size_t k = 0; k < g.head.size(); ++k) {
        const cplx gk = g.head[k];
        if (std::abs(gk) > 1.0 + 1e-14) throw domain_error("coefficient outside the closed disk");
        a.head.push_back(std::conj(gk) * phase);
        if (gk == 1.0) {
            if (k + 1 < g.head.size() || g.tail != TailType::none) throw singular_error("deformed coefficient equal to 1");
            break;
        }
        phase *= (1.0 - std::conj(gk)) / (1.0 - gk);
    }
    a.tail = g.tail;
    if (g.tail == TailType::constant) {
        const cplx t = g.tail_value;
        if (t == 1.0) throw singular_error("deformed tail equal to 1");
        if (std::abs(t.imag()) > 1e-13) {
            a.tail = TailType::none;  // plain tail rotates, not constant
        } else {
            a.tail_value = t.real() * phase;
        }
    }
    return a;
}

// alpha_0 .. alpha_{count-1} from m_j = int z^j dmu, j = 1..count (mu a
// probability measure).  Uses
//   conj(alpha_k) = sum_i phi_k[i] m_{i+1} / ||phi_k||^2.
// With lenient = true the recursion stops at the first invalid step instead
// of throwing.
inline CoefficientSequence verblunsky_from_moments(const cvec& moments, std::size_t count, bool lenient = false) {
    if (moments.size() < count) throw domain_error("not enough moments");
    auto m = [&](std::size_t j) -> cplx { return j == 0 ? cplx(1.0) : moments[j - 1]; };
    CoefficientSequence out;
    out.kind = Kind::plain;
    out.tail = TailType::none;
    Poly phi{1.0}, star{1.0};
    double norm2 = 1.0;
    for (std::size_t k = 0; k < count; ++k) {
        cplx s = 0.0;
        for (std::size_t i = 0; i < phi.size(); ++i) s += phi[i] * m(i + 1);
        const cplx a = std::conj(s / norm2);
        if (!(std::abs(a) < 1.0) || !(norm2 * (1.0 - std::norm(a)) > 0.0)) {
            if (lenient) break;
            throw singular_error("moment matrix is not positive definite");
        }
        out.head.push_back(a);
        std::tie(phi, star) = szego_step(phi, star, a);
        norm2 *= 1.0 - std::norm(a);
    }
    return out;
}

}  // namespace opuc
