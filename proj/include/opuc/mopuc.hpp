#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "cmv.hpp"
#include "coefficients.hpp"
#include "core.hpp"
#include "ensembles.hpp"
#include "quadrature.hpp"
#include "rates.hpp"
#include "sampling.hpp"
#include "schur.hpp"
#include "sumrules.hpp"

namespace opuc {

using Mat = Eigen::MatrixXcd;

inline Mat eye(std::size_t p) { return Mat::Identity(Eigen::Index(p), Eigen::Index(p)); }

// Hermitian square root with eigenvalues clamped at 0
inline Mat psd_sqrt(const Mat& h) {
    Eigen::SelfAdjointEigenSolver<Mat> es((h + h.adjoint()) / 2.0);
    Eigen::VectorXd ev = es.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) ev(i) = ev(i) > 0.0 ? std::sqrt(ev(i)) : 0.0;
    return es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

inline double sigma_max(const Mat& a) {
    if (a.size() == 0) return 0.0;
    return Eigen::JacobiSVD<Mat>(a).singularValues()(0);
}

// rho^R = (1 - a a^+)^{1/2}, rho^L = (1 - a^+ a)^{1/2}
inline Mat defect_right(const Mat& a) { return psd_sqrt(eye(a.rows()) - a * a.adjoint()); }
inline Mat defect_left(const Mat& a) { return psd_sqrt(eye(a.rows()) - a.adjoint() * a); }

inline bool is_unitary(const Mat& u, double tol = 1e-10) {
    return (u.adjoint() * u - eye(u.rows())).norm() <= tol * std::max<double>(1.0, double(u.rows()));
}

// ------------------------------------------------------------- sequences

struct MatrixCoefficientSequence {
    Kind kind = Kind::plain;
    std::size_t p = 1;
    std::vector<Mat> head;
    TailType tail = TailType::zero;
    cplx tail_value = 0.0;  // constant tail is tail_value * identity

    Mat at(std::size_t k) const {
        if (k < head.size()) return head[k];
        if (tail == TailType::zero) return Mat::Zero(p, p);
        if (tail == TailType::constant) return tail_value * eye(p);
        throw domain_error("coefficient index past a head with no tail");
    }

    void validate() const {
        for (std::size_t k = 0; k < head.size(); ++k) {
            if (std::size_t(head[k].rows()) != p || std::size_t(head[k].cols()) != p)
                throw domain_error("coefficient block has the wrong size");
            const double s = sigma_max(head[k]);
            if (s > 1.0 + 1e-12) throw domain_error("coefficient outside the closed matrix ball");
            const bool last = k + 1 == head.size() && tail == TailType::none;
            if (s >= 1.0 - 1e-14 && !(last && is_unitary(head[k])))
                throw domain_error("boundary coefficient must be a final unitary block");
        }
        if (tail == TailType::constant && !(std::abs(tail_value) < 1.0))
            throw domain_error("tail constant must lie in the open disk");
    }
};

inline MatrixCoefficientSequence matrix_plain(std::vector<Mat> head, TailType tail = TailType::zero, cplx c = 0.0) {
    const std::size_t p = head.empty() ? 1 : std::size_t(head[0].rows());
    return {Kind::plain, p, std::move(head), tail, c};
}
inline MatrixCoefficientSequence matrix_deformed(std::vector<Mat> head, TailType tail = TailType::zero, cplx c = 0.0) {
    const std::size_t p = head.empty() ? 1 : std::size_t(head[0].rows());
    return {Kind::deformed, p, std::move(head), tail, c};
}

// block-diagonal assembly of scalar sequences of equal head length
inline MatrixCoefficientSequence block_diagonal(const std::vector<CoefficientSequence>& parts) {
    if (parts.empty()) throw domain_error("no blocks");
    const std::size_t p = parts.size(), n = parts[0].head.size();
    MatrixCoefficientSequence m;
    m.kind = parts[0].kind;
    m.p = p;
    m.tail = parts[0].tail;
    m.tail_value = parts[0].tail_value;
    for (const auto& s : parts)
        if (s.head.size() != n || s.kind != m.kind || s.tail != m.tail || s.tail_value != m.tail_value)
            throw domain_error("blocks must share kind, length and tail");
    for (std::size_t k = 0; k < n; ++k) {
        Mat a = Mat::Zero(p, p);
        for (std::size_t i = 0; i < p; ++i) a(i, i) = parts[i].head[k];
        m.head.push_back(a);
    }
    return m;
}

inline bool is_diagonal(const Mat& a, double tol = 1e-14) {
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            if (i != j && std::abs(a(i, j)) > tol) return false;
    return true;
}

inline bool is_block_diagonal(const MatrixCoefficientSequence& m) {
    for (const auto& a : m.head)
        if (!is_diagonal(a)) return false;
    return true;
}

// the i-th diagonal entry of every block
inline CoefficientSequence diagonal_part(const MatrixCoefficientSequence& m, std::size_t i) {
    CoefficientSequence s;
    s.kind = m.kind;
    s.tail = m.tail;
    s.tail_value = m.tail_value;
    for (const auto& a : m.head) s.head.push_back(a(i, i));
    return s;
}

// ------------------------------------------------------- Szego recursion

using MatPoly = std::vector<Mat>;  // coefficient of z^i at index i

// P*(z) = z^k P(1/conj z)^+
inline MatPoly reversed(const MatPoly& P) {
    MatPoly r(P.size());
    for (std::size_t i = 0; i < P.size(); ++i) r[i] = P[P.size() - 1 - i].adjoint();
    return r;
}

// phi^L_{k+1} = (rho^L)^{-1} (z phi^L - a^+ (phi^R)*),
// phi^R_{k+1} = (z phi^R - (phi^L)* a^+) (rho^R)^{-1}
inline std::pair<MatPoly, MatPoly> matrix_szego_step(const MatPoly& phiL, const MatPoly& phiR, const Mat& a) {
    if (phiL.size() != phiR.size() || phiL.empty()) throw domain_error("phi^L and phi^R must have equal degree");
    if (!(sigma_max(a) < 1.0)) throw singular_error("defect matrix is singular");
    const std::size_t n = phiL.size(), p = a.rows();
    const Mat rl_inv = defect_left(a).inverse(), rr_inv = defect_right(a).inverse();
    const MatPoly Ls = reversed(phiL), Rs = reversed(phiR);
    MatPoly L(n + 1, Mat::Zero(p, p)), R(n + 1, Mat::Zero(p, p));
    for (std::size_t i = 0; i < n; ++i) {
        L[i + 1] += phiL[i];
        L[i] -= a.adjoint() * Rs[i];
        R[i + 1] += phiR[i];
        R[i] -= Ls[i] * a.adjoint();
    }
    for (auto& c : L) c = rl_inv * c;
    for (auto& c : R) c = c * rr_inv;
    return {L, R};
}

inline Mat poly_eval(const MatPoly& P, cplx z) {
    Mat s = Mat::Zero(P[0].rows(), P[0].cols());
    for (std::size_t i = P.size(); i-- > 0;) s = s * z + P[i];
    return s;
}

// ------------------------------------------------------------ Mobius maps

// T_a(zeta) = (rho^R)^{-1} (zeta - a) (1 - a^+ zeta)^{-1} rho^L
inline Mat mobius_T(const Mat& a, const Mat& zeta) {
    const std::size_t p = a.rows();
    const Mat den = eye(p) - a.adjoint() * zeta;
    Eigen::PartialPivLU<Mat> lu(den);
    if (!(std::abs(lu.determinant()) > 1e-300)) throw singular_error("pole of the Mobius map: 1 - a^+ zeta is singular");
    if (!(sigma_max(a) < 1.0)) throw domain_error("Mobius parameter must lie in the open ball");
    return defect_right(a).inverse() * (zeta - a) * lu.inverse() * defect_left(a);
}

struct DeformedMatrix {
    MatrixCoefficientSequence gammas;
    std::vector<Mat> b;  // b_0 .. b_n
    double unitarity_defect = 0.0;
    bool failed = false;
};

// b_0 = 1, b_{j+1} = T_{a_j^+}(b_j), gamma_k = b_k^{-1} a_k^+
inline DeformedMatrix deformed_matrix_gammas_detail(const MatrixCoefficientSequence& a, double tol = 1e-10) {
    if (a.kind != Kind::plain) throw domain_error("expected plain coefficients");
    DeformedMatrix out;
    out.gammas.kind = Kind::deformed;
    out.gammas.p = a.p;
    Mat b = eye(a.p);
    out.b.push_back(b);
    for (std::size_t k = 0; k < a.head.size(); ++k) {
        const Mat& ak = a.head[k];
        out.gammas.head.push_back(b.adjoint() * ak.adjoint());
        if (k + 1 == a.head.size() && a.tail == TailType::none && sigma_max(ak) >= 1.0 - 1e-14) break;
        b = mobius_T(ak.adjoint(), b);
        out.b.push_back(b);
        out.unitarity_defect = std::max(out.unitarity_defect, (b.adjoint() * b - eye(a.p)).norm());
    }
    out.failed = out.unitarity_defect > tol;
    out.gammas.tail = a.tail;
    if (a.tail == TailType::constant) {
        // a tail c * 1 stays constant in deformed form only for b = 1
        const Mat g = b.adjoint() * std::conj(a.tail_value);
        if ((g - g(0, 0) * eye(a.p)).norm() > 1e-12 || std::abs(g(0, 0).imag()) > 1e-12)
            out.gammas.tail = TailType::none;
        else
            out.gammas.tail_value = g(0, 0).real();
    }
    return out;
}

inline MatrixCoefficientSequence deformed_matrix_gammas(const MatrixCoefficientSequence& a) {
    auto d = deformed_matrix_gammas_detail(a);
    if (d.failed) throw numeric_error("b_j lost unitarity along the deformed recursion");
    return d.gammas;
}

// inverse: a_k = (b_k gamma_k)^+.  A deformed tail gamma_d * 1 gives the plain
// tail gamma_d * B with B = b_K^+; `tail_block` receives B.
inline MatrixCoefficientSequence alphas_from_matrix_gammas(const MatrixCoefficientSequence& g, Mat* tail_block = nullptr) {
    if (g.kind != Kind::deformed) throw domain_error("expected deformed coefficients");
    MatrixCoefficientSequence a;
    a.kind = Kind::plain;
    a.p = g.p;
    a.tail = g.tail;
    Mat b = eye(g.p);
    for (std::size_t k = 0; k < g.head.size(); ++k) {
        const Mat ak = (b * g.head[k]).adjoint();
        a.head.push_back(ak);
        if (k + 1 == g.head.size() && g.tail == TailType::none && sigma_max(ak) >= 1.0 - 1e-14) break;
        b = mobius_T(ak.adjoint(), b);
    }
    if (g.tail == TailType::constant) {
        if (tail_block) *tail_block = b.adjoint();
        a.tail_value = g.tail_value;
        if ((b - eye(g.p)).norm() > 1e-12) a.tail = TailType::none;  // plain tail is gamma_d B, not scalar
    }
    return a;
}

// ------------------------------------------------------- Neretin operations

// Xi^m(U) = D + C (I - A)^{-1} B with A the leading m x m block
inline Mat neretin_contraction(const Mat& U, std::size_t m) {
    const Eigen::Index N = U.rows(), M = Eigen::Index(m);
    if (!(M < N)) throw domain_error("contraction size must be below the matrix size");
    if (M == 0) return U;
    const Mat A = U.topLeftCorner(M, M), B = U.topRightCorner(M, N - M);
    const Mat C = U.bottomLeftCorner(N - M, M), D = U.bottomRightCorner(N - M, N - M);
    Eigen::PartialPivLU<Mat> lu(Mat::Identity(M, M) - A);
    if (!(std::abs(lu.determinant()) > 1e-300)) throw singular_error("I - A is singular");
    return D + C * lu.solve(B);
}

// c_0 = [U]_p, c_r = [Xi^{rp}(U)]_p, computed by successive contraction
inline std::vector<Mat> neretin_coeffs(const Mat& U, std::size_t p) {
    const std::size_t N = U.rows();
    if (p == 0 || N % p != 0) throw domain_error("matrix size must be a multiple of p");
    std::vector<Mat> c;
    Mat V = U;
    for (std::size_t r = 0; r < N / p; ++r) {
        c.push_back(V.topLeftCorner(p, p));
        if (r + 1 < N / p) V = neretin_contraction(V, p);
    }
    return c;
}

// ------------------------------------------------------------------- GGT

// block (i, j): rho^R_{i-1} for j = i - 1; for j >= i,
// (i == 0 ? 1 : -a_{i-1}) rho^L_i ... rho^L_{j-1} a_j^+
inline Mat ggt_dense(const MatrixCoefficientSequence& a, std::size_t n) {
    if (a.kind != Kind::plain) throw domain_error("expected plain coefficients");
    if (n == 0) throw domain_error("empty GGT matrix");
    const std::size_t p = a.p;
    std::vector<Mat> al(n), rl(n), rr(n);
    for (std::size_t k = 0; k < n; ++k) {
        al[k] = a.at(k);
        if (k + 1 < n && !(sigma_max(al[k]) < 1.0)) throw domain_error("coefficient before the last must lie in the open ball");
        rl[k] = defect_left(al[k]);
        rr[k] = defect_right(al[k]);
    }
    if (!is_unitary(al[n - 1], 1e-12)) throw domain_error("invalid final block: must be unitary");
    Mat G = Mat::Zero(n * p, n * p);
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) G.block((i)*p, (i - 1) * p, p, p) = rr[i - 1];
        Mat left = (i == 0) ? eye(p) : Mat(-al[i - 1]);
        for (std::size_t j = i; j < n; ++j) {
            G.block(i * p, j * p, p, p) = left * al[j].adjoint();
            left = left * rl[j];
        }
    }
    return G;
}

inline BandedUnitary ggt_assemble(const MatrixCoefficientSequence& a, std::size_t n) {
    const Mat G = ggt_dense(a, n);
    return BandedUnitary::from_dense(G, a.p, std::size_t(G.rows()) - 1);
}

// tr(a_0^+ - sum_{k>=1} a_{k-1} a_k^+)
inline cplx trace_functional(const std::vector<Mat>& a) {
    if (a.empty()) return 0.0;
    cplx t = a[0].adjoint().trace();
    for (std::size_t k = 1; k < a.size(); ++k) t -= (a[k - 1] * a[k].adjoint()).trace();
    return t;
}

// ----------------------------------------------------------- matrix rates

inline double log_det_hpd(const Mat& h) {
    Eigen::LLT<Mat> llt((h + h.adjoint()) / 2.0);
    if (llt.info() != Eigen::Success) return -inf;
    double s = 0.0;
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
        const double v = llt.matrixL()(i, i).real();
        if (!(v > 0.0)) return -inf;
        s += 2.0 * std::log(v);
    }
    return s;
}

inline double log_abs_det(const Mat& m) {
    Eigen::PartialPivLU<Mat> lu(m);
    double s = 0.0;
    const Mat& u = lu.matrixLU();
    for (Eigen::Index i = 0; i < m.rows(); ++i) s += std::log(std::abs(u(i, i)));
    return s;
}

// -log det(1 - g g^+) - d log det((1 - g)(1 - g)^+) + p H_d(0)
inline double H_dp(const Mat& g, double d) {
    if (!(d >= 0.0)) throw domain_error("HP parameter must be nonnegative");
    const std::size_t p = g.rows();
    const double s = sigma_max(g);
    if (s > 1.0 + 1e-14) throw domain_error("argument outside the closed matrix ball");
    if (s >= 1.0) return inf;
    const double a = -log_det_hpd(eye(p) - g * g.adjoint());
    const double b = d == 0.0 ? 0.0 : -2.0 * d * log_abs_det(eye(p) - g);
    return a + b + double(p) * H_d0(d);
}

// -log det(1 - a a^+)
inline double szego_term(const Mat& a) {
    if (sigma_max(a) >= 1.0) return inf;
    return -log_det_hpd(eye(a.rows()) - a * a.adjoint());
}

// log K_{n,k}^{(delta)} for real delta
inline double log_K(std::size_t n, std::size_t k, std::size_t p, double delta) {
    if (k + 2 > n) throw domain_error("log K needs k <= n - 2");
    const double N = double(n * p), P = double(p), kk = double(k);
    double s = -P * P * std::log(pi);
    for (std::size_t j = 1; j <= p; ++j) {
        const double J = double(j);
        s += 2 * std::lgamma(N - (kk + 1) * P + J + delta) - std::lgamma(N - (kk + 2) * P + J) -
             std::lgamma(N - (kk + 1) * P + J + 2 * delta);
    }
    return s;
}

// ------------------------------------------------------- matrix measures

struct MatrixAtom {
    double theta = 0.0;
    Mat w;
};

// density w.r.t. dtheta/2pi on [arc_lo, arc_hi], plus atoms
struct MatrixMeasure {
    std::size_t p = 1;
    double arc_lo = 0.0, arc_hi = two_pi;
    std::function<Mat(double)> density;
    std::vector<MatrixAtom> atoms;

    bool has_density() const { return static_cast<bool>(density); }

    Mat total(double tol = 1e-10) const {
        Mat s = Mat::Zero(p, p);
        if (has_density()) {
            for (std::size_t i = 0; i < p; ++i)
                for (std::size_t j = 0; j < p; ++j) {
                    const double re = quad::arc([&](double t) { return density(t)(i, j).real(); }, arc_lo, arc_hi, tol);
                    const double im = quad::arc([&](double t) { return density(t)(i, j).imag(); }, arc_lo, arc_hi, tol);
                    s(i, j) = cplx(re, im) / two_pi;
                }
        }
        for (const auto& a : atoms) s += a.w;
        return s;
    }
};

// diag(mu_1, ..., mu_p) on the common arc of the blocks
inline MatrixMeasure diagonal_measure(const std::vector<CircleMeasure>& mus) {
    MatrixMeasure m;
    m.p = mus.size();
    m.arc_lo = 0.0;
    m.arc_hi = two_pi;
    const auto copy = mus;
    m.density = [copy](double t) {
        Mat d = Mat::Zero(copy.size(), copy.size());
        for (std::size_t i = 0; i < copy.size(); ++i) d(i, i) = copy[i].density_at(t);
        return d;
    };
    for (std::size_t i = 0; i < mus.size(); ++i)
        for (const auto& a : mus[i].atoms) {
            Mat w = Mat::Zero(m.p, m.p);
            w(i, i) = a.w;
            m.atoms.push_back({a.theta, w});
        }
    return m;
}

// spectral matrix measure of (U, e_1..e_p): atoms at the eigenangles with
// weights (E^+ v)(E^+ v)^+
inline MatrixMeasure spectral_matrix_measure(const Mat& U, std::size_t p) {
    Eigen::ComplexEigenSolver<Mat> es(U);
    if (es.info() != Eigen::Success) throw numeric_error("eigen-solver failed");
    MatrixMeasure m;
    m.p = p;
    for (Eigen::Index k = 0; k < U.rows(); ++k) {
        Eigen::VectorXcd v = es.eigenvectors().col(k);
        v.normalize();
        const Eigen::VectorXcd e = v.head(Eigen::Index(p));
        m.atoms.push_back({wrap_angle(std::arg(es.eigenvalues()(k))), e * e.adjoint()});
    }
    return m;
}

// K(1 . ref | Sigma) = -int log det(W / w_ref) w_ref over the support of ref
inline double matrix_kl(const CircleMeasure& ref, const MatrixMeasure& S, double tol = 1e-10) {
    if (!ref.has_density()) throw domain_error("reference measure needs a density");
    if (!S.has_density()) return inf;
    bool singular = false;
    auto f = [&](double t) {
        const double r = ref.density(t);
        if (r <= 0.0) return 0.0;
        const double ld = log_det_hpd(S.density(t));
        if (!std::isfinite(ld)) {
            singular = true;
            return 0.0;
        }
        return -r * (ld - double(S.p) * std::log(r));
    };
    const double v = quad::arc(f, ref.arc_lo, ref.arc_hi, tol) / two_pi;
    return singular ? inf : v;
}

// -------------------------------------------------- matrix Schur functions

// f_k = T_{-a_k}(z f_{k+1}); tail: zero, or gamma_d-type phi(z) B with phi
// the scalar Geronimus function of the real constant c and B unitary
struct MatrixSchurFunction {
    std::size_t p = 1;
    std::vector<Mat> head;
    cplx c = 0.0;
    Mat B;  // used when c != 0

    static MatrixSchurFunction from(const MatrixCoefficientSequence& a, const Mat* tail_block = nullptr) {
        if (a.kind != Kind::plain) throw domain_error("expected plain coefficients");
        a.validate();
        MatrixSchurFunction f;
        f.p = a.p;
        f.head = a.head;
        for (auto& x : f.head)
            if (!(sigma_max(x) < 1.0)) throw domain_error("Schur parameters must lie in the open ball");
        if (a.tail == TailType::constant) {
            f.c = a.tail_value;
            f.B = eye(a.p);
        } else if (a.tail == TailType::none) {
            if (!tail_block) throw domain_error("matrix Schur function needs a zero or constant tail");
            f.B = *tail_block;
        }
        return f;
    }

    double gap_half_width() const { return c == 0.0 ? 0.0 : 2.0 * std::asin(std::min(1.0, std::abs(c))); }

    // boundary value z f(z) at z = e^{i theta}
    Mat zf_boundary(double theta) const {
        const cplx z = unit(theta);
        Mat ft = Mat::Zero(p, p);
        if (c != 0.0) {
            SchurFunction s;
            s.tail = SchurTail::geronimus;
            s.c = c;
            ft = detail::tail_boundary(s, theta) * B;
        }
        for (std::size_t j = head.size(); j-- > 0;) ft = mobius_T(Mat(-head[j]), Mat(z * ft));
        return z * ft;
    }

    // Re F with F = (1 - zf)^{-1}(1 + zf)
    Mat density(double theta) const {
        const Mat A = zf_boundary(theta);
        const Mat F = (eye(p) - A).inverse() * (eye(p) + A);
        return (F + F.adjoint()) / 2.0;
    }
};

// a.c. part of the measure of a matrix Schur function (atoms are not searched)
inline MatrixMeasure matrix_measure_from_schur(const MatrixSchurFunction& f) {
    MatrixMeasure m;
    m.p = f.p;
    const double h = f.gap_half_width();
    m.arc_lo = h;
    m.arc_hi = two_pi - h;
    m.density = [f](double t) { return f.density(t); };
    return m;
}

// ------------------------------------------------------ matrix verifiers

struct MatrixSpec {
    std::optional<MatrixCoefficientSequence> coeffs;
    std::optional<std::vector<CircleMeasure>> diagonal;  // diag(mu_1, ..., mu_p)
    std::size_t moment_count = 128;

    static MatrixSpec from(MatrixCoefficientSequence c) {
        MatrixSpec s;
        s.coeffs = std::move(c);
        return s;
    }
    static MatrixSpec from(std::vector<CircleMeasure> mus) {
        MatrixSpec s;
        s.diagonal = std::move(mus);
        return s;
    }
};

namespace detail {

// block sums of scalar reports, field by field
inline RateReport sum_reports(const std::vector<RateReport>& parts, const std::string& rule, double tol) {
    RateReport r;
    r.rule = rule;
    std::size_t len = 0;
    for (const auto& q : parts) len = std::max(len, q.rhs_partial_sums.size());
    r.rhs_partial_sums.assign(len, 0.0);
    for (const auto& q : parts) {
        r.kl_term += q.kl_term;
        r.lhs_total += q.lhs_total;
        r.rhs_total += q.rhs_total;
        r.rhs_tail_bound += q.rhs_tail_bound;
        for (auto o : q.outlier_plus) r.outlier_plus.push_back(o);
        for (auto o : q.outlier_minus) r.outlier_minus.push_back(o);
        for (std::size_t k = 0; k < len; ++k)
            r.rhs_partial_sums[k] += q.rhs_partial_sums.empty() ? 0.0
                                     : q.rhs_partial_sums[std::min(k, q.rhs_partial_sums.size() - 1)];
        for (const auto& n : q.notes) r.notes.push_back(n);
    }
    for (std::size_t k = 0; k < len; ++k) r.rhs_terms.push_back(k ? r.rhs_partial_sums[k] - r.rhs_partial_sums[k - 1] : r.rhs_partial_sums[0]);
    r.diagnostics["blocks"] = double(parts.size());
    r.settle(tol);
    return r;
}

}  // namespace detail

// K(1 . UNIF | Sigma) = sum -log det(1 - a_k a_k^+)
inline RateReport verify_matrix_szego(const MatrixSpec& spec, double tol = 1e-6) {
    if (spec.diagonal) {
        std::vector<RateReport> parts;
        for (const auto& mu : *spec.diagonal) {
            MeasureSpec s = MeasureSpec::from(mu);
            s.moment_count = spec.moment_count;
            parts.push_back(verify_szego_verblunsky(s, tol));
        }
        return detail::sum_reports(parts, "matrix-sv", tol);
    }
    if (!spec.coeffs) throw domain_error("empty matrix spec");
    MatrixCoefficientSequence a = *spec.coeffs;
    if (a.kind == Kind::deformed) a = alphas_from_matrix_gammas(a);
    a.validate();
    if (a.tail != TailType::zero) throw domain_error("matrix Szego check expects a zero tail");
    RateReport r;
    r.rule = "matrix-sv";
    double acc = 0.0;
    for (const auto& x : a.head) {
        r.rhs_terms.push_back(szego_term(x));
        r.rhs_partial_sums.push_back(acc += r.rhs_terms.back());
    }
    r.rhs_total = acc;
    const MatrixMeasure S = matrix_measure_from_schur(MatrixSchurFunction::from(a));
    r.kl_term = matrix_kl(uniform_measure(), S);
    r.lhs_total = r.kl_term;
    r.diagnostics["block_diagonal"] = is_block_diagonal(a) ? 1.0 : 0.0;
    r.settle(tol);
    return r;
}

// K(1 . HP_d | Sigma) + outliers = sum H_{d,p}(gamma_k).  Block-diagonal
// input decomposes into scalar checks (outliers included); other input uses
// the matrix density and is checked only when the gap carries no mass.
inline RateReport verify_matrix_hp(const MatrixSpec& spec, double d, double tol = 1e-4) {
    if (!(d >= 0.0)) throw domain_error("HP parameter must be nonnegative");
    if (d == 0.0) {
        RateReport r = verify_matrix_szego(spec, tol);
        r.rule = "matrix-hp";
        return r;
    }
    if (spec.diagonal) {
        std::vector<RateReport> parts;
        for (const auto& mu : *spec.diagonal) {
            MeasureSpec s = MeasureSpec::from(mu);
            s.moment_count = spec.moment_count;
            parts.push_back(verify_hp(s, d, tol));
        }
        return detail::sum_reports(parts, "matrix-hp", tol);
    }
    if (!spec.coeffs) throw domain_error("empty matrix spec");
    MatrixCoefficientSequence g = *spec.coeffs;
    if (g.kind == Kind::plain) g = deformed_matrix_gammas(g);
    g.validate();
    if (is_block_diagonal(g)) {
        std::vector<RateReport> parts;
        for (std::size_t i = 0; i < g.p; ++i) parts.push_back(verify_hp(MeasureSpec::from(diagonal_part(g, i)), d, tol));
        return detail::sum_reports(parts, "matrix-hp", tol);
    }
    RateReport r;
    r.rule = "matrix-hp";
    if (g.tail != TailType::constant || g.tail_value != gamma_d(d)) {
        // tail off gamma_d: coefficient side diverges
        r.lhs_total = r.rhs_total = inf;
        r.notes.push_back("deformed tail differs from gamma_d: both sides infinite");
        r.settle(tol);
        return r;
    }
    double acc = 0.0;
    for (const auto& x : g.head) {
        r.rhs_terms.push_back(H_dp(x, d));
        r.rhs_partial_sums.push_back(acc += r.rhs_terms.back());
    }
    r.rhs_total = acc;
    Mat B;
    const MatrixCoefficientSequence a = alphas_from_matrix_gammas(g, &B);
    MatrixCoefficientSequence a_closed = a;
    a_closed.tail = TailType::none;
    const MatrixSchurFunction f = MatrixSchurFunction::from(a_closed, &B);
    MatrixSchurFunction fc = f;
    fc.c = gamma_d(d);
    const MatrixMeasure S = matrix_measure_from_schur(fc);
    r.kl_term = matrix_kl(hp_ensemble(d).measure(), S);
    // mass defect: the a.c. part must carry the identity when there are no atoms
    const Mat tot = S.total(1e-8);
    const double defect = (tot - eye(g.p)).norm();
    r.diagnostics["ac_mass_defect"] = defect;
    r.lhs_total = r.kl_term;
    if (defect > 1e-6) {
        r.notes.push_back("a.c. part has mass defect: outlier atoms present, not resolved for non-block-diagonal input");
        r.lhs_total = std::numeric_limits<double>::quiet_NaN();
        r.status = Status::tolerance_exceeded;
        r.residual = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
    r.settle(tol);
    return r;
}

// ------------------------------------------------------- matrix sampling

// Haar unitary of size m: QR of a Ginibre matrix with the phases of R moved
// into Q
inline Mat haar_unitary(std::size_t m, RngStream& rng) {
    Mat Z(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) Z(i, j) = cplx(rng.normal(), rng.normal()) / std::sqrt(2.0);
    Eigen::HouseholderQR<Mat> qr(Z);
    Mat Q = qr.householderQ();
    const Mat R = qr.matrixQR();
    for (std::size_t j = 0; j < m; ++j) {
        const cplx r = R(j, j);
        Q.col(j) *= (r == 0.0) ? cplx(1.0) : r / std::abs(r);
    }
    return Q;
}

struct MatrixSampleOptions {
    std::size_t burn = 1000;
};

namespace detail {

// log of det(1 - g)^delta det(1 - g^+)^delta det(1 - g g^+)^m
inline double matrix_hp_log_target(const Mat& g, double m, double delta) {
    const std::size_t p = g.rows();
    const double ld = log_det_hpd(eye(p) - g * g.adjoint());  // -inf outside the open ball
    if (!std::isfinite(ld)) return -inf;
    double l = m * ld;
    if (delta != 0.0) l += 2.0 * delta * log_abs_det(eye(p) - g);
    return l;
}

// entrywise Gaussian random walk w.r.t. Lebesgue dM, started at gamma_d * 1
inline Mat matrix_hp_metropolis(std::size_t p, double m, double delta, RngStream& rng, std::size_t burn, ChainDiagnostics& dg) {
    const double x0 = delta / (m + delta);
    Mat g = -x0 * eye(p);
    double lp = matrix_hp_log_target(g, m, delta);
    double step = std::max(1e-3, (1.0 - x0) / std::sqrt(m + delta + 1.0));
    std::size_t acc = 0, win = 0;
    for (std::size_t i = 0; i < burn; ++i) {
        Mat w = g;
        for (std::size_t r = 0; r < p; ++r)
            for (std::size_t c = 0; c < p; ++c) w(r, c) += step * cplx(rng.normal(), rng.normal()) / std::sqrt(2.0);
        const double lw = matrix_hp_log_target(w, m, delta);
        if (std::log(rng.uniform()) < lw - lp) g = w, lp = lw, ++acc, ++win;
        if ((i + 1) % 50 == 0) {
            const double rate = win / 50.0;
            if (rate < 0.25) step *= 0.7;
            if (rate > 0.35) step *= 1.4;
            win = 0;
        }
    }
    dg.steps += burn;
    dg.acceptance += double(acc) / double(burn);
    return g;
}

// Hua-Pickrell law |det(1 - U)|^{2 delta} on U(p): walk U -> U exp(i eps H)
inline Mat unitary_hp_metropolis(std::size_t p, double delta, RngStream& rng, std::size_t burn) {
    Mat U = -eye(p);
    auto lt = [&](const Mat& V) { return 2.0 * delta * log_abs_det(eye(p) - V); };
    double lp = lt(U), step = 0.5;
    std::size_t win = 0;
    for (std::size_t i = 0; i < burn; ++i) {
        Mat H(p, p);
        for (std::size_t r = 0; r < p; ++r)
            for (std::size_t c = 0; c < p; ++c) H(r, c) = cplx(rng.normal(), rng.normal());
        H = (H + H.adjoint()) / 2.0;
        Eigen::SelfAdjointEigenSolver<Mat> es(H);
        Eigen::VectorXcd ph(p);
        for (std::size_t j = 0; j < p; ++j) ph(j) = unit(step * es.eigenvalues()(j));
        const Mat W = U * es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
        const double lw = lt(W);
        if (std::log(rng.uniform()) < lw - lp) U = W, lp = lw, ++win;
        if ((i + 1) % 50 == 0) {
            const double rate = win / 50.0;
            if (rate < 0.25) step *= 0.7;
            if (rate > 0.35) step = std::min(step * 1.4, pi);
            win = 0;
        }
    }
    return U;
}

}  // namespace detail

// gamma_k alone (k <= n - 2); the coefficients are independent
inline Mat sample_matrix_gamma(std::size_t n, std::size_t k, std::size_t p, double d, RngStream& rng,
                               ChainDiagnostics* diag = nullptr, MatrixSampleOptions opt = {}) {
    if (n <= 2 || k + 2 > n) throw domain_error("need n > 2 and k <= n - 2");
    if (!(d >= 0.0)) throw domain_error("HP parameter must be nonnegative");
    if (d == 0.0) return haar_unitary((n - k) * p, rng).topLeftCorner(p, p);
    ChainDiagnostics local;
    ChainDiagnostics& dg = diag ? *diag : local;
    dg = {};
    dg.method = "metropolis";
    dg.acceptance = 0.0;
    return detail::matrix_hp_metropolis(p, double((n - k - 2) * p), double(n * p) * d, rng, opt.burn, dg);
}

// deformed matrix coefficients gamma_0 .. gamma_{n-1} of HP_delta on U(np),
// delta = n p d.  d = 0 is exact: gamma_k is the p x p corner of a Haar
// unitary of size (n-k)p, and gamma_{n-1} is Haar on U(p).
inline MatrixCoefficientSequence sample_matrix_coeffs(std::size_t n, std::size_t p, double d, RngStream& rng,
                                                      ChainDiagnostics* diag = nullptr, MatrixSampleOptions opt = {}) {
    if (n <= 2) throw domain_error("matrix sampler needs n > 2");
    if (!(d >= 0.0)) throw domain_error("HP parameter must be nonnegative");
    ChainDiagnostics local;
    ChainDiagnostics& dg = diag ? *diag : local;
    dg = {};
    MatrixCoefficientSequence g;
    g.kind = Kind::deformed;
    g.p = p;
    g.tail = TailType::none;
    const double delta = double(n * p) * d;
    if (d == 0.0) {
        for (std::size_t k = 0; k + 1 < n; ++k) g.head.push_back(haar_unitary((n - k) * p, rng).topLeftCorner(p, p));
        g.head.push_back(haar_unitary(p, rng));
        return g;
    }
    dg.method = "metropolis";
    dg.acceptance = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k)
        g.head.push_back(detail::matrix_hp_metropolis(p, double((n - k - 2) * p), delta, rng, opt.burn, dg));
    dg.acceptance /= double(n - 1);
    g.head.push_back(detail::unitary_hp_metropolis(p, delta, rng, opt.burn));
    if (dg.acceptance < 0.1 || dg.acceptance > 0.6) {
        dg.warning = true;
        dg.message = "acceptance outside the tuned range";
    }
    return g;
}

}  // namespace opuc
