#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <vector>

#include "coefficients.hpp"
#include "core.hpp"
#include "measure.hpp"

namespace opuc {

using CMatrix = Eigen::MatrixXcd;

// Band storage: entry (i, j) kept when -lower <= j - i <= upper.
class BandedUnitary {
public:
    BandedUnitary() = default;
    BandedUnitary(std::size_t n, std::size_t lower, std::size_t upper)
        : n_(n), lo_(std::min(lower, n ? n - 1 : 0)), up_(std::min(upper, n ? n - 1 : 0)),
          data_(n * (lo_ + up_ + 1), cplx(0.0)) {}

    std::size_t n() const { return n_; }
    std::size_t lower() const { return lo_; }
    std::size_t upper() const { return up_; }

    bool in_band(std::size_t i, std::size_t j) const {
        return (j + lo_ >= i) && (i + up_ >= j) && i < n_ && j < n_;
    }
    cplx operator()(std::size_t i, std::size_t j) const {
        return in_band(i, j) ? data_[i * (lo_ + up_ + 1) + (j + lo_ - i)] : cplx(0.0);
    }
    void set(std::size_t i, std::size_t j, cplx v) {
        if (!in_band(i, j)) throw domain_error("entry outside band");
        data_[i * (lo_ + up_ + 1) + (j + lo_ - i)] = v;
    }

    CMatrix dense() const {
        CMatrix m = CMatrix::Zero(n_, n_);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = (i > lo_ ? i - lo_ : 0); j < n_ && j <= i + up_; ++j) m(i, j) = (*this)(i, j);
        return m;
    }

    static BandedUnitary from_dense(const CMatrix& m, std::size_t lower, std::size_t upper) {
        BandedUnitary b(m.rows(), lower, upper);
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                if (b.in_band(i, j))
                    b.set(i, j, m(i, j));
                else if (std::abs(m(i, j)) > 1e-13)
                    throw domain_error("nonzero entry outside declared band");
            }
        return b;
    }

    double unitarity_defect() const {
        CMatrix m = dense();
        return (m.adjoint() * m - CMatrix::Identity(n_, n_)).norm();
    }

private:
    std::size_t n_ = 0, lo_ = 0, up_ = 0;
    std::vector<cplx> data_;
};

// C = L M with L = Theta_0 + Theta_2 + ..., M = 1 + Theta_1 + Theta_3 + ...,
// Theta_k = [[conj a_k, rho_k], [rho_k, -a_k]]; the last index n-1 gets the
// 1x1 block conj(a_{n-1}).
inline BandedUnitary cmv_assemble(const CoefficientSequence& alphas, std::size_t n) {
    if (alphas.kind != Kind::plain) throw domain_error("expected plain coefficients");
    if (n == 0) throw domain_error("empty CMV matrix");
    cvec a(n);
    for (std::size_t k = 0; k < n; ++k) a[k] = alphas.at(k);
    for (std::size_t k = 0; k + 1 < n; ++k)
        if (!(std::abs(a[k]) < 1.0)) throw domain_error("coefficient before the last must lie in the open disk");
    if (std::abs(std::abs(a[n - 1]) - 1.0) > 1e-12) throw domain_error("invalid final coefficient: must be unimodular");
    a[n - 1] /= std::abs(a[n - 1]);

    CMatrix L = CMatrix::Zero(n, n), M = CMatrix::Zero(n, n);
    M(0, 0) = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        CMatrix& T = (k % 2 == 0) ? L : M;
        if (k + 1 < n) {
            const double rho = std::sqrt(1.0 - std::norm(a[k]));
            T(k, k) = std::conj(a[k]);
            T(k, k + 1) = rho;
            T(k + 1, k) = rho;
            T(k + 1, k + 1) = -a[k];
        } else {
            T(k, k) = std::conj(a[k]);
        }
    }
    return BandedUnitary::from_dense(L * M, 2, 2);
}

// atoms at the eigenangles, weights |<psi_k, e_1>|^2
inline CircleMeasure spectral_measure_finite(const BandedUnitary& U) {
    const CMatrix m = U.dense();
    Eigen::ComplexSchur<CMatrix> schur(m);
    if (schur.info() != Eigen::Success) throw numeric_error("eigen-solver failed");
    const CMatrix& T = schur.matrixT();
    const CMatrix& Q = schur.matrixU();
    CircleMeasure mu;
    mu.density = nullptr;
    for (Eigen::Index k = 0; k < T.rows(); ++k) {
        const double w = std::norm(Q(0, k));
        if (w <= 0.0) continue;
        mu.atoms.push_back({wrap_angle(std::arg(T(k, k))), w});
    }
    std::sort(mu.atoms.begin(), mu.atoms.end(), [](const Atom& x, const Atom& y) { return x.theta < y.theta; });
    return mu;
}

inline std::vector<double> eigenangles(const CMatrix& m) {
    Eigen::ComplexEigenSolver<CMatrix> es(m, false);
    if (es.info() != Eigen::Success) throw numeric_error("eigen-solver failed");
    std::vector<double> out;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) out.push_back(wrap_angle(std::arg(es.eigenvalues()(k))));
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace opuc
