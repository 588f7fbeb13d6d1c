// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cstdio>
#include <random>
#include <sstream>

#include "opuc/mopuc.hpp"
#include "opuc/sumrules.hpp"

using namespace opuc;

namespace {

using clk = std::chrono::steady_clock;

double seconds_since(clk::time_point t0) { return std::chrono::duration<double>(clk::now() - t0).count(); }

struct Criterion {
    int id;
    bool ok = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail << " [failed: " << what << "]";
        }
    }
};

int failures = 0;

void report(Criterion& c) {
    std::printf("%s criterion %d:%s\n", c.ok ? "PASS" : "FAIL", c.id, c.detail.str().c_str());
    std::fflush(stdout);
    if (!c.ok) ++failures;
}

cvec random_alphas(std::mt19937_64& g, std::size_t n, double rmax) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    cvec a;
    for (std::size_t k = 0; k < n; ++k) a.push_back(rmax * std::sqrt(u(g)) * unit(two_pi * u(g)));
    return a;
}

// the fixed Bernstein-Szego suite shared by criteria 1 and 3
std::vector<cvec> bs_suite() {
    std::mt19937_64 g(20240601);
    std::uniform_int_distribution<int> len(1, 8);
    std::vector<cvec> out;
    for (int i = 0; i < 50; ++i) out.push_back(random_alphas(g, std::size_t(len(g)), 0.8));
    return out;
}

Mat rball(std::size_t p, double s, RngStream& r) {
    Mat a(p, p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) a(i, j) = cplx(r.normal(), r.normal());
    return a * (s * r.uniform() / sigma_max(a));
}

Mat one(cplx x) { return Mat::Constant(1, 1, x); }

void criterion1() {
    Criterion c{1};
    const auto t0 = clk::now();
    double worst = 0;
    for (const auto& a : bs_suite()) {
        const auto r = verify_szego_verblunsky(MeasureSpec::from(plain(a)));
        worst = std::max(worst, r.residual);
        c.require(r.residual <= 1e-6, "residual");
    }
    const double t = seconds_since(t0);
    c.require(t < 60.0, "runtime");
    c.detail << " 50 Bernstein-Szego cases, max residual " << worst << ", " << t << " s";
    report(c);
}

void criterion2() {
    Criterion c{2};
    std::mt19937_64 g(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0, worst_out = 0;
    for (double d : {0.5, 1.0, 2.0}) {
        const double gd = gamma_d(d);
        for (int rep = 0; rep < 4; ++rep) {
            cvec h;
            const std::size_t m = 1 + std::size_t(rep) % 5;
            for (std::size_t k = 0; k <= m; ++k) h.push_back(gd + 0.05 * std::sqrt(u(g)) * unit(two_pi * u(g)));
            const auto r = verify_hp(MeasureSpec::from(deformed(h, TailType::constant, gd)), d);
            worst = std::max(worst, r.residual);
            c.require(r.residual <= 1e-4 && r.outlier_sum() == 0.0, "perturbed d=" + std::to_string(d));
        }
        const auto o = verify_hp(MeasureSpec::from(single_outlier_case(d)), d, 1e-3);
        worst_out = std::max(worst_out, o.residual);
        c.require(o.outlier_minus.size() + o.outlier_plus.size() == 1, "one outlier d=" + std::to_string(d));
        c.require(o.residual <= 1e-3, "outlier residual d=" + std::to_string(d));
    }
    c.detail << " perturbed max residual " << worst << ", single-outlier max residual " << worst_out;
    report(c);
}

void criterion3() {
    Criterion c{3};
    double worst = 0, agree = 0;
    for (double g : {1.0, 0.5})
        for (const auto& a : bs_suite()) {
            const auto r = verify_gw_strong(MeasureSpec::from(plain(a)), g);
            worst = std::max(worst, r.residual);
            c.require(r.residual <= 1e-6, "residual g=" + std::to_string(g));
            const GwRhs f = gw_rhs(a, g);
            agree = std::max(agree, std::abs(f.simon_form - f.trace_form));
        }
    c.require(agree <= 1e-12, "RHS forms");
    c.detail << " max residual " << worst << ", RHS forms differ by at most " << agree;
    report(c);
}

void criterion4() {
    Criterion c{4};
    // frozen from tests/oracles/oracle.py
    const auto hp = hp_ensemble(1.0), gw = gw_ensemble(2.0);
    const double eh = energy_functional(hp.measure(), [&](double t) { return hp.potential(t); }).value;
    const double eg = energy_functional(gw.measure(), [&](double t) { return gw.potential(t); }).value;
    c.require(std::abs(eh - -0.7848722156490933) <= 1e-6 && std::abs(hp.F - -0.7848722156490933) <= 1e-6, "HP energy");
    c.require(std::abs(eg - -0.9034264097095962) <= 1e-6 && std::abs(gw.F - -0.9034264097095962) <= 1e-6, "GW energy");
    double flat = 0;
    std::vector<EnsembleSpec> ens{hp_ensemble(0.5), hp_ensemble(1.0), hp_ensemble(2.0), gw_ensemble(2.0), gw_ensemble(-2.0)};
    for (const auto& e : ens) {
        const double lo = e.arc_lo, hi = e.arc_hi < e.arc_lo ? e.arc_hi + two_pi : e.arc_hi;
        for (int i = 1; i < 16; ++i) {
            const double t = lo + (hi - lo) * i / 16;
            flat = std::max(flat, std::abs(effective_potential(t, e, EffMethod::direct_double_integral) - 2 * e.xi));
        }
    }
    c.require(flat <= 1e-6, "flatness");
    c.detail << " E(HP,1) = " << eh << ", E(GW,2) = " << eg << ", max flatness defect " << flat;
    report(c);
}

void criterion5() {
    Criterion c{5};
    // frozen from tests/oracles/oracle.py (mpmath Levinson on the moments)
    const double g03[] = {0.15, -0.023017902813299231, 0.003534031413612565, -0.0005426008668216316,
                          8.3308763533388628e-5, -1.2790893922239187e-5, 1.9638626288238205e-6};
    const double g07[] = {0.35, -0.13960113960113958, 0.056788079470198662, -0.023175451974401784,
                          0.0094630812022116331, -0.0038643443002703468, 0.0015780673920504958};
    double e = 0;
    for (int k = 0; k <= 6; ++k) {
        e = std::max(e, std::abs(gw_equilibrium_alphas(0.3, k) - g03[k]));
        e = std::max(e, std::abs(gw_equilibrium_alphas(0.7, k) - g07[k]));
    }
    c.require(e <= 1e-8, "GW closed form");
    double eh = 0;
    for (double d : {0.5, 1.0, 2.0}) {
        const auto a = coefficients_of(hp_equilibrium(d), 8);
        c.require(a.head.size() >= 6, "HP moments resolved");
        for (cplx x : a.head) eh = std::max(eh, std::abs(x - gamma_d(d)));
    }
    c.require(eh <= 1e-7, "HP equilibrium coefficients");
    const auto z = verify_gw_strong(MeasureSpec::from(gw_equilibrium(-1.0)), 1.0);
    c.require(std::abs(z.lhs_total) <= 1e-6 && z.residual <= 1e-6, "g = 1 zero residual");
    c.detail << " GW alpha error " << e << ", HP alpha - gamma_d " << eh << ", g=1 reference rate " << z.lhs_total;
    report(c);
}

void criterion6() {
    Criterion c{6};
    std::mt19937_64 g(5);
    std::uniform_int_distribution<int> len(1, 10);
    double e_det = 0;
    for (int rep = 0; rep < 120; ++rep) {
        cvec a = random_alphas(g, std::size_t(len(g) - 1), 0.95);
        a.push_back(unit(two_pi * std::uniform_real_distribution<double>(0, 1)(g)));
        const CMatrix C = cmv_assemble(plain(a, TailType::none), a.size()).dense();
        const cplx lhs = (CMatrix::Identity(C.rows(), C.cols()) - C).determinant();
        cplx rhs = 1.0;
        for (cplx x : deformed_from_alphas(plain(a, TailType::none)).head) rhs *= 1.0 - x;
        e_det = std::max(e_det, std::abs(lhs - rhs));
    }
    c.require(e_det <= 1e-11, "det(1 - CMV)");

    RngStream r(3);
    double e_ner = 0, e_id = 0;
    for (int t = 0; t < 120; ++t) {
        const std::size_t p = 1 + t % 3, n = 2 + t % 3;
        const Mat U = haar_unitary(n * p, r);
        const auto cs = neretin_coeffs(U, p);
        const cplx d1 = (Mat::Identity(n * p, n * p) - U).determinant();
        cplx d2 = 1.0;
        for (const auto& x : cs) d2 *= (eye(p) - x).determinant();
        e_ner = std::max(e_ner, std::abs(d1 - d2) / std::max(1.0, std::abs(d1)));
        std::vector<Mat> A;
        for (std::size_t k = 0; k + 1 < n; ++k) A.push_back(rball(p, 0.9, r));
        A.push_back(haar_unitary(p, r));
        const auto ms = matrix_plain(A, TailType::none);
        const auto cg = neretin_coeffs(ggt_dense(ms, n), p);
        const auto gg = deformed_matrix_gammas(ms);
        for (std::size_t k = 0; k < n; ++k) e_id = std::max(e_id, (cg[k] - gg.head[k]).norm());
    }
    c.require(e_ner <= 1e-10, "Neretin determinant");
    c.require(e_id <= 1e-10, "Neretin coefficients of GGT");

    RngStream s(11);
    double e_obs = 0, e_inv = 0;
    for (int t = 0; t < 200; ++t) {
        const std::size_t p = 1 + t % 3;
        const Mat a = rball(p, 0.95, s), u = haar_unitary(p, s), z = rball(p, 0.9, s);
        const Mat lhs = -a + defect_right(a) * (eye(p) - u * a.adjoint()).inverse() * u * defect_left(a);
        e_obs = std::max(e_obs, (lhs - mobius_T(a, u)).norm());
        e_inv = std::max(e_inv, (mobius_T(a, z).inverse() - mobius_T(Mat(a.adjoint()), Mat(z.inverse()))).norm() /
                                    std::max(1.0, mobius_T(a, z).inverse().norm()));
    }
    c.require(e_obs <= 1e-12, "unitary Mobius image");
    c.require(e_inv <= 1e-10, "Mobius inverse");
    c.detail << " det " << e_det << ", Neretin det " << e_ner << ", GGT coefficients " << e_id << ", Mobius " << e_obs
             << ", inverse " << e_inv;
    report(c);
}

void criterion7() {
    Criterion c{7};
    std::mt19937_64 g(9);
    double e1 = 0, e2 = 0, e3 = 0;
    for (int rep = 0; rep < 10; ++rep) {
        const cvec al = random_alphas(g, 4, 0.8);
        std::vector<Mat> A;
        for (cplx x : al) A.push_back(one(x));
        const auto m = verify_matrix_szego(MatrixSpec::from(matrix_plain(A)));
        const auto s = verify_szego_verblunsky(MeasureSpec::from(plain(al)));
        e1 = std::max({e1, std::abs(m.lhs_total - s.lhs_total), std::abs(m.rhs_total - s.rhs_total)});
        const double d = 1.0, gd = gamma_d(d);
        cvec h;
        std::vector<Mat> H;
        for (cplx x : random_alphas(g, 2, 0.04)) {
            h.push_back(gd + x);
            H.push_back(one(gd + x));
        }
        const auto mh = verify_matrix_hp(MatrixSpec::from(matrix_deformed(H, TailType::constant, gd)), d);
        const auto sh = verify_hp(MeasureSpec::from(deformed(h, TailType::constant, gd)), d);
        e1 = std::max({e1, std::abs(mh.lhs_total - sh.lhs_total), std::abs(mh.rhs_total - sh.rhs_total)});
        const auto spec = MeasureSpec::from(plain(al));
        const auto h0 = verify_hp(spec, 0.0), sv = verify_szego_verblunsky(spec);
        e2 = std::max({e2, std::abs(h0.lhs_total - sv.lhs_total), std::abs(h0.rhs_total - sv.rhs_total)});
    }
    for (double d : {0.5, 1.0}) {
        const double gd = gamma_d(d);
        const auto s1 = deformed({gd + 0.03, gd}, TailType::constant, gd);
        const auto s2 = deformed({cplx(gd, 0.02), gd - 0.01}, TailType::constant, gd);
        const auto m = verify_matrix_hp(MatrixSpec::from(block_diagonal({s1, s2})), d);
        const auto a = verify_hp(MeasureSpec::from(s1), d), b = verify_hp(MeasureSpec::from(s2), d);
        e3 = std::max({e3, std::abs(m.lhs_total - a.lhs_total - b.lhs_total), std::abs(m.rhs_total - a.rhs_total - b.rhs_total)});
    }
    c.require(e1 <= 1e-12, "p = 1 pipeline");
    c.require(e2 <= 1e-12, "HP at d = 0");
    c.require(e3 <= 1e-6, "block diagonal");
    c.detail << " p=1 gap " << e1 << ", d=0 gap " << e2 << ", block-diagonal gap " << e3;
    report(c);
}

void criterion8() {
    Criterion c{8};
    double lo = inf, hi = 0, ex_err = 0;
    for (double d : {0.5, 1.0, 2.0}) {
        const auto e = hp_envelope_check(d, 0.01);
        c.require(e.holds(0.1), "envelope d=" + std::to_string(d));
        lo = std::min(lo, e.min_lower_ratio);
        hi = std::max(hi, e.max_upper_ratio);
        const double x = hp_edge_exponent(d);
        ex_err = std::max(ex_err, std::abs(x - 1.5));
        c.require(std::abs(x - 1.5) <= 0.05, "edge exponent d=" + std::to_string(d));
    }
    c.detail << " H/lower >= " << lo << ", H/upper <= " << hi << ", |exponent - 1.5| <= " << ex_err;
    report(c);
}

void criterion9() {
    Criterion c{9};
    auto t0 = clk::now();
    RngStream r(9001);
    const auto cue = empirical_esd_check(hp_ensemble(0.0), 200, 20, r);
    c.require(cue.ks_distance < 0.02, "CUE ESD");
    const double t_cue = seconds_since(t0);

    t0 = clk::now();
    RngStream r2(9002);
    const auto hp = empirical_esd_check(hp_ensemble(1.0), 200, 10, r2);
    c.require(hp.ks_distance < 0.05, "HP ESD");
    const double t_hp = seconds_since(t0);

    t0 = clk::now();
    RngStream r3(9003);
    const auto gw = empirical_esd_check(gw_ensemble(2.0), 200, 10, r3);
    c.require(gw.ks_distance < 0.05, "GW ESD");
    const double t_gw = seconds_since(t0);

    t0 = clk::now();
    RngStream r4(9004);
    const int reps = 400;
    cplx mean = 0;
    std::vector<cplx> xs;
    for (int i = 0; i < reps; ++i) {
        xs.push_back(sample_hp_gammas(100, 1.0, r4).head[0]);
        mean += xs.back() / double(reps);
    }
    double vr = 0, vi = 0;
    for (cplx x : xs) {
        vr += sq(x.real() - mean.real()) / (reps - 1);
        vi += sq(x.imag() - mean.imag()) / (reps - 1);
    }
    const double se_r = std::sqrt(vr / reps), se_i = std::sqrt(vi / reps);
    const double gd = gamma_d(1.0);
    c.require(std::abs(mean.real() - gd) <= 3 * se_r && std::abs(mean.imag()) <= 3 * se_i, "gamma_0 mean");
    const double t_mean = seconds_since(t0);

    // normalising constant of the matrix gamma_0 law against p H_d(0)
    const std::size_t n = 400, p = 2;
    const double d = 1.0, N = double(n * p);
    const double rate = -log_K(n, 0, p, N * d) / N, target = double(p) * H_d0(d);
    const double rel = std::abs(rate - target) / target;
    c.require(rel <= 0.02, "log K within 2%");

    for (double t : {t_cue, t_hp, t_gw, t_mean}) c.require(t < 300.0, "suite runtime");
    c.detail << " KS CUE " << cue.ks_distance << " (" << t_cue << " s), KS HP " << hp.ks_distance << " (" << t_hp
             << " s), KS GW " << gw.ks_distance << " (" << t_gw << " s), mean gamma_0 " << mean.real() << "+" << mean.imag()
             << "i vs " << gd << " (SE " << se_r << ", " << t_mean << " s), -(1/np) log K = " << rate << " vs p H_d(0) = "
             << target << " (rel. error " << 100 * rel << "%)";
    report(c);
}

void criterion10() {
    Criterion c{10};
    const auto a = probe_gw_gapped(MeasureSpec::from(gw_equilibrium(-2.0)), -2.0);
    const auto b = probe_gw_ldp(plain({0.1, cplx(0, 0.2), -0.15}), 0.5);
    c.require(a.label.find("CONJECTURE") != std::string::npos, "gapped probe label");
    c.require(b.label.find("CONJECTURE") != std::string::npos, "LDP probe label");
    c.detail << " gapped probe lhs " << a.lhs_total << " rhs " << a.rhs_total << " [" << a.label << "]; LDP probe lhs "
             << b.lhs_total << " rhs " << b.rhs_total << " [" << b.label << "]";
    report(c);
}

}  // namespace

int main() {
    std::setvbuf(stdout, nullptr, _IONBF, 0);
    const auto t0 = clk::now();
    void (*all[])() = {criterion1, criterion2, criterion3, criterion4, criterion5,
                       criterion6, criterion7, criterion8, criterion9, criterion10};
    for (int i = 0; i < 10; ++i) {
        try {
            all[i]();
        } catch (const std::exception& e) {
            std::printf("FAIL criterion %d: exception %s\n", i + 1, e.what());
            ++failures;
        }
    }
    std::printf("%d criteria failed, %.1f s total\n", failures, seconds_since(t0));
    return failures == 0 ? 0 : 1;
}
