#include <catch_amalgamated.hpp>

#include "opuc/sampling.hpp"

using namespace opuc;
using Catch::Approx;

TEST_CASE("streams are reproducible and distinct", "[sampling]") {
    RngStream a(42, 0), b(42, 0), c(42, 1);
    for (int i = 0; i < 10; ++i) {
        const double x = a.uniform();
        CHECK(x == b.uniform());
        CHECK(x != c.uniform());
    }
}

TEST_CASE("CUE coefficients", "[sampling]") {
    RngStream r(1);
    const std::size_t n = 20;
    std::vector<double> mean(n, 0.0);
    const int reps = 4000;
    for (int i = 0; i < reps; ++i) {
        const auto a = sample_cue_alphas(n, r);
        REQUIRE(a.head.size() == n);
        CHECK(std::abs(a.head.back()) == Approx(1.0).epsilon(1e-14));
        for (std::size_t k = 0; k < n; ++k) mean[k] += std::norm(a.head[k]) / reps;
    }
    // E|alpha_k|^2 = 1/(n - k)
    for (std::size_t k : {0u, 5u, 10u, 15u}) CHECK(mean[k] == Approx(1.0 / double(n - k)).epsilon(0.08));
}

TEST_CASE("HP deformed coefficients", "[sampling]") {
    RngStream r(2);
    ChainDiagnostics dg;
    const auto g = sample_hp_gammas(30, 1.0, r, &dg);
    CHECK(g.kind == Kind::deformed);
    CHECK(std::abs(g.head.back()) == Approx(1.0).epsilon(1e-14));
    for (std::size_t k = 0; k + 1 < g.head.size(); ++k) CHECK(std::abs(g.head[k]) < 1.0);

    // d = 0 matches CUE in law (two-sample KS on |gamma_0|)
    std::vector<double> x, y;
    for (int i = 0; i < 2000; ++i) {
        x.push_back(std::abs(sample_hp_gammas(10, 0.0, r).head[0]));
        y.push_back(std::abs(sample_cue_alphas(10, r).head[0]));
    }
    CHECK(ks_two_sample(x, y).p_value > 0.001);

    // rejection regime: gamma_0 mean near gamma_d for moderate n
    double s = 0;
    const int reps = 2000;
    for (int i = 0; i < reps; ++i) s += sample_hp_gammas(12, 1.0, r).head[0].real() / reps;
    CHECK(s < 0.0);
}

TEST_CASE("acceptance of the rejection sampler", "[sampling]") {
    CHECK(detail::hp_acceptance(5.0, 0.0) == Approx(1.0));
    CHECK(detail::hp_acceptance(50.0, 50.0) < detail::hp_acceptance(5.0, 5.0));
}

TEST_CASE("Dirichlet weights", "[sampling]") {
    RngStream r(3);
    const auto w = sample_weights(7, r);
    double s = 0;
    for (double x : w) {
        CHECK(x > 0.0);
        s += x;
    }
    CHECK(s == Approx(1.0).epsilon(1e-14));
}

TEST_CASE("KS tools", "[sampling]") {
    RngStream r(4);
    std::vector<double> u;
    for (int i = 0; i < 5000; ++i) u.push_back(r.uniform());
    const auto k = ks_one_sample(u, [](double x) { return std::clamp(x, 0.0, 1.0); });
    CHECK(k.distance < 0.03);
    CHECK(k.p_value > 0.001);
    CHECK(kolmogorov_survival(0.0) == Approx(1.0));
    CHECK(kolmogorov_survival(1.36) == Approx(0.049).margin(0.002));
    const auto shifted = ks_one_sample(u, [](double x) { return std::clamp(x - 0.1, 0.0, 1.0); });
    CHECK(shifted.p_value < 1e-6);
}

TEST_CASE("equilibrium CDF", "[sampling]") {
    for (auto e : {hp_ensemble(1.0), gw_ensemble(2.0), gw_ensemble(0.5)}) {
        const EquilibriumCdf F(e);
        CHECK(F(0.0) == Approx(0.0).margin(1e-12));
        // angles are read modulo 2 pi
        CHECK(F(two_pi - 1e-12) == Approx(1.0).margin(1e-9));
        double prev = 0;
        for (int i = 1; i < 100; ++i) {
            const double v = F(two_pi * i / 100);
            CHECK(v >= prev - 1e-15);
            prev = v;
        }
    }
    // HP is symmetric about pi
    CHECK(EquilibriumCdf(hp_ensemble(1.0))(pi) == Approx(0.5).margin(1e-9));
}

TEST_CASE("autocorrelation time of white noise is about 1", "[sampling]") {
    RngStream r(5);
    std::vector<double> x;
    for (int i = 0; i < 20000; ++i) x.push_back(r.normal());
    CHECK(detail::integrated_autocorrelation(x) == Approx(1.0).margin(0.15));
}

TEST_CASE("GW chain", "[sampling]") {
    RngStream r(6);
    ChainDiagnostics dg;
    const auto draws = sample_gw_alphas(40, 0.5, 50, r, &dg);
    REQUIRE(draws.size() == 50);
    CHECK(dg.method == "metropolis");
    CHECK(dg.acceptance > 0.1);
    CHECK(dg.acceptance < 0.7);
    double tr = 0;
    for (const auto& a : draws) tr += cmv_re_trace(a.head) / 40.0 / 50.0;
    // ungapped: E Re tr U / n -> g/2
    CHECK(tr == Approx(0.25).margin(0.03));
    // g = 0 is exact CUE
    CHECK(sample_gw_alphas(10, 0.0, 3, r, &dg).size() == 3);
    CHECK(dg.method == "exact");
}

TEST_CASE("empirical spectral distribution of CUE", "[sampling]") {
    RngStream r(7);
    const auto rep = empirical_esd_check(hp_ensemble(0.0), 100, 5, r);
    CHECK(rep.eigenvalues == 500);
    CHECK(rep.ks_distance < 0.05);
    CHECK(rep.support_violation_rate == 0.0);
}
