#include <catch_amalgamated.hpp>

#include <random>

#include "opuc/io.hpp"

using namespace opuc;
using Catch::Approx;

namespace {

cvec random_alphas(std::mt19937_64& g, std::size_t n, double rmax) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    cvec a;
    for (std::size_t k = 0; k < n; ++k) a.push_back(rmax * std::sqrt(u(g)) * unit(two_pi * u(g)));
    return a;
}

}  // namespace

TEST_CASE("Szego-Verblunsky on Bernstein-Szego measures", "[sumrules]") {
    // frozen from tests/oracles/oracle.py: scipy integral of -log w
    auto r = verify_szego_verblunsky(MeasureSpec::from(plain({0.6})));
    CHECK(r.status == Status::verified);
    CHECK(r.lhs_total == Approx(0.44628710262841914).margin(1e-10));
    r = verify_szego_verblunsky(MeasureSpec::from(plain({cplx(0.5, 0.3), cplx(-0.7, 0.1), cplx(0.2, -0.75)})));
    CHECK(r.lhs_total == Approx(2.031222969409353).margin(1e-9));
    CHECK(r.residual <= 1e-6);

    std::mt19937_64 g(21);
    for (int rep = 0; rep < 10; ++rep) {
        const auto rr = verify_szego_verblunsky(MeasureSpec::from(plain(random_alphas(g, 6, 0.8))));
        CHECK(rr.residual <= 1e-6);
    }
}

TEST_CASE("Szego-Verblunsky: infinite sides agree", "[sumrules]") {
    // a finitely supported measure: both sides infinite
    const auto r = verify_szego_verblunsky(MeasureSpec::from(plain({0.3, unit(1.0)}, TailType::none)));
    CHECK(r.finiteness_agrees);
    CHECK(r.status != Status::verified);
    CHECK(std::isinf(r.lhs_total));
    CHECK(std::isinf(r.rhs_total));
}

TEST_CASE("HP sum rule: equilibrium, perturbation, single outlier", "[sumrules]") {
    for (double d : {0.5, 1.0, 2.0}) {
        const double gd = gamma_d(d);
        auto eq = verify_hp(MeasureSpec::from(deformed({}, TailType::constant, gd)), d);
        CHECK(eq.lhs_total == Approx(0.0).margin(1e-8));
        CHECK(eq.residual <= 1e-8);
        auto pert = verify_hp(MeasureSpec::from(deformed({gd + 0.03, cplx(gd, 0.04), gd - 0.05}, TailType::constant, gd)), d);
        CHECK(pert.status == Status::verified);
        CHECK(pert.residual <= 1e-4);
        CHECK(pert.outlier_sum() == 0.0);
    }
    const auto c = single_outlier_case(1.0);
    const auto out = verify_hp(MeasureSpec::from(c), 1.0, 1e-3);
    CHECK(out.outlier_minus.size() + out.outlier_plus.size() == 1);
    CHECK(out.residual <= 1e-3);
}

TEST_CASE("HP at d = 0 coincides with Szego-Verblunsky", "[sumrules]") {
    const auto spec = MeasureSpec::from(plain({cplx(0.2, 0.1), -0.4}));
    const auto a = verify_hp(spec, 0.0), b = verify_szego_verblunsky(spec);
    CHECK(a.lhs_total == Approx(b.lhs_total).margin(1e-12));
    CHECK(a.rhs_total == Approx(b.rhs_total).margin(1e-12));
}

TEST_CASE("GW strong sum rule", "[sumrules]") {
    for (double g : {0.5, 1.0}) {
        const auto r = verify_gw_strong(MeasureSpec::from(plain({cplx(0.5, 0.3), cplx(-0.3, 0.1)})), g);
        CHECK(r.status == Status::verified);
        CHECK(r.residual <= 1e-6);
    }
    // reference measure for the g = 1 rule has zero rate
    const auto z = verify_gw_strong(MeasureSpec::from(gw_equilibrium(-1.0)), 1.0);
    CHECK(z.lhs_total == Approx(0.0).margin(1e-6));
    CHECK(z.residual <= 1e-6);
}

TEST_CASE("the two GW right-hand sides agree", "[sumrules]") {
    std::mt19937_64 gen(31);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int rep = 0; rep < 100; ++rep) {
        const double g = u(gen);
        const GwRhs r = gw_rhs(random_alphas(gen, 8, 0.9), g);
        CHECK(std::abs(r.simon_form - r.trace_form) <= 1e-12);
    }
}

TEST_CASE("looser tolerance never beats a tighter one", "[sumrules]") {
    const auto spec = MeasureSpec::from(plain({cplx(0.4, 0.2), cplx(-0.1, 0.6)}));
    KlOptions loose, tight;
    loose.tol = 1e-8;
    tight.tol = 0.5e-8;
    CHECK(verify_szego_verblunsky(spec, 1e-6, tight).residual <= verify_szego_verblunsky(spec, 1e-6, loose).residual + 1e-15);
}

TEST_CASE("conjecture probes carry a label", "[sumrules]") {
    const auto p = probe_gw_gapped(MeasureSpec::from(gw_equilibrium(-2.0)), -2.0);
    CHECK(p.label.find("CONJECTURE") != std::string::npos);
    const auto q = probe_gw_ldp(plain({0.1, cplx(0, 0.2)}), 0.5);
    CHECK(q.label.find("CONJECTURE") != std::string::npos);
    CHECK_THROWS_AS(probe_gw_gapped(MeasureSpec::from(plain({0.1})), 0.5), domain_error);
}

TEST_CASE("gems: envelope, edge exponent, finiteness", "[gems]") {
    for (double d : {0.5, 1.0, 2.0}) {
        const auto e = hp_envelope_check(d);
        CHECK(e.holds(0.1));
        CHECK(hp_edge_exponent(d) == Approx(1.5).margin(0.05));
    }
    const auto g = gems_check_hp(reconstruct(deformed({gamma_d(1.0) + 0.05}, TailType::constant, gamma_d(1.0))), 1.0);
    CHECK(g.in_S1T);
    CHECK(g.consistent);
    CHECK(g.coefficient_finiteness == Finiteness::finite);
}

TEST_CASE("batch runner keeps case order", "[sumrules]") {
    std::vector<int> cases{5, 3, 8, 1};
    const auto out = run_batch(cases, [](int x) { return 2 * x; }, 3);
    CHECK(out == std::vector<int>{10, 6, 16, 2});
}

TEST_CASE("measure spec JSON parsing", "[io]") {
    using io::json;
    auto s = io::parse_measure_spec(json::parse(R"({"verblunsky":{"kind":"deformed","head":[[-0.5,0.1]],"tail":{"type":"constant","value":[-0.5,0]}}})"));
    REQUIRE(s.coeffs);
    CHECK(s.coeffs->kind == Kind::deformed);
    CHECK(s.coeffs->tail_value == cplx(-0.5));
    CHECK(s.coeffs->head[0] == cplx(-0.5, 0.1));

    s = io::parse_measure_spec(json::parse(R"({"atoms":[{"theta":0.5,"w":0.2}],"density":{"type":"named","name":"hp","param":1.0}})"));
    REQUIRE(s.measure);
    CHECK(s.measure->atoms.size() == 1);
    CHECK(s.measure->density_at(pi) == Approx(hp_ensemble(1.0).density(pi)));

    s = io::parse_measure_spec(json::parse(R"({"density":{"type":"grid","thetas":[0,3.14159,6.28318],"values":[1,2,1]}})"));
    CHECK(s.measure->density_at(3.14159 / 2) == Approx(1.5));

    CHECK_THROWS_AS(io::parse_measure_spec(json::parse(R"({"verblunsky":{"head":[[1.5,0]]}})")), domain_error);
    CHECK_THROWS_AS(io::parse_measure_spec(json::parse(R"({"foo":1})")), domain_error);
}

TEST_CASE("matrix spec JSON parsing", "[io]") {
    using io::json;
    const auto s = io::parse_matrix_spec(json::parse(R"({"p":2,"verblunsky":{"kind":"plain","head":[[[[0.1,0],[0,0.2]],[[0,0],[0.3,0]]]]}})"));
    REQUIRE(s.coeffs);
    CHECK(s.coeffs->p == 2);
    CHECK(s.coeffs->head[0](0, 1) == cplx(0, 0.2));
    CHECK(s.coeffs->head[0](1, 1) == cplx(0.3, 0));
    const auto t = io::parse_matrix_spec(json::parse(R"({"verblunsky":{"head":[[0.2,0.1]]}})"));
    CHECK(t.coeffs->p == 1);
    const auto u = io::parse_matrix_spec(json::parse(R"({"p":2,"diagonal":[{"verblunsky":{"head":[0.3]}},{"density":{"name":"uniform"}}]})"));
    REQUIRE(u.diagonal);
    CHECK(u.diagonal->size() == 2);
}

TEST_CASE("report serialization", "[io]") {
    const auto r = verify_szego_verblunsky(MeasureSpec::from(plain({0.6})));
    const auto j = io::to_json(r);
    CHECK(j["status"] == "verified");
    CHECK(j["rhs"]["terms"].size() == 1);
    const auto inf_report = verify_szego_verblunsky(MeasureSpec::from(plain({unit(0.2)}, TailType::none)));
    CHECK(io::to_json(inf_report)["lhs"]["total"] == "inf");
    const auto env = io::envelope("verify", {{"rule", "sv"}}, {{"residual", 1e-6}}, j);
    CHECK(env.contains("version"));
    CHECK(io::to_csv(r).find("residual,") != std::string::npos);
}
