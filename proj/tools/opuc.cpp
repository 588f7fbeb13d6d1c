// opuc: command-line front end for the sum-rule verification library.
//
// Exit codes: 0 success, 1 numeric failure or unverified rule, 2 usage error.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include "opuc/io.hpp"

using namespace opuc;
using io::json;

namespace {

struct Globals {
    double tol = -1.0;  // negative: rule default
    std::uint64_t seed = 0;
    std::string out = "-";
    std::string format = "json";
    unsigned jobs = 1;
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --out also accepts a bare format name, written to stdout
void settle_output(Globals& g) {
    if (g.out == "json" || g.out == "csv") {
        g.format = g.out;
        g.out = "-";
    }
    if (g.format != "json" && g.format != "csv") throw UsageError("--format must be json or csv");
    if (const char* env = std::getenv("OPUC_SUMRULES_JOBS")) {
        const long j = std::strtol(env, nullptr, 10);
        if (j < 1) throw UsageError("OPUC_SUMRULES_JOBS must be a positive integer");
        g.jobs = unsigned(j);
    }
    if (g.jobs == 0) g.jobs = std::max(1u, std::thread::hardware_concurrency());
}

void emit(const Globals& g, const std::string& text) {
    if (g.out == "-") {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream f(g.out);
    if (!f) throw UsageError("cannot write '" + g.out + "'");
    f << text;
    if (!text.empty() && text.back() != '\n') f << '\n';
}

json global_config(const Globals& g) {
    return {{"tol", g.tol < 0 ? json(nullptr) : json(g.tol)}, {"seed", g.seed}, {"format", g.format}, {"jobs", g.jobs}};
}

double pick_tol(const Globals& g, double dflt) { return g.tol > 0 ? g.tol : dflt; }

// ----------------------------------------------------------- equilibrium

struct EquilibriumArgs {
    std::string family = "hp";
    double param = 1.0;
    std::size_t grid = 256;
};

int run_equilibrium(const Globals& g, const EquilibriumArgs& a) {
    const Family fam = a.family == "gw" ? Family::GW : Family::HP;
    if (fam == Family::HP && !(a.param >= 0.0)) throw UsageError("HP parameter must be nonnegative");
    if (a.grid < 2) throw UsageError("--grid must be at least 2");
    const EnsembleSpec e = make_ensemble(fam, a.param);
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < a.grid; ++i) {
        const double t = e.arc_lo + (e.arc_hi - e.arc_lo) * double(i) / double(a.grid - 1);
        pts.emplace_back(wrap_angle(t), e.density(t));
    }
    if (g.format == "csv") {
        std::string s = "# F=" + io::csv_num(e.F) + " xi=" + io::csv_num(e.xi) + " edge=" + io::csv_num(e.edge) + "\ntheta,density\n";
        for (auto [t, v] : pts) s += io::csv_num(t) + "," + io::csv_num(v) + "\n";
        emit(g, s);
        return 0;
    }
    json grid = json::array();
    for (auto [t, v] : pts) grid.push_back({t, v});
    json payload = {{"constants", {{"F", io::num(e.F)}, {"xi", io::num(e.xi)}, {"edge", e.edge}}},
                    {"support", {e.arc_lo, e.arc_hi}},
                    {"gapped", e.gapped},
                    {"grid", grid}};
    json cfg = global_config(g);
    cfg.update({{"family", a.family}, {"param", a.param}, {"grid", a.grid}});
    emit(g, io::envelope("equilibrium", cfg, json::object(), payload).dump(2));
    return 0;
}

// ---------------------------------------------------------------- verify

struct VerifyArgs {
    std::string rule = "sv";
    double param = 1.0;
    std::vector<std::string> measures;
};

RateReport verify_one(const std::string& rule, double param, double tol, const MeasureSpec& spec) {
    if (rule == "sv") return verify_szego_verblunsky(spec, tol);
    if (rule == "hp") return verify_hp(spec, param, tol);
    if (rule == "gw-strong") return verify_gw_strong(spec, param, tol);
    if (rule == "gw-gapped") return probe_gw_gapped(spec, param);
    if (rule == "gw-ldp") {
        if (!spec.coeffs) throw UsageError("gw-ldp needs a coefficient spec");
        return probe_gw_ldp(*spec.coeffs, param);
    }
    throw UsageError("unknown rule '" + rule + "'");
}

double default_tol(const std::string& rule) { return rule == "hp" ? 1e-4 : 1e-6; }

int run_verify(const Globals& g, const VerifyArgs& a) {
    if (a.measures.empty()) throw UsageError("--measure is required");
    if (a.rule == "hp" && !(a.param >= 0)) throw UsageError("HP parameter must be nonnegative");
    const double tol = pick_tol(g, default_tol(a.rule));
    std::vector<MeasureSpec> specs;
    for (const auto& m : a.measures) specs.push_back(io::parse_measure_spec(io::read_json_file(m)));
    if (a.rule == "gw-ldp")
        for (const auto& s : specs)
            if (!s.coeffs) throw UsageError("gw-ldp needs a coefficient spec");
    std::vector<std::string> errors(specs.size());
    std::vector<std::size_t> idx(specs.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    auto reports = run_batch(idx, [&](std::size_t i) {
        try {
            return verify_one(a.rule, a.param, tol, specs[i]);
        } catch (const domain_error& e) {
            errors[i] = std::string("usage: ") + e.what();
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
        return RateReport{};
    }, g.jobs);

    int code = 0;
    json cases = json::array();
    std::string csv;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const RateReport& r = reports[i];
        const bool probe = r.label == "CONJECTURE";
        if (!errors[i].empty()) {
            code = std::max(code, errors[i].rfind("usage: ", 0) == 0 ? 2 : 1);
            cases.push_back({{"measure", a.measures[i]}, {"error", errors[i]}});
            csv += "measure," + a.measures[i] + "\nerror," + errors[i] + "\n";
            continue;
        }
        if (!probe && r.status != Status::verified) code = std::max(code, 1);
        json c = io::to_json(r);
        c["measure"] = a.measures[i];
        cases.push_back(c);
        csv += "measure," + a.measures[i] + "\n" + io::to_csv(r);
    }
    json cfg = global_config(g);
    cfg.update({{"rule", a.rule}, {"param", a.param}, {"measures", a.measures}});
    if (g.format == "csv")
        emit(g, csv);
    else
        emit(g, io::envelope("verify", cfg, {{"residual", tol}}, cases.size() == 1 ? cases[0] : cases).dump(2));
    return code;
}

// --------------------------------------------------------- matrix-verify

struct MatrixArgs {
    std::size_t p = 0;
    std::string rule = "szego";
    double d = 0.0;
    std::string coeffs;
};

int run_matrix(const Globals& g, const MatrixArgs& a) {
    if (a.coeffs.empty()) throw UsageError("--coeffs is required");
    if (!(a.d >= 0)) throw UsageError("--d must be nonnegative");
    const MatrixSpec spec = io::parse_matrix_spec(io::read_json_file(a.coeffs), a.p);
    if (a.p && spec.coeffs && spec.coeffs->p != a.p) throw UsageError("--p disagrees with the block size in the spec");
    RateReport r;
    double tol;
    if (a.rule == "szego") {
        tol = pick_tol(g, 1e-6);
        r = verify_matrix_szego(spec, tol);
    } else if (a.rule == "hp") {
        tol = pick_tol(g, 1e-4);
        r = verify_matrix_hp(spec, a.d, tol);
    } else {
        throw UsageError("unknown matrix rule '" + a.rule + "'");
    }
    json cfg = global_config(g);
    cfg.update({{"p", a.p}, {"rule", a.rule}, {"d", a.d}, {"coeffs", a.coeffs}});
    emit(g, g.format == "csv" ? io::to_csv(r) : io::envelope("matrix-verify", cfg, {{"residual", tol}}, io::to_json(r)).dump(2));
    return r.status == Status::verified ? 0 : 1;
}

// ------------------------------------------------------------------ rate

struct RateArgs {
    std::string family = "hp";
    double d = 1.0;
    std::string measure;
};

int run_rate(const Globals& g, const RateArgs& a) {
    if (a.measure.empty()) throw UsageError("--measure is required");
    const MeasureSpec spec = io::parse_measure_spec(io::read_json_file(a.measure));
    const CircleMeasure mu = spec.measure ? *spec.measure : reconstruct(as_plain(*spec.coeffs));
    const EnsembleSpec e = make_ensemble(a.family == "gw" ? Family::GW : Family::HP, a.d);
    RateReport r = spectral_rate(mu, e);
    if (spec.coeffs && a.family == "hp") {
        const SeriesResult s = coefficient_rate_hp(as_deformed(*spec.coeffs), a.d);
        detail::fill_series(r, s);
    }
    json cfg = global_config(g);
    cfg.update({{"family", a.family}, {"param", a.d}, {"measure", a.measure}});
    emit(g, g.format == "csv" ? io::to_csv(r) : io::envelope("rate", cfg, json::object(), io::to_json(r)).dump(2));
    return std::isnan(r.lhs_total) ? 1 : 0;
}

// ---------------------------------------------------------------- sample

struct SampleArgs {
    std::string ensemble = "cue";
    std::size_t n = 10;
    double param = 0.0;
    std::size_t reps = 1;
    std::string what = "coeffs";
    std::size_t bins = 64;
};

int run_sample(const Globals& g, const SampleArgs& a) {
    if (a.n == 0 || a.reps == 0) throw UsageError("--n and --reps must be positive");
    if (a.ensemble == "hp" && !(a.param >= 0)) throw UsageError("HP parameter must be nonnegative");
    if (a.ensemble != "cue" && a.ensemble != "hp" && a.ensemble != "gw") throw UsageError("unknown ensemble '" + a.ensemble + "'");
    RngStream rng(g.seed);
    std::vector<CoefficientSequence> draws;
    ChainDiagnostics diag;
    if (a.ensemble == "cue") {
        for (std::size_t r = 0; r < a.reps; ++r) draws.push_back(sample_cue_alphas(a.n, rng));
    } else if (a.ensemble == "hp") {
        for (std::size_t r = 0; r < a.reps; ++r) {
            ChainDiagnostics dg;
            draws.push_back(alphas_from_deformed(sample_hp_gammas(a.n, a.param, rng, &dg)));
            if (dg.method != "exact") diag = dg;
        }
    } else {
        draws = sample_gw_alphas(a.n, a.param, a.reps, rng, &diag);
    }

    json cfg = global_config(g);
    cfg.update({{"ensemble", a.ensemble}, {"n", a.n}, {"param", a.param}, {"reps", a.reps}, {"what", a.what}, {"rng", rng.algorithm()}});
    if (a.what == "esd") {
        std::vector<std::size_t> hist(a.bins, 0);
        std::size_t total = 0;
        for (const auto& c : draws)
            for (double t : eigenangles_of(c)) {
                ++hist[std::min(a.bins - 1, std::size_t(t / two_pi * double(a.bins)))];
                ++total;
            }
        if (g.format == "csv") {
            std::string s = "bin_lo,bin_hi,density\n";
            for (std::size_t b = 0; b < a.bins; ++b)
                s += io::csv_num(two_pi * b / a.bins) + "," + io::csv_num(two_pi * (b + 1) / a.bins) + "," +
                     io::csv_num(double(hist[b]) * double(a.bins) / double(total)) + "\n";
            emit(g, s);
        } else {
            emit(g, io::envelope("sample", cfg, json::object(), {{"histogram", hist}, {"eigenvalues", total}, {"chain", io::to_json(diag)}}).dump(2));
        }
        return 0;
    }
    if (a.what != "coeffs") throw UsageError("--what must be coeffs or esd");
    if (g.format == "csv") {
        std::string s = "rep,k,re,im\n";
        for (std::size_t r = 0; r < draws.size(); ++r)
            for (std::size_t k = 0; k < draws[r].head.size(); ++k)
                s += std::to_string(r) + "," + std::to_string(k) + "," + io::csv_num(draws[r].head[k].real()) + "," + io::csv_num(draws[r].head[k].imag()) + "\n";
        emit(g, s);
    } else {
        json arr = json::array();
        for (const auto& c : draws) {
            json row = json::array();
            for (cplx z : c.head) row.push_back(io::from_cplx(z));
            arr.push_back(row);
        }
        emit(g, io::envelope("sample", cfg, json::object(), {{"alphas", arr}, {"chain", io::to_json(diag)}}).dump(2));
    }
    return 0;
}

// ------------------------------------------------------------------ gems

struct GemsArgs {
    double d = 1.0;
    std::string measure;
    double slack = 0.1;
};

int run_gems(const Globals& g, const GemsArgs& a) {
    if (!(a.d > 0)) throw UsageError("--d must be positive");
    json payload;
    bool ok = true;
    const EnvelopeReport env = hp_envelope_check(a.d);
    const double expo = hp_edge_exponent(a.d);
    ok = env.holds(a.slack) && std::abs(expo - 1.5) <= 0.05;
    payload["envelope"] = {{"min_lower_ratio", env.min_lower_ratio}, {"max_upper_ratio", env.max_upper_ratio}, {"hmax", env.hmax}, {"slack", a.slack}, {"holds", env.holds(a.slack)}};
    payload["edge_exponent"] = expo;
    if (!a.measure.empty()) {
        const MeasureSpec spec = io::parse_measure_spec(io::read_json_file(a.measure));
        const CircleMeasure mu = spec.measure ? *spec.measure : reconstruct(as_plain(*spec.coeffs));
        const GemsReport r = gems_check_hp(mu, a.d);
        payload["measure"] = io::to_json(r);
        ok = ok && r.consistent;
    }
    json cfg = global_config(g);
    cfg.update({{"d", a.d}, {"measure", a.measure}, {"slack", a.slack}});
    if (g.format == "csv") {
        std::string s = "key,value\nmin_lower_ratio," + io::csv_num(env.min_lower_ratio) + "\nmax_upper_ratio," + io::csv_num(env.max_upper_ratio) +
                        "\nedge_exponent," + io::csv_num(expo) + "\n";
        emit(g, s);
    } else {
        emit(g, io::envelope("gems", cfg, {{"envelope_slack", a.slack}, {"exponent", 0.05}}, payload).dump(2));
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sum-rule verification for orthogonal polynomials on the unit circle"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--tol", g.tol, "residual tolerance (default depends on the rule)");
    app.add_option("--seed", g.seed, "RNG seed");
    app.add_option("--out", g.out, "output path, '-' for stdout, or a format name");
    app.add_option("--format,--report", g.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--jobs", g.jobs, "worker threads (0: all cores); OPUC_SUMRULES_JOBS overrides");
    // global flags are also accepted after the subcommand
    auto globals = [&](CLI::App* s) { s->fallthrough(); };

    EquilibriumArgs ea;
    auto* eq = app.add_subcommand("equilibrium", "equilibrium density table and constants");
    eq->add_option("--family", ea.family)->check(CLI::IsMember({"hp", "gw"}));
    eq->add_option("--param", ea.param);
    eq->add_option("--grid", ea.grid);
    globals(eq);

    VerifyArgs va;
    auto* ve = app.add_subcommand("verify", "check a scalar sum rule on one or more measures");
    ve->add_option("--rule", va.rule)->check(CLI::IsMember({"sv", "hp", "gw-strong", "gw-gapped", "gw-ldp"}));
    ve->add_option("--param", va.param, "d for hp, g for the GW rules");
    ve->add_option("--measure", va.measures, "measure-spec JSON (repeatable)");
    globals(ve);

    MatrixArgs ma;
    auto* mv = app.add_subcommand("matrix-verify", "check a matrix sum rule");
    mv->add_option("--p", ma.p);
    mv->add_option("--rule", ma.rule)->check(CLI::IsMember({"szego", "hp"}));
    mv->add_option("--d", ma.d);
    mv->add_option("--coeffs", ma.coeffs);
    globals(mv);

    RateArgs ra;
    auto* rt = app.add_subcommand("rate", "spectral rate of a measure");
    rt->add_option("--family", ra.family)->check(CLI::IsMember({"hp", "gw"}));
    rt->add_option("--d,--param", ra.d);
    rt->add_option("--measure", ra.measure);
    globals(rt);

    SampleArgs sa;
    auto* sm = app.add_subcommand("sample", "draw coefficient sequences");
    sm->add_option("--ensemble", sa.ensemble)->check(CLI::IsMember({"cue", "hp", "gw"}));
    sm->add_option("--n", sa.n);
    sm->add_option("--param", sa.param);
    sm->add_option("--reps", sa.reps);
    sm->add_option("--what", sa.what, "coeffs or esd")->check(CLI::IsMember({"coeffs", "esd"}));
    sm->add_option("--bins", sa.bins);
    globals(sm);

    GemsArgs ga;
    auto* ge = app.add_subcommand("gems", "quadratic envelope, edge exponent, optional finiteness check");
    ge->add_option("--d", ga.d);
    ge->add_option("--measure", ga.measure);
    ge->add_option("--slack", ga.slack);
    globals(ge);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        settle_output(g);
        if (*eq) return run_equilibrium(g, ea);
        if (*ve) return run_verify(g, va);
        if (*mv) return run_matrix(g, ma);
        if (*rt) return run_rate(g, ra);
        if (*sm) return run_sample(g, sa);
        if (*ge) return run_gems(g, ga);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const domain_error& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        // numeric failure: still leave a machine-readable record
        const json rep = io::envelope(app.get_subcommands().front()->get_name(), global_config(g), json::object(), {{"error", e.what()}});
        try {
            emit(g, rep.dump(2));
        } catch (...) {
        }
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
