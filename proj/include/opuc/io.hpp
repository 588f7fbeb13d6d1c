#pragma once

// JSON spec parsing and report serialization.  Needs nlohmann/json on the
// include path (vendored as json.hpp).

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "mopuc.hpp"
#include "sumrules.hpp"

#ifndef OPUC_VERSION
#define OPUC_VERSION "unknown"
#endif

namespace opuc::io {

using json = nlohmann::json;

inline std::string version() { return OPUC_VERSION; }

// ------------------------------------------------------------------ parsing

// complex numbers are [re, im]; a bare number is read as real
inline cplx to_cplx(const json& j) {
    if (j.is_number()) return j.get<double>();
    if (!j.is_array() || j.size() != 2) throw domain_error("complex value must be [re, im]");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline json from_cplx(cplx z) { return json::array({z.real(), z.imag()}); }

inline Kind parse_kind(const json& v) {
    const std::string k = v.value("kind", "plain");
    if (k == "plain") return Kind::plain;
    if (k == "deformed") return Kind::deformed;
    throw domain_error("unknown coefficient kind '" + k + "'");
}

inline void parse_tail(const json& v, TailType& t, cplx& c) {
    t = TailType::zero;
    c = 0.0;
    if (!v.contains("tail")) return;
    const json& tj = v["tail"];
    const std::string type = tj.value("type", "zero");
    if (type == "zero") return;
    if (type == "none") {
        t = TailType::none;
        return;
    }
    if (type != "constant") throw domain_error("unknown tail type '" + type + "'");
    t = TailType::constant;
    c = to_cplx(tj.at("value"));
}

inline CoefficientSequence parse_coefficients(const json& v) {
    CoefficientSequence s;
    s.kind = parse_kind(v);
    for (const auto& x : v.value("head", json::array())) s.head.push_back(to_cplx(x));
    parse_tail(v, s.tail, s.tail_value);
    s.validate();
    return s;
}

// grid density, linear interpolation, zero outside [first, last]
inline CircleMeasure grid_measure(std::vector<double> th, std::vector<double> vals) {
    if (th.size() != vals.size() || th.size() < 2) throw domain_error("grid needs matching thetas/values, at least 2");
    for (std::size_t i = 1; i < th.size(); ++i)
        if (!(th[i] > th[i - 1])) throw domain_error("grid thetas must be strictly increasing");
    for (double v : vals)
        if (!(v >= 0.0)) throw domain_error("grid density must be nonnegative");
    const double shift = wrap_angle(th.front()) - th.front();
    for (double& t : th) t += shift;
    CircleMeasure mu;
    mu.arc_lo = th.front();
    mu.arc_hi = th.back();
    if (mu.arc_hi - mu.arc_lo > two_pi + 1e-12) throw domain_error("grid spans more than one turn");
    mu.density = [th = std::move(th), vals = std::move(vals)](double t) {
        t = th.front() + wrap_angle(t - th.front());
        if (t > th.back()) return 0.0;
        const auto it = std::upper_bound(th.begin(), th.end(), t);
        if (it == th.end()) return vals.back();
        const std::size_t i = std::size_t(it - th.begin());
        if (i == 0) return vals.front();
        const double s = (t - th[i - 1]) / (th[i] - th[i - 1]);
        return (1 - s) * vals[i - 1] + s * vals[i];
    };
    return mu;
}

inline CircleMeasure parse_measure(const json& v) {
    CircleMeasure mu;
    mu.density = nullptr;
    if (v.contains("density")) {
        const json& d = v["density"];
        const std::string type = d.value("type", "named");
        if (type == "named") {
            const std::string name = d.at("name");
            const double p = d.value("param", 0.0);
            if (name == "hp")
                mu = hp_equilibrium(p);
            else if (name == "gw")
                mu = gw_equilibrium(p);
            else if (name == "uniform")
                mu = uniform_measure();
            else
                throw domain_error("unknown named density '" + name + "'");
        } else if (type == "grid") {
            mu = grid_measure(d.at("thetas").get<std::vector<double>>(), d.at("values").get<std::vector<double>>());
        } else {
            throw domain_error("unknown density type '" + type + "'");
        }
    }
    for (const auto& a : v.value("atoms", json::array())) mu.atoms.push_back({wrap_angle(a.at("theta").get<double>()), a.at("w").get<double>()});
    mu.validate();
    return mu;
}

inline MeasureSpec parse_measure_spec(const json& v) {
    if (v.contains("verblunsky")) return MeasureSpec::from(parse_coefficients(v["verblunsky"]));
    if (v.contains("atoms") || v.contains("density")) {
        MeasureSpec s = MeasureSpec::from(parse_measure(v));
        if (v.contains("moment_count")) s.moment_count = v["moment_count"].get<std::size_t>();
        return s;
    }
    throw domain_error("measure spec needs 'verblunsky', 'atoms' or 'density'");
}

// p x p block as a list of rows of [re, im]; a scalar entry is allowed when p = 1
inline Mat parse_block(const json& b, std::size_t p) {
    if (p == 1 && (b.is_number() || (b.is_array() && b.size() == 2 && b[0].is_number()))) {
        Mat m(1, 1);
        m(0, 0) = to_cplx(b);
        return m;
    }
    if (!b.is_array() || b.size() != p) throw domain_error("matrix block must have p rows");
    Mat m(p, p);
    for (std::size_t i = 0; i < p; ++i) {
        if (!b[i].is_array() || b[i].size() != p) throw domain_error("matrix block row must have p entries");
        for (std::size_t j = 0; j < p; ++j) m(i, j) = to_cplx(b[i][j]);
    }
    return m;
}

// {"p": 2, "verblunsky": {... head: [block, ...]}} or {"p": 2, "diagonal": [measure spec, ...]}
inline MatrixSpec parse_matrix_spec(const json& v, std::size_t p_hint = 0) {
    std::size_t p = v.value("p", p_hint);
    MatrixSpec s;
    if (v.contains("verblunsky")) {
        const json& c = v["verblunsky"];
        if (p == 0) {
            const json& h = c.value("head", json::array());
            p = h.empty() ? 1 : (h[0].is_array() && h[0].size() > 0 && h[0][0].is_array() && !h[0][0].empty() && h[0][0][0].is_array()) ? h[0].size() : 1;
        }
        MatrixCoefficientSequence m;
        m.kind = parse_kind(c);
        m.p = p;
        for (const auto& b : c.value("head", json::array())) m.head.push_back(parse_block(b, p));
        parse_tail(c, m.tail, m.tail_value);
        m.validate();
        s = MatrixSpec::from(std::move(m));
    } else if (v.contains("diagonal")) {
        std::vector<CircleMeasure> mus;
        for (const auto& d : v["diagonal"]) {
            const MeasureSpec ms = parse_measure_spec(d);
            if (ms.coeffs) {
                CircleMeasure mu = reconstruct(as_plain(*ms.coeffs));
                mus.push_back(std::move(mu));
            } else {
                mus.push_back(*ms.measure);
            }
        }
        if (p != 0 && mus.size() != p) throw domain_error("diagonal entry count differs from p");
        s = MatrixSpec::from(std::move(mus));
    } else {
        throw domain_error("matrix spec needs 'verblunsky' or 'diagonal'");
    }
    if (v.contains("moment_count")) s.moment_count = v["moment_count"].get<std::size_t>();
    return s;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw domain_error("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw domain_error("invalid JSON in '" + path + "': " + e.what());
    }
}

// ------------------------------------------------------------ serialization

// infinities become the strings "inf"/"-inf", NaN becomes null
inline json num(double x) {
    if (std::isnan(x)) return nullptr;
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return x;
}

inline json nums(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

inline json to_json(const std::vector<Outlier>& v) {
    json a = json::array();
    for (const auto& o : v) a.push_back({{"theta", o.theta}, {"weight", o.weight}, {"rate", num(o.rate)}});
    return a;
}

inline json to_json(const RateReport& r) {
    json d = json::object();
    for (const auto& [k, x] : r.diagnostics) d[k] = num(x);
    json j = {{"rule", r.rule},
              {"status", status_name(r.status)},
              {"lhs", {{"kl", num(r.kl_term)}, {"outliers_plus", to_json(r.outlier_plus)}, {"outliers_minus", to_json(r.outlier_minus)}, {"total", num(r.lhs_total)}}},
              {"rhs", {{"terms", nums(r.rhs_terms)}, {"partial_sums", nums(r.rhs_partial_sums)}, {"tail_bound", num(r.rhs_tail_bound)}, {"total", num(r.rhs_total)}}},
              {"residual", num(r.residual)},
              {"tolerance", r.tolerance},
              {"finiteness_agrees", r.finiteness_agrees},
              {"diagnostics", d},
              {"notes", r.notes}};
    if (!r.label.empty()) j["label"] = r.label;
    return j;
}

inline json to_json(const GemsReport& g) {
    return {{"in_S1T", g.in_S1T},
            {"edge_sum", finiteness_name(g.edge_sum)},
            {"atom_at_one", g.atom_at_one},
            {"szego_integral_finite", g.szego_integral_finite},
            {"coefficient_sum", num(g.coefficient_sum)},
            {"coefficient_finiteness", finiteness_name(g.coefficient_finiteness)},
            {"coefficient_exponent", num(g.coefficient_exponent)},
            {"consistent", g.consistent},
            {"conclusive", g.conclusive}};
}

inline json to_json(const ChainDiagnostics& c) {
    json j = {{"method", c.method}, {"acceptance", num(c.acceptance)}, {"autocorrelation_time", num(c.autocorrelation_time)}, {"steps", c.steps}, {"warning", c.warning}};
    if (!c.message.empty()) j["message"] = c.message;
    return j;
}

// wraps a payload with version, config and tolerances
inline json envelope(const std::string& command, const json& config, const json& tolerances, const json& payload) {
    return {{"version", version()}, {"command", command}, {"config", config}, {"tolerances", tolerances}, {"result", payload}};
}

// ------------------------------------------------------------------- csv

inline std::string csv_num(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    std::ostringstream s;
    s.precision(17);
    s << x;
    return s.str();
}

// flat key,value projection; the term series goes into indexed rows
inline std::string to_csv(const RateReport& r) {
    std::ostringstream o;
    o << "key,value\n";
    o << "rule," << r.rule << "\nstatus," << status_name(r.status) << "\n";
    if (!r.label.empty()) o << "label," << r.label << "\n";
    o << "kl," << csv_num(r.kl_term) << "\noutlier_sum," << csv_num(r.outlier_sum()) << "\nlhs_total," << csv_num(r.lhs_total) << "\n";
    o << "rhs_tail_bound," << csv_num(r.rhs_tail_bound) << "\nrhs_total," << csv_num(r.rhs_total) << "\n";
    o << "residual," << csv_num(r.residual) << "\ntolerance," << csv_num(r.tolerance) << "\n";
    for (std::size_t k = 0; k < r.rhs_terms.size(); ++k) o << "rhs_term_" << k << "," << csv_num(r.rhs_terms[k]) << "\n";
    for (const auto& [k, x] : r.diagnostics) o << k << "," << csv_num(x) << "\n";
    return o.str();
}

}  // namespace opuc::io
