#include "gdarb/serialize.hpp"

#include "gdarb/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace gdarb {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

[[noreturn]] void bad(const std::string& path, const std::string& what) { fail(ErrorKind::Parse, path + ": " + what); }

json parse_text(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorKind::Parse, std::string("json: ") + e.what());
    }
}

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) bad(path, "expected an object");
    for (const auto& [k, v] : j.items()) {
        (void)v;
        bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; });
        if (!ok) bad(path.empty() ? k : path + "." + k, "unknown field");
    }
}

const json& need(const json& j, const std::string& path, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) bad(path.empty() ? key : path + "." + key, "missing field");
    return *it;
}

std::string sub(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string idx(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

// Numbers may be JSON numbers or text such as "inf", "-inf" or "1/3".
double number(const json& j, const std::string& path) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        try {
            return param_to_double(j.get<std::string>());
        } catch (const Error& e) {
            bad(path, e.what());
        }
    }
    bad(path, "expected a number");
}

bool boolean(const json& j, const std::string& path) {
    if (!j.is_boolean()) bad(path, "expected true or false");
    return j.get<bool>();
}

std::string text(const json& j, const std::string& path) {
    if (!j.is_string()) bad(path, "expected a string");
    return j.get<std::string>();
}

const json& array(const json& j, const std::string& path) {
    if (!j.is_array()) bad(path, "expected an array");
    return j;
}

template <class J>
J num_out(double x) {
    if (std::isnan(x)) return J("nan");
    if (std::isinf(x)) return J(x > 0 ? "inf" : "-inf");
    return J(x);
}

std::pair<double, double> pair_of(const json& j, const std::string& path) {
    array(j, path);
    if (j.size() != 2) bad(path, "expected a pair");
    return {number(j[0], idx(path, 0)), number(j[1], idx(path, 1))};
}

// ---- expressions ----

Expr expr_from(const json& j, const std::string& path) {
    if (!j.is_object()) bad(path, "expected an expression object");
    std::string tag = text(need(j, path, "node"), sub(path, "node"));
    if (tag == "const") {
        check_keys(j, path, {"node", "value"});
        return make_const(number(need(j, path, "value"), sub(path, "value")));
    }
    if (tag == "affine") {
        check_keys(j, path, {"node", "a", "b"});
        return make_affine(number(need(j, path, "a"), sub(path, "a")), number(need(j, path, "b"), sub(path, "b")));
    }
    if (tag == "power_signed") {
        check_keys(j, path, {"node", "center", "p"});
        return make_power_signed(number(need(j, path, "center"), sub(path, "center")),
                                 number(need(j, path, "p"), sub(path, "p")));
    }
    if (tag == "exp_integral") {
        check_keys(j, path, {"node", "mu", "anchor"});
        double anchor = j.contains("anchor") ? number(j["anchor"], sub(path, "anchor")) : 0.0;
        return make_exp_integral(expr_from(need(j, path, "mu"), sub(path, "mu")), anchor);
    }
    if (tag == "sum" || tag == "product") {
        const char* key = tag == "sum" ? "terms" : "factors";
        check_keys(j, path, {"node", key});
        const json& a = array(need(j, path, key), sub(path, key));
        std::vector<Expr> parts;
        for (std::size_t i = 0; i < a.size(); ++i) parts.push_back(expr_from(a[i], idx(sub(path, key), i)));
        if (parts.empty()) bad(sub(path, key), "must not be empty");
        return tag == "sum" ? make_sum(parts) : make_product(parts);
    }
    if (tag == "compose") {
        check_keys(j, path, {"node", "outer", "inner"});
        return make_compose(expr_from(need(j, path, "outer"), sub(path, "outer")),
                            expr_from(need(j, path, "inner"), sub(path, "inner")));
    }
    if (tag == "piecewise") {
        check_keys(j, path, {"node", "breakpoints", "pieces"});
        const json& b = array(need(j, path, "breakpoints"), sub(path, "breakpoints"));
        const json& p = array(need(j, path, "pieces"), sub(path, "pieces"));
        std::vector<double> bps;
        for (std::size_t i = 0; i < b.size(); ++i) bps.push_back(number(b[i], idx(sub(path, "breakpoints"), i)));
        std::vector<Expr> pieces;
        for (std::size_t i = 0; i < p.size(); ++i) pieces.push_back(expr_from(p[i], idx(sub(path, "pieces"), i)));
        try {
            return make_piecewise(bps, pieces);
        } catch (const Error& e) {
            bad(path, e.what());
        }
    }
    if (tag == "tabulated") {
        check_keys(j, path, {"node", "samples"});
        const json& a = array(need(j, path, "samples"), sub(path, "samples"));
        std::vector<std::pair<double, double>> samples;
        for (std::size_t i = 0; i < a.size(); ++i) samples.push_back(pair_of(a[i], idx(sub(path, "samples"), i)));
        try {
            return make_tabulated(samples);
        } catch (const Error& e) {
            bad(path, e.what());
        }
    }
    bad(sub(path, "node"), "unknown node tag '" + tag + "'");
}

ojson expr_out(const Expr& e) {
    ojson j;
    switch (e->kind()) {
        case ExprKind::Const: {
            auto& n = static_cast<const ConstNode&>(*e);
            j["node"] = "const";
            j["value"] = num_out<ojson>(n.c);
            break;
        }
        case ExprKind::Affine: {
            auto& n = static_cast<const AffineNode&>(*e);
            j["node"] = "affine";
            j["a"] = num_out<ojson>(n.a);
            j["b"] = num_out<ojson>(n.b);
            break;
        }
        case ExprKind::PowerSigned: {
            auto& n = static_cast<const PowerSignedNode&>(*e);
            j["node"] = "power_signed";
            j["center"] = num_out<ojson>(n.center);
            j["p"] = num_out<ojson>(n.p);
            break;
        }
        case ExprKind::ExpIntegral: {
            auto& n = static_cast<const ExpIntegralNode&>(*e);
            j["node"] = "exp_integral";
            j["mu"] = expr_out(n.mu);
            j["anchor"] = num_out<ojson>(n.anchor);
            break;
        }
        case ExprKind::Sum: {
            auto& n = static_cast<const SumNode&>(*e);
            j["node"] = "sum";
            j["terms"] = ojson::array();
            for (const auto& t : n.terms) j["terms"].push_back(expr_out(t));
            break;
        }
        case ExprKind::Product: {
            auto& n = static_cast<const ProductNode&>(*e);
            j["node"] = "product";
            j["factors"] = ojson::array();
            for (const auto& t : n.factors) j["factors"].push_back(expr_out(t));
            break;
        }
        case ExprKind::Compose: {
            auto& n = static_cast<const ComposeNode&>(*e);
            j["node"] = "compose";
            j["outer"] = expr_out(n.outer);
            j["inner"] = expr_out(n.inner);
            break;
        }
        case ExprKind::Piecewise: {
            auto& n = static_cast<const PiecewiseNode&>(*e);
            j["node"] = "piecewise";
            j["breakpoints"] = ojson::array();
            for (double b : n.breakpoints) j["breakpoints"].push_back(num_out<ojson>(b));
            j["pieces"] = ojson::array();
            for (const auto& p : n.pieces) j["pieces"].push_back(expr_out(p));
            break;
        }
        case ExprKind::Tabulated: {
            auto& n = static_cast<const TabulatedNode&>(*e);
            j["node"] = "tabulated";
            j["samples"] = ojson::array();
            for (std::size_t i = 0; i < n.xs.size(); ++i)
                j["samples"].push_back(ojson::array({num_out<ojson>(n.xs[i]), num_out<ojson>(n.ys[i])}));
            break;
        }
    }
    return j;
}

// ---- measures ----

ScSpec sc_from(const json& j, const std::string& path) {
    check_keys(j, path, {"base_id", "base_cdf", "multiplier", "lo", "hi"});
    ScSpec s;
    s.base_id = text(need(j, path, "base_id"), sub(path, "base_id"));
    s.base_cdf = expr_from(need(j, path, "base_cdf"), sub(path, "base_cdf"));
    s.multiplier = expr_from(need(j, path, "multiplier"), sub(path, "multiplier"));
    if (j.contains("lo")) s.lo = number(j["lo"], sub(path, "lo"));
    if (j.contains("hi")) s.hi = number(j["hi"], sub(path, "hi"));
    if (!(s.lo < s.hi)) bad(path, "lo must be below hi");
    return s;
}

ojson sc_out(const ScSpec& s) {
    ojson j;
    j["base_id"] = s.base_id;
    j["base_cdf"] = expr_out(s.base_cdf);
    j["multiplier"] = expr_out(s.multiplier);
    j["lo"] = num_out<ojson>(s.lo);
    j["hi"] = num_out<ojson>(s.hi);
    return j;
}

MeasureSpec measure_from(const json& j, const std::string& path) {
    check_keys(j, path, {"ac", "atoms", "sc"});
    MeasureSpec m;
    if (j.contains("ac") && !j["ac"].is_null()) m.ac = expr_from(j["ac"], sub(path, "ac"));
    if (j.contains("atoms")) {
        const json& a = array(j["atoms"], sub(path, "atoms"));
        for (std::size_t i = 0; i < a.size(); ++i) {
            auto [x, mass] = pair_of(a[i], idx(sub(path, "atoms"), i));
            if (!std::isfinite(x)) bad(idx(sub(path, "atoms"), i), "atom location must be finite");
            if (!(mass >= 0)) bad(idx(sub(path, "atoms"), i), "atom mass must be nonnegative");
            m.atoms.push_back({x, mass});
        }
    }
    if (j.contains("sc") && !j["sc"].is_null()) m.sc = sc_from(j["sc"], sub(path, "sc"));
    return m;
}

ojson measure_out(const MeasureSpec& m) {
    ojson j;
    j["ac"] = m.ac ? expr_out(m.ac) : ojson(nullptr);
    j["atoms"] = ojson::array();
    for (const auto& a : m.atoms) j["atoms"].push_back(ojson::array({num_out<ojson>(a.x), num_out<ojson>(a.mass)}));
    j["sc"] = m.sc ? sc_out(*m.sc) : ojson(nullptr);
    return j;
}

// ---- model specs ----

BoundaryKind boundary_from(const json& j, const std::string& path) {
    std::string t = text(j, path);
    if (t == "absorbing") return BoundaryKind::Absorbing;
    if (t == "reflecting") return BoundaryKind::Reflecting;
    if (t == "inaccessible") return BoundaryKind::Inaccessible;
    bad(path, "expected absorbing, reflecting or inaccessible");
}

const char* side_name(LocalBehavior::Side s) {
    switch (s) {
        case LocalBehavior::Side::Left: return "left";
        case LocalBehavior::Side::Right: return "right";
        default: return "both";
    }
}

DiffusionSpec spec_from(const json& j) {
    if (j.is_object() && j.contains("catalog")) {
        check_keys(j, "", {"catalog", "params"});
        std::string name = text(j["catalog"], "catalog");
        Params p;
        if (j.contains("params")) {
            const json& pj = j["params"];
            if (!pj.is_object()) bad("params", "expected an object");
            for (const auto& [k, v] : pj.items()) {
                if (v.is_string())
                    p[k] = v.get<std::string>();
                else if (v.is_number())
                    p[k] = v.dump();
                else
                    bad("params." + k, "expected a number or a string");
            }
        }
        return build_catalog_model(name, p);
    }
    check_keys(j, "", {"model_id", "state_interval", "scale", "inverse_scale", "speed", "speed_natural", "x0", "r", "T",
                       "kinks", "qprime_zero_set", "phi_behaviors", "left_boundary", "right_boundary", "qpp_sc",
                       "impr_tag"});
    DiffusionSpec s;
    if (j.contains("model_id")) s.model_id = text(j["model_id"], "model_id");
    {
        const json& J = need(j, "", "state_interval");
        check_keys(J, "state_interval", {"alpha", "beta", "alpha_closed", "beta_closed"});
        s.J.alpha = number(need(J, "state_interval", "alpha"), "state_interval.alpha");
        s.J.beta = number(need(J, "state_interval", "beta"), "state_interval.beta");
        if (J.contains("alpha_closed")) s.J.alpha_closed = boolean(J["alpha_closed"], "state_interval.alpha_closed");
        if (J.contains("beta_closed")) s.J.beta_closed = boolean(J["beta_closed"], "state_interval.beta_closed");
    }
    if (j.contains("scale")) s.scale = expr_from(j["scale"], "scale");
    if (j.contains("inverse_scale")) s.inverse_scale = expr_from(j["inverse_scale"], "inverse_scale");
    if (j.contains("speed")) s.speed = measure_from(j["speed"], "speed");
    if (j.contains("speed_natural")) s.speed_natural = measure_from(j["speed_natural"], "speed_natural");
    s.x0 = number(need(j, "", "x0"), "x0");
    if (j.contains("r")) s.r = number(j["r"], "r");
    if (j.contains("T")) s.T = number(j["T"], "T");
    if (j.contains("kinks")) {
        const json& a = array(j["kinks"], "kinks");
        for (std::size_t i = 0; i < a.size(); ++i) {
            auto [x, jump] = pair_of(a[i], idx("kinks", i));
            s.kinks.push_back({x, jump});
        }
    }
    if (j.contains("qprime_zero_set")) {
        const json& a = array(j["qprime_zero_set"], "qprime_zero_set");
        for (std::size_t i = 0; i < a.size(); ++i) {
            std::string path = idx("qprime_zero_set", i);
            ZeroSetEntry z;
            if (a[i].is_number() || a[i].is_string()) {
                z.a = z.b = number(a[i], path);
            } else {
                check_keys(a[i], path, {"a", "b", "exclude", "measure"});
                z.a = number(need(a[i], path, "a"), sub(path, "a"));
                z.b = number(need(a[i], path, "b"), sub(path, "b"));
                if (a[i].contains("exclude")) {
                    const json& ex = array(a[i]["exclude"], sub(path, "exclude"));
                    for (std::size_t k = 0; k < ex.size(); ++k) z.exclude.push_back(pair_of(ex[k], idx(sub(path, "exclude"), k)));
                }
                z.measure = a[i].contains("measure") ? number(a[i]["measure"], sub(path, "measure")) : z.b - z.a;
                if (!(z.a <= z.b)) bad(path, "a must not exceed b");
            }
            s.qprime_zero_set.push_back(z);
        }
    }
    if (j.contains("phi_behaviors")) {
        const json& a = array(j["phi_behaviors"], "phi_behaviors");
        for (std::size_t i = 0; i < a.size(); ++i) {
            std::string path = idx("phi_behaviors", i);
            check_keys(a[i], path, {"point", "side", "p", "C"});
            LocalBehavior b;
            b.point = number(need(a[i], path, "point"), sub(path, "point"));
            std::string side = a[i].contains("side") ? text(a[i]["side"], sub(path, "side")) : "both";
            if (side == "left")
                b.side = LocalBehavior::Side::Left;
            else if (side == "right")
                b.side = LocalBehavior::Side::Right;
            else if (side == "both")
                b.side = LocalBehavior::Side::Both;
            else
                bad(sub(path, "side"), "expected left, right or both");
            b.p = number(need(a[i], path, "p"), sub(path, "p"));
            b.C = number(need(a[i], path, "C"), sub(path, "C"));
            s.phi_behaviors.push_back(b);
        }
    }
    if (j.contains("left_boundary")) s.left_declared = boundary_from(j["left_boundary"], "left_boundary");
    if (j.contains("right_boundary")) s.right_declared = boundary_from(j["right_boundary"], "right_boundary");
    if (j.contains("qpp_sc")) s.qpp_sc = sc_from(j["qpp_sc"], "qpp_sc");
    if (j.contains("impr_tag")) s.impr_tag = text(j["impr_tag"], "impr_tag");
    return s;
}

ojson spec_out(const DiffusionSpec& s) {
    ojson j;
    j["model_id"] = s.model_id;
    j["state_interval"] = {{"alpha", num_out<ojson>(s.J.alpha)},
                           {"beta", num_out<ojson>(s.J.beta)},
                           {"alpha_closed", s.J.alpha_closed},
                           {"beta_closed", s.J.beta_closed}};
    if (s.scale) j["scale"] = expr_out(*s.scale);
    if (s.inverse_scale) j["inverse_scale"] = expr_out(*s.inverse_scale);
    if (s.speed) j["speed"] = measure_out(*s.speed);
    if (s.speed_natural) j["speed_natural"] = measure_out(*s.speed_natural);
    j["x0"] = num_out<ojson>(s.x0);
    j["r"] = num_out<ojson>(s.r);
    j["T"] = num_out<ojson>(s.T);
    j["kinks"] = ojson::array();
    for (const auto& k : s.kinks) j["kinks"].push_back(ojson::array({num_out<ojson>(k.x), num_out<ojson>(k.jump)}));
    j["qprime_zero_set"] = ojson::array();
    for (const auto& z : s.qprime_zero_set) {
        ojson e;
        e["a"] = num_out<ojson>(z.a);
        e["b"] = num_out<ojson>(z.b);
        e["exclude"] = ojson::array();
        for (const auto& x : z.exclude) e["exclude"].push_back(ojson::array({num_out<ojson>(x.first), num_out<ojson>(x.second)}));
        e["measure"] = num_out<ojson>(z.measure);
        j["qprime_zero_set"].push_back(e);
    }
    j["phi_behaviors"] = ojson::array();
    for (const auto& b : s.phi_behaviors)
        j["phi_behaviors"].push_back(
            {{"point", num_out<ojson>(b.point)}, {"side", side_name(b.side)}, {"p", num_out<ojson>(b.p)}, {"C", num_out<ojson>(b.C)}});
    if (s.left_declared) j["left_boundary"] = to_string(*s.left_declared);
    if (s.right_declared) j["right_boundary"] = to_string(*s.right_declared);
    if (s.qpp_sc) j["qpp_sc"] = sc_out(*s.qpp_sc);
    if (!s.impr_tag.empty()) j["impr_tag"] = s.impr_tag;
    return j;
}

std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

ojson estimate_out(const Estimate& e) { return {{"value", num_out<ojson>(e.value)}, {"se", num_out<ojson>(e.se)}}; }

}  // namespace

Expr parse_expr(const std::string& json_text) { return expr_from(parse_text(json_text), "expr"); }
std::string expr_to_json(const Expr& e) { return expr_out(e).dump(); }

MeasureSpec parse_measure(const std::string& json_text) { return measure_from(parse_text(json_text), "measure"); }
std::string measure_to_json(const MeasureSpec& m) { return measure_out(m).dump(); }

DiffusionSpec parse_model_spec(const std::string& json_text) { return spec_from(parse_text(json_text)); }
std::string model_spec_to_json(const DiffusionSpec& spec) { return spec_out(spec).dump(2) + "\n"; }

std::string catalog_model_id(const std::string& name, const Params& given) {
    const CatalogEntry& e = catalog_entry(name);
    std::string extra;
    for (const auto& ps : e.params) {
        auto it = given.find(ps.name);
        if (it == given.end() || it->second == ps.default_value) continue;
        extra += (extra.empty() ? "" : ",") + ps.name + "=" + it->second;
    }
    return extra.empty() ? name : name + "(" + extra + ")";
}

DiffusionSpec build_catalog_model(const std::string& name, const Params& given) {
    DiffusionSpec s = build_model(name, given);
    s.model_id = catalog_model_id(name, given);
    return s;
}

Params parse_param_list(const std::string& text) {
    Params p;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        auto eq = item.find('=');
        if (eq == std::string::npos) fail(ErrorKind::Parse, "params: expected key=value, got '" + item + "'");
        auto trim = [](std::string t) {
            auto b = t.find_first_not_of(" \t");
            auto e = t.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : t.substr(b, e - b + 1);
        };
        std::string k = trim(item.substr(0, eq)), v = trim(item.substr(eq + 1));
        if (k.empty() || v.empty()) fail(ErrorKind::Parse, "params: expected key=value, got '" + item + "'");
        p[k] = v;
    }
    return p;
}

void apply_tolerance(Tolerances& tol, const std::string& key, const std::string& value) {
    double v;
    try {
        v = param_to_double(value);
    } catch (const Error& e) {
        fail(ErrorKind::Parse, "tol." + key + ": " + e.what());
    }
    auto positive = [&](double x) {
        if (!(x > 0) || !std::isfinite(x)) fail(ErrorKind::Validation, "tol." + key + ": must be positive and finite");
        return x;
    };
    auto count = [&](double x) {
        if (!(x >= 1) || x != std::floor(x) || x > 1e8) fail(ErrorKind::Validation, "tol." + key + ": must be a positive integer");
        return static_cast<int>(x);
    };
    if (key == "equality_rel") tol.equality_rel = positive(v);
    else if (key == "location") tol.location = positive(v);
    else if (key == "zero_set_samples") tol.zero_set_samples = count(v);
    else if (key == "sc_samples") tol.sc_samples = count(v);
    else if (key == "generic_windows") tol.generic_windows = count(v);
    else if (key == "rel_tol") tol.numeric.rel_tol = positive(v);
    else if (key == "abs_tol") tol.numeric.abs_tol = positive(v);
    else if (key == "levels") tol.numeric.levels = count(v);
    else if (key == "divergence_ratio") tol.numeric.divergence_ratio = positive(v);
    else if (key == "tail_rel") tol.numeric.tail_rel = positive(v);
    else fail(ErrorKind::Validation, "tol." + key + ": unknown tolerance");
}

std::string verdict_to_json(const Verdict& v) {
    ojson j;
    j["model_id"] = v.model_id;
    j["r"] = num_out<ojson>(v.r);
    j["nip"] = verdict_string(v.nip);
    j["nsa"] = verdict_string(v.nsa);
    j["nupbr"] = verdict_string(v.nupbr);
    j["rp"] = verdict_string(v.rp);
    j["reports"] = ojson::array();
    for (const auto& r : v.reports) {
        ojson e;
        e["id"] = r.id;
        e["status"] = condition_string(r.status);
        e["residual"] = r.residual ? num_out<ojson>(*r.residual) : ojson(nullptr);
        e["note"] = r.note;
        j["reports"].push_back(e);
    }
    if (v.impr) {
        ojson im;
        im["tag"] = v.impr->tag;
        im["table"] = ojson::array();
        for (const auto& [u, g] : v.impr->table) im["table"].push_back(ojson::array({num_out<ojson>(u), num_out<ojson>(g)}));
        j["impr"] = im;
    } else {
        j["impr"] = nullptr;
    }
    return j.dump(2) + "\n";
}

std::string simulation_report_to_json(const std::string& model_id, const SimulationReport& rep) {
    ojson j;
    j["model_id"] = model_id;
    j["seed"] = rep.seed;
    j["N"] = rep.N;
    j["n_paths"] = rep.n_paths;
    j["discarded_paths"] = rep.discarded_paths;
    j["estimates"] = ojson::object();
    for (const auto& [k, e] : rep.estimates) j["estimates"][k] = estimate_out(e);
    j["flags"] = ojson::object();
    for (const auto& [k, f] : rep.flags) j["flags"][k] = f;
    ojson t;
    t["grid_sizes"] = rep.tradeoff.grid_sizes;
    t["K"] = ojson::array();
    for (const auto& e : rep.tradeoff.K) t["K"].push_back(estimate_out(e));
    t["ratios"] = ojson::array();
    for (double r : rep.tradeoff.ratios) t["ratios"].push_back(num_out<ojson>(r));
    t["divergent"] = rep.tradeoff.divergent;
    j["tradeoff"] = t;
    j["strategies"] = ojson::array();
    for (const auto& s : rep.strategies) {
        ojson e;
        e["name"] = s.name;
        e["mean"] = estimate_out(s.mean);
        e["min_payoff"] = num_out<ojson>(s.min_payoff);
        e["frac_positive"] = num_out<ojson>(s.frac_positive);
        e["wilson_95"] = ojson::array({num_out<ojson>(s.wilson_lo), num_out<ojson>(s.wilson_hi)});
        e["triggered"] = s.triggered;
        j["strategies"].push_back(e);
    }
    j["notes"] = ojson::object();
    for (const auto& [k, v] : rep.notes) j["notes"][k] = v;
    return j.dump(2) + "\n";
}

std::string k_ladder_csv(const TradeoffEstimate& t) {
    std::ostringstream os;
    os << "N,K_mean,K_se,ratio_to_previous\n";
    for (std::size_t l = 0; l < t.K.size(); ++l)
        os << t.grid_sizes[l] << ',' << fmt(t.K[l].value) << ',' << fmt(t.K[l].se) << ','
           << (l == 0 ? std::string() : fmt(t.ratios[l - 1])) << '\n';
    return os.str();
}

std::string payoff_histogram_csv(const SimulationReport& rep, int bins) {
    std::ostringstream os;
    os << "strategy,bin_lo,bin_hi,count\n";
    for (const auto& s : rep.strategies) {
        if (s.payoffs.empty()) continue;
        auto [mn, mx] = std::minmax_element(s.payoffs.begin(), s.payoffs.end());
        double lo = *mn, hi = *mx;
        if (hi <= lo) hi = lo + 1.0;
        std::vector<std::size_t> counts(bins, 0);
        for (double p : s.payoffs) {
            int b = static_cast<int>((p - lo) / (hi - lo) * bins);
            counts[std::clamp(b, 0, bins - 1)]++;
        }
        for (int b = 0; b < bins; ++b)
            os << s.name << ',' << fmt(lo + (hi - lo) * b / bins) << ',' << fmt(lo + (hi - lo) * (b + 1) / bins) << ','
               << counts[b] << '\n';
    }
    return os.str();
}

std::string paths_csv(const SimulationReport& rep) {
    std::ostringstream os;
    os << "path,terminal_u,terminal_x,absorbed,K,D";
    for (const auto& s : rep.strategies) os << ",payoff_" << s.name;
    os << '\n';
    for (std::size_t i = 0; i < rep.paths.size(); ++i) {
        const auto& p = rep.paths[i];
        os << i << ',' << fmt(p.terminal_u) << ',' << fmt(p.terminal_x) << ',' << (p.absorbed ? 1 : 0) << ','
           << fmt(p.K) << ',' << fmt(p.D);
        for (double v : p.payoff) os << ',' << fmt(v);
        os << '\n';
    }
    return os.str();
}

namespace {

ojson entry_out(const CatalogEntry& e) {
    ojson j;
    j["name"] = e.name;
    j["description"] = e.description;
    j["params"] = ojson::array();
    for (const auto& p : e.params) {
        ojson pj;
        pj["name"] = p.name;
        pj["description"] = p.description;
        pj["range"] = std::string(p.lo_open ? "(" : "[") + fmt(p.lo) + ", " + fmt(p.hi) + (p.hi_open ? ")" : "]") +
                      (p.allow_inf ? " or inf" : "");
        pj["default"] = p.default_value;
        j["params"].push_back(pj);
    }
    j["expected"] = e.expected_rule;
    j["citation"] = e.citation;
    return j;
}

}  // namespace

std::string catalog_list_json() {
    ojson j = ojson::array();
    for (const auto& e : catalog_entries()) j.push_back(entry_out(e));
    return j.dump(2) + "\n";
}

std::string catalog_entry_json(const std::string& name) { return entry_out(catalog_entry(name)).dump(2) + "\n"; }

std::string expected_verdict_json(const std::string& name, const Params& given) {
    ExpectedVerdict v = expected_verdict(name, given);
    ojson j;
    j["model_id"] = catalog_model_id(name, given);
    j["nip"] = verdict_string(v.nip);
    j["nsa"] = verdict_string(v.nsa);
    j["nupbr"] = verdict_string(v.nupbr);
    j["rp"] = verdict_string(v.rp);
    j["citation"] = v.citation;
    return j.dump(2) + "\n";
}

}  // namespace gdarb
