#include <doctest.h>

#include "gdarb/errors.hpp"
#include "gdarb/serialize.hpp"

#include <json.hpp>

#include <cmath>
#include <string>
#include <vector>

using namespace gdarb;
using ojson = nlohmann::ordered_json;

namespace {

std::string parse_error(const std::string& text) {
    try {
        parse_model_spec(text);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Parse);
        return e.what();
    }
    return "";
}

bool same_notions(const Verdict& a, const Verdict& b) {
    return a.nip == b.nip && a.nsa == b.nsa && a.nupbr == b.nupbr && a.rp == b.rp;
}

}  // namespace

TEST_CASE("expression JSON round trip preserves values and derivatives") {
    std::vector<Expr> exprs = {
        make_affine(2.0, -1.0),
        make_power_signed(0.5, 3.0),
        make_exp_integral(make_piecewise({1.0}, {make_const(1.0), make_const(-2.0)}), 0.0),
        make_sum({make_power_signed(0.0, 3.0), make_affine(1.0, 0.0)}),
        make_product({make_const(0.25), make_compose(make_power_signed(0.0, 2.0), make_affine(1.0, 1.0))}),
        make_tabulated({{0.0, 0.0}, {1.0, 2.0}, {3.0, 3.0}}),
    };
    for (const auto& e : exprs) {
        std::string text = expr_to_json(e);
        Expr back = parse_expr(text);
        CHECK(expr_to_json(back) == text);
        for (double x : {0.25, 1.0, 2.5}) {
            CHECK(eval(back, x) == eval(e, x));
            CHECK(back->d_plus(x) == e->d_plus(x));
        }
    }
}

TEST_CASE("numbers may be given as rational or infinite text") {
    Expr e = parse_expr(R"({"node": "affine", "a": "1/3", "b": 0})");
    CHECK(eval(e, 3.0) == doctest::Approx(1.0));
    MeasureSpec m = parse_measure(R"({"ac": null, "atoms": [[0, "inf"]]})");
    REQUIRE(m.atoms.size() == 1);
    CHECK(std::isinf(m.atoms[0].mass));
}

TEST_CASE("model spec round trip gives the same verdict") {
    for (const auto& entry : catalog_entries()) {
        CAPTURE(entry.name);
        DiffusionSpec s = build_catalog_model(entry.name, {});
        std::string text = model_spec_to_json(s);
        DiffusionSpec back = parse_model_spec(text);
        CHECK(model_spec_to_json(back) == text);
        CHECK(same_notions(classify(s), classify(back)));
    }
}

TEST_CASE("catalog references in spec files") {
    DiffusionSpec s = parse_model_spec(R"({"catalog": "sticky_skew", "params": {"r": "0.9"}})");
    CHECK(s.model_id == "sticky_skew(r=0.9)");
    CHECK(classify(s).nip == Tri::Fails);
    DiffusionSpec d = parse_model_spec(R"({"catalog": "sticky_reflected_bm", "params": {"r": 0.5, "rho": 1}})");
    CHECK(classify(d).nupbr == Tri::Holds);
    CHECK(catalog_model_id("brownian_motion", {}) == "brownian_motion");
    CHECK_THROWS_AS(parse_model_spec(R"({"catalog": "nope"})"), Error);
}

TEST_CASE("unknown fields are rejected with their path") {
    const char* base = R"({"state_interval": {"alpha": "-inf", "beta": "inf"}, "x0": 0,
        "scale": {"node": "affine", "a": 1, "b": 0}, "speed": {"ac": {"node": "const", "value": 1}})";
    std::string ok = std::string(base) + "}";
    CHECK_NOTHROW(parse_model_spec(ok));
    CHECK(parse_error(std::string(base) + R"(, "bogus": 1})").find("bogus") != std::string::npos);
    std::string nested = R"({"state_interval": {"alpha": "-inf", "beta": "inf"}, "x0": 0,
        "scale": {"node": "affine", "a": 1, "b": 0}, "speed": {"ac": null, "extra": 2}})";
    std::string msg = parse_error(nested);
    CHECK(msg.find("speed") != std::string::npos);
    CHECK(msg.find("extra") != std::string::npos);
    CHECK(parse_error(R"({"state_interval": {"alpha": 0, "beta": 1}, "scale": {"node": "wavelet"}})").find("scale") !=
          std::string::npos);
    CHECK(parse_error(R"({"scale": {"node": "affine", "a": 1, "b": 0}})").find("state_interval") != std::string::npos);
    CHECK(parse_error("{not json").size() > 0);
    CHECK(parse_error(R"({"catalog": "brownian_motion", "paramz": {}})").find("paramz") != std::string::npos);
}

TEST_CASE("verdict JSON has a stable key order") {
    Verdict v = classify(build_catalog_model("sticky_skew", {}));
    std::string text = verdict_to_json(v);
    ojson j = ojson::parse(text);
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    CHECK(keys == std::vector<std::string>{"model_id", "r", "nip", "nsa", "nupbr", "rp", "reports", "impr"});
    CHECK(j["nip"] == "holds");
    for (const auto& rep : j["reports"]) {
        std::vector<std::string> rk;
        for (auto it = rep.begin(); it != rep.end(); ++it) rk.push_back(it.key());
        CHECK(rk == std::vector<std::string>{"id", "status", "residual", "note"});
    }
    CHECK(verdict_to_json(classify(build_catalog_model("sticky_skew", {}))) == text);
}

TEST_CASE("tolerance overrides") {
    Tolerances t;
    apply_tolerance(t, "equality_rel", "1e-6");
    apply_tolerance(t, "levels", "8");
    CHECK(t.equality_rel == 1e-6);
    CHECK(t.numeric.levels == 8);
    CHECK_THROWS_AS(apply_tolerance(t, "nope", "1"), Error);
    CHECK_THROWS_AS(apply_tolerance(t, "levels", "x"), Error);
}

TEST_CASE("parameter lists") {
    Params p = parse_param_list("r=0.5, rho=1");
    CHECK(p.at("r") == "0.5");
    CHECK(p.at("rho") == "1");
    CHECK(parse_param_list("").empty());
    CHECK_THROWS_AS(parse_param_list("r"), Error);
}

TEST_CASE("simulation report JSON and CSV outputs are deterministic") {
    SimulationConfig cfg;
    cfg.N = 64;
    cfg.n_paths = 300;
    cfg.levels = 2;
    cfg.keep_paths = true;
    DiffusionSpec s = build_catalog_model("sticky_reflected_bm", {{"r", "0"}, {"rho", "0"}});
    auto a = simulate(s, cfg);
    auto b = simulate(s, cfg);
    CHECK(simulation_report_to_json(s.model_id, a) == simulation_report_to_json(s.model_id, b));
    CHECK(paths_csv(a) == paths_csv(b));
    std::string ladder = k_ladder_csv(a.tradeoff);
    CHECK(ladder.rfind("N,K_mean,K_se,ratio_to_previous\n", 0) == 0);
    std::string hist = payoff_histogram_csv(a);
    CHECK(hist.rfind("strategy,bin_lo,bin_hi,count\n", 0) == 0);
    std::string paths = paths_csv(a);
    CHECK(paths.rfind("path,terminal_u,terminal_x,absorbed,K,D", 0) == 0);
    ojson j = ojson::parse(simulation_report_to_json(s.model_id, a));
    CHECK(j["seed"] == 42);
    CHECK(j.contains("flags"));
    CHECK(j.contains("estimates"));
}

TEST_CASE("catalog JSON views") {
    ojson list = ojson::parse(catalog_list_json());
    CHECK(list.size() == catalog_entries().size());
    ojson e = ojson::parse(expected_verdict_json("cubed_bm", {}));
    CHECK(e["nip"] == "holds");
    CHECK(e["nsa"] == "fails");
    CHECK_THROWS_AS(catalog_entry_json("nope"), Error);
}
