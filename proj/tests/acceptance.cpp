// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "fuzz_specs.hpp"
#include "gdarb/arb_classifier.hpp"
#include "gdarb/mc_engine.hpp"
#include "gdarb/model_catalog.hpp"
#include "gdarb/serialize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace gdarb;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Outcome {
    bool pass = true;
    std::string detail;
    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
};

const char* tri(Tri t) { return verdict_string(t); }

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// 1. Golden catalog verdicts.
Outcome golden_table() {
    struct Case {
        std::string name;
        Params p;
        Tri nip, nsa, nupbr;
        std::optional<Tri> rp;
    };
    const Tri H = Tri::Holds, F = Tri::Fails;
    std::vector<Case> cases = {
        {"squared_bessel", {{"delta", "0.5"}}, H, F, F, {}},
        {"squared_bessel", {{"delta", "1"}}, H, F, F, {}},
        {"squared_bessel", {{"delta", "1.5"}}, H, F, F, {}},
        {"sticky_reflected_bm", {{"r", "0.5"}, {"rho", "1"}}, H, H, H, {}},
        {"sticky_reflected_bm", {{"r", "0.5"}, {"rho", "0.9"}}, F, F, F, {}},
        {"sticky_reflected_bm", {{"r", "0"}, {"rho", "1"}}, F, F, F, {}},
        {"cubed_bm", {}, H, F, F, {}},
        {"fat_cantor", {}, H, F, F, F},
        {"sticky_skew", {{"kappa", "3/4"}, {"c", "1"}, {"xi", "4/3"}, {"r", "1"}}, H, H, H, {}},
        {"sticky_skew", {{"kappa", "3/4"}, {"c", "1"}, {"xi", "4/3"}, {"r", "0.9"}}, F, F, F, {}},
        {"gen_squared_bessel", {{"nu", "-1/2"}, {"m0", "inf"}, {"r", "0"}}, H, H, F, {}},
        {"gen_squared_bessel", {{"nu", "-1/2"}, {"m0", "inf"}, {"r", "0.1"}}, H, H, F, {}},
        {"gen_squared_bessel", {{"nu", "-1/2"}, {"m0", "0"}, {"r", "0"}}, H, F, F, {}},
        {"brownian_motion", {}, H, H, H, {}},
    };
    Outcome o;
    for (const auto& c : cases) {
        Verdict v = classify(build_catalog_model(c.name, c.p));
        std::string id = catalog_model_id(c.name, c.p);
        for (Tri t : {v.nip, v.nsa, v.nupbr, v.rp}) o.require(t != Tri::Inconclusive, id + " inconclusive");
        bool ok = v.nip == c.nip && v.nsa == c.nsa && v.nupbr == c.nupbr && (!c.rp || v.rp == *c.rp);
        o.require(ok, id + " gave (" + tri(v.nip) + ", " + tri(v.nsa) + ", " + tri(v.nupbr) + ", rp " + tri(v.rp) + ")");
    }
    o.detail = std::to_string(cases.size()) + " models" + (o.detail.empty() ? "" : ": " + o.detail);
    return o;
}

// 2. Implication-chain fuzzing.
Outcome fuzzing() {
    std::mt19937_64 rng(7);
    int chain = 0, equiv = 0, zero_rate = 0, errors = 0, n_equiv = 0, n_zero = 0, holds = 0;
    for (int i = 0; i < 100; ++i) {
        try {
            DiffusionSpec s = fuzz::random_spec(rng, i);
            NaturalScaleView view = derive_natural_scale(s);
            Verdict v = classify(s);
            holds += v.nip == Tri::Holds;
            if ((v.nupbr == Tri::Holds && v.nsa != Tri::Holds) || (v.nsa == Tri::Holds && v.nip != Tri::Holds) ||
                (v.nip == Tri::Fails && (v.nsa != Tri::Fails || v.nupbr != Tri::Fails)))
                ++chain;
            bool absorbing = view.left.kind == BoundaryKind::Absorbing || view.right.kind == BoundaryKind::Absorbing;
            if (!absorbing) {
                ++n_equiv;
                if (check_nsa(view, s).status != check_nupbr(view, s).status) ++equiv;
            }
            if (s.r == 0.0) {
                ++n_zero;
                if (check_nip(view, s).status != check_nip_zero_rate(view, s).status) ++zero_rate;
            }
        } catch (const std::exception& e) {
            ++errors;
        }
    }
    Outcome o;
    o.require(chain == 0, std::to_string(chain) + " implication violations");
    o.require(equiv == 0, std::to_string(equiv) + " NSA/NUPBR disagreements");
    o.require(zero_rate == 0, std::to_string(zero_rate) + " zero-rate disagreements");
    o.require(errors == 0, std::to_string(errors) + " specs raised errors");
    o.detail = "100 specs (" + std::to_string(holds) + " NIP-holding, " + std::to_string(n_equiv) + " without absorption, " +
               std::to_string(n_zero) + " at r = 0)" + (o.detail.empty() ? "" : ": " + o.detail);
    return o;
}

// 3. Exponent rule on the p grid.
Outcome exponent_rule() {
    Outcome o;
    Interval local{-1.0, 1.0, true, true};
    Interval collar{0.0, 1.0, true, true};
    int checked = 0;
    for (int k = 0; k <= 12; ++k) {
        const double p = -2.0 + 0.25 * k;
        Fn f = [p](double x) { return std::pow(std::fabs(x), p); };
        auto a = decide_L2_local(f, local, {{0.0, LocalBehavior::Side::Both, p, 1.0}});
        auto b = decide_weighted_L2_boundary(f, 0.0, collar, {{0.0, LocalBehavior::Side::Right, p, 1.0}});
        o.require(a.status != Integrability::Inconclusive && (a.status == Integrability::Finite) == (p > -0.5),
                  "local p=" + fmt("%g", p));
        o.require(b.status != Integrability::Inconclusive && (b.status == Integrability::Finite) == (p > -1.0),
                  "boundary p=" + fmt("%g", p));
        checked += 2;
    }
    o.detail = std::to_string(checked) + " decisions" + (o.detail.empty() ? "" : ": " + o.detail);
    return o;
}

// 4. Brownian chain correctness.
Outcome chain_correctness() {
    auto spec = build_model("brownian_motion", {});
    auto view = derive_natural_scale(spec);
    auto c = build_chain(view, spec, 512);
    SampleRequest req;
    req.drift_states = {c.start};
    req.tradeoff = false;
    auto s = sample_paths(c, 100000, 42, req);
    std::vector<double> x;
    x.reserve(s.paths.size());
    for (const auto& p : s.paths) x.push_back(c.q[p.terminal]);
    const double n = static_cast<double>(x.size());
    double m = 0.0;
    for (double a : x) m += a;
    m /= n;
    double ss = 0.0;
    for (double a : x) ss += (a - m) * (a - m);
    double se = std::sqrt(ss / (n - 1) / n);
    std::sort(x.begin(), x.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double F = 0.5 * std::erfc(-(x[i] - spec.x0) / std::sqrt(2.0 * spec.T));
        ks = std::max({ks, std::fabs(F - i / n), std::fabs(F - (i + 1) / n)});
    }
    const auto& d = s.drift.at(0);
    double hm = d.hold_sum / d.visits;
    double hse = std::sqrt((d.hold_sum_sq / d.visits - hm * hm) / d.visits);
    double delta = c.u[c.start + 1] - c.u[c.start];
    Outcome o;
    o.require(std::fabs(m - spec.x0) < 3 * se, "terminal mean off");
    o.require(ks < 0.02, "KS distance too large");
    o.require(std::fabs(hm - delta * delta) < 3 * hse, "exit time off");
    std::ostringstream os;
    os << "mean " << m << " (se " << se << "), KS " << ks << ", exit time " << hm << " vs " << delta * delta << " (se "
       << hse << "), " << s.discarded << " discarded";
    o.detail = os.str() + (o.detail.empty() ? "" : ": " + o.detail);
    return o;
}

// 5. Empirical arbitrage on reflected BM at zero rate.
Outcome empirical_arbitrage() {
    auto spec = build_model("sticky_reflected_bm", {{"r", "0"}, {"rho", "0"}, {"x0", "1.5"}, {"T", "1"}});
    SimulationConfig cfg;
    cfg.N = 512;
    cfg.n_paths = 10000;
    cfg.levels = 1;
    auto rep = simulate(spec, cfg);
    double du = 0.0;
    for (const auto& [k, v] : rep.notes)
        if (k == "max_spacing") du = std::stod(v);
    Outcome o;
    const StrategyResult* st = nullptr;
    for (const auto& r : rep.strategies)
        if (r.name == "post_hitting_hold") st = &r;
    if (!st) {
        o.require(false, "post_hitting_hold strategy missing");
        return o;
    }
    o.require(du > 0.0, "grid spacing missing");
    o.require(st->min_payoff >= -2.0 * du, "minimum payoff below -2 du");
    o.require(st->wilson_lo > 0.0, "Wilson interval includes 0");
    std::ostringstream os;
    os << "min payoff " << st->min_payoff << " (bound " << -2.0 * du << "), P(payoff > 0) in [" << st->wilson_lo << ", "
       << st->wilson_hi << "]";
    o.detail = os.str() + (o.detail.empty() ? "" : ": " + o.detail);
    return o;
}

// 6. K-divergence discrimination.
Outcome k_divergence() {
    struct Case {
        std::string name;
        Params p;
        bool divergent;
    };
    std::vector<Case> cases = {
        {"cubed_bm", {}, true},
        {"gen_squared_bessel", {{"m0", "0"}, {"r", "0"}}, true},
        {"sticky_reflected_bm", {{"r", "1/2"}, {"rho", "1"}}, false},
        {"brownian_motion", {{"r", "0"}}, false},
        {"brownian_motion", {{"r", "0.2"}}, false},
    };
    Outcome o;
    std::ostringstream os;
    for (const auto& c : cases) {
        auto spec = build_model(c.name, c.p);
        auto view = derive_natural_scale(spec);
        auto t = estimate_tradeoff(view, spec, 256, 3, 2000, 42);
        std::string id = catalog_model_id(c.name, c.p);
        o.require(t.divergent == c.divergent, id + " flag " + (t.divergent ? "true" : "false"));
        os << id << " K:";
        for (const auto& k : t.K) os << " " << k.value;
        os << (t.divergent ? " divergent" : " bounded") << "; ";
    }
    o.detail = os.str() + o.detail;
    return o;
}

// 7. Martingale diagnostics.
Outcome martingale_diagnostics() {
    Outcome o;
    std::ostringstream os;
    {
        auto spec = build_model("sticky_reflected_bm", {{"r", "0"}, {"rho", "0"}});
        auto view = derive_natural_scale(spec);
        auto c = build_chain(view, spec, 512);
        SampleRequest req;
        req.half_local_time = true;
        req.tradeoff = false;
        auto s = sample_paths(c, 10000, 42, req);
        auto d = martingale_diagnostic(s, c, MartingaleTarget::UMinusHalfL);
        o.require(std::fabs(d.t_stat) < 3.0, "U - L/2 not a martingale");
        os << "reflected U - L/2 t " << d.t_stat << "; ";
    }
    // kappa = 3/4, c = 1, xi = 4/3: the balanced rate is 1; 0.8 and 1.2 violate it by 20%.
    for (auto [r, balanced] : {std::pair{"1", true}, std::pair{"0.8", false}, std::pair{"1.2", false}}) {
        auto spec = build_model("sticky_skew", {{"r", r}});
        auto view = derive_natural_scale(spec);
        auto c = build_chain(view, spec, 512);
        SampleRequest req;
        req.tradeoff = false;
        req.drift_states = {c.nearest(0.0)};
        auto s = sample_paths(c, 10000, 42, req);
        auto d = martingale_diagnostic(s, c, MartingaleTarget::DiscountedPriceDrift);
        bool zero = std::fabs(d.t_stat) < 3.0;
        o.require(zero == balanced, std::string("sticky-skew r=") + r + " t " + fmt("%g", d.t_stat));
        os << "sticky-skew r=" << r << " t " << d.t_stat << "; ";
    }
    o.detail = os.str() + o.detail;
    return o;
}

// 8. Byte-identical reports for a fixed seed.
Outcome determinism() {
    Outcome o;
    SimulationConfig cfg;
    cfg.N = 256;
    cfg.n_paths = 4000;
    cfg.levels = 3;
    cfg.seed = 2024;
    cfg.keep_paths = true;
    int compared = 0;
    for (const auto& [name, p] : std::vector<std::pair<std::string, Params>>{
             {"sticky_skew", {}}, {"sticky_reflected_bm", {{"r", "0"}, {"rho", "0"}}}, {"cubed_bm", {}}}) {
        auto spec = build_catalog_model(name, p);
        std::string v1 = verdict_to_json(classify(spec)), v2 = verdict_to_json(classify(spec));
        auto a = simulate(spec, cfg);
        auto b = simulate(spec, cfg);
        std::string j1 = simulation_report_to_json(spec.model_id, a), j2 = simulation_report_to_json(spec.model_id, b);
        o.require(v1 == v2, spec.model_id + " verdict differs");
        o.require(j1 == j2, spec.model_id + " simulation report differs");
        o.require(paths_csv(a) == paths_csv(b), spec.model_id + " path CSV differs");
        o.require(payoff_histogram_csv(a) == payoff_histogram_csv(b), spec.model_id + " histogram differs");
        o.require(k_ladder_csv(a.tradeoff) == k_ladder_csv(b.tradeoff), spec.model_id + " K ladder differs");
        compared += 5;
    }
    o.detail = std::to_string(compared) + " report pairs compared" + (o.detail.empty() ? "" : ": " + o.detail);
    return o;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        double budget_s;
        std::function<Outcome()> run;
    };
    std::vector<Criterion> all = {
        {1, 5, golden_table},       {2, 60, fuzzing},          {3, 1e9, exponent_rule},
        {4, 120, chain_correctness}, {5, 60, empirical_arbitrage}, {6, 300, k_divergence},
        {7, 120, martingale_diagnostics}, {8, 1e9, determinism},
    };
    int failed = 0;
    for (const auto& c : all) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("error: ") + e.what();
        }
        double t = seconds_since(t0);
        if (t > c.budget_s) {
            o.pass = false;
            o.detail += "; over the " + fmt("%g", c.budget_s) + " s budget";
        }
        std::printf("criterion %d: %s (%.1f s) %s\n", c.id, o.pass ? "PASS" : "FAIL", t, o.detail.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed == 0 ? 0 : 1;
}
