#include <doctest.h>

#include "fuzz_specs.hpp"
#include "gdarb/arb_classifier.hpp"
#include "gdarb/errors.hpp"
#include "gdarb/mc_engine.hpp"
#include "gdarb/model_catalog.hpp"

#include <cmath>
#include <random>
#include <string>

using namespace gdarb;

namespace {

Tri nip_of(const DiffusionSpec& s) { return check_nip(derive_natural_scale(s), s).status; }
Tri nip0_of(const DiffusionSpec& s) { return check_nip_zero_rate(derive_natural_scale(s), s).status; }
Tri nsa_of(const DiffusionSpec& s) { return check_nsa(derive_natural_scale(s), s).status; }
Tri nupbr_of(const DiffusionSpec& s) { return check_nupbr(derive_natural_scale(s), s).status; }

DiffusionSpec bm(double r) { return build_model("brownian_motion", {{"r", fuzz::str(r)}}); }

bool has_absorbing(const DiffusionSpec& s) {
    auto v = derive_natural_scale(s);
    return v.left.kind == BoundaryKind::Absorbing || v.right.kind == BoundaryKind::Absorbing;
}

// s -> a s + b with m -> m / a: the same process in a shifted natural scale.
// Shifts are dyadic so kink locations map exactly.
DiffusionSpec shift_scale(DiffusionSpec s, double a, double b) {
    Expr to_old = make_affine(1.0 / a, -b / a);
    if (s.scale) s.scale = make_compose(make_affine(a, b), *s.scale);
    if (s.inverse_scale) s.inverse_scale = make_compose(*s.inverse_scale, to_old);
    auto scale_mass = [a](MeasureSpec m, bool natural, const Expr& back) {
        if (m.ac) {
            Expr ac = natural ? make_compose(m.ac, back) : m.ac;
            m.ac = make_product({make_const(natural ? 1.0 / (a * a) : 1.0 / a), ac});
        }
        for (auto& at : m.atoms) at.mass /= a;
        if (m.sc) m.sc->multiplier = make_product({make_const(1.0 / a), m.sc->multiplier});
        return m;
    };
    if (s.speed) s.speed = scale_mass(*s.speed, false, to_old);
    if (s.speed_natural) {
        MeasureSpec m = scale_mass(*s.speed_natural, true, to_old);
        for (auto& at : m.atoms) at.x = a * at.x + b;
        s.speed_natural = m;
    }
    for (auto& k : s.kinks) {
        k.x = a * k.x + b;
        k.jump /= a;
    }
    for (auto& z : s.qprime_zero_set) {
        z.a = a * z.a + b;
        z.b = a * z.b + b;
        for (auto& e : z.exclude) e = {a * e.first + b, a * e.second + b};
        z.measure *= a;
    }
    for (auto& pb : s.phi_behaviors) {
        pb.point = a * pb.point + b;
        pb.C *= std::pow(a, -pb.p - 1.0);
    }
    return s;
}

// Per-visit residual of discounted price increments against gamma e^{rt} d<M>,
// summed along each path up to the first jump after T; returns (mean, se).
std::pair<double, double> impr_residual(const DiffusionSpec& spec, int N, std::size_t n, std::uint64_t seed) {
    auto view = derive_natural_scale(spec);
    auto c = build_chain(view, spec, N);
    const double r = c.r;
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        Philox g(seed, p);
        std::size_t i = c.start;
        double t = 0.0, acc = 0.0;
        while (t < c.T) {
            StateRule rule = c.rule[i];
            if (rule == StateRule::Absorb || rule == StateRule::Exit) break;
            auto [v1, v2] = g.next_pair();
            double tau = -c.mean_hold[i] * std::log(v1);
            std::size_t j = rule == StateRule::ReflectUp     ? i + 1
                            : rule == StateRule::ReflectDown ? i - 1
                            : (v2 < c.up_prob[i] ? i + 1 : i - 1);
            double y = std::exp(-r * (t + tau)) * c.q[j] - std::exp(-r * t) * c.q[i];
            double qp = view.q.d_plus(c.u[i]);
            double du = c.u[j] - c.u[i];
            double x = view.gamma(c.u[i]) * std::exp(-r * t) * qp * qp * du * du;
            acc += y - x;
            t += tau;
            i = j;
        }
        s1 += acc;
        s2 += acc * acc;
    }
    double mean = s1 / n;
    double var = (s2 / n - mean * mean) * n / (n - 1.0);
    return {mean, std::sqrt(var / n)};
}

}  // namespace

TEST_CASE("check_nip examples") {
    CHECK(nip_of(build_model("sticky_reflected_bm", {{"r", "1/2"}, {"rho", "1"}})) == Tri::Holds);
    CHECK(nip_of(build_model("squared_bessel", {{"delta", "1"}})) == Tri::Holds);
    CHECK(nip_of(build_model("sticky_reflected_bm", {{"r", "0"}, {"rho", "0"}})) == Tri::Fails);
}

TEST_CASE("check_nip_zero_rate examples") {
    CHECK(nip0_of(build_model("cubed_bm", {})) == Tri::Holds);
    CHECK(nip0_of(build_model("fat_cantor", {})) == Tri::Holds);
    CHECK(nip0_of(build_model("sticky_skew", {{"c", "0"}, {"r", "0"}})) == Tri::Fails);
}

TEST_CASE("check_nip_zero_rate rejects a nonzero rate") {
    auto s = bm(0.3);
    CHECK_THROWS_AS(check_nip_zero_rate(derive_natural_scale(s), s), Error);
}

TEST_CASE("check_nsa examples") {
    CHECK(nsa_of(build_model("cubed_bm", {})) == Tri::Fails);
    for (const char* r : {"0", "0.1", "-1", "2"})
        CHECK(nsa_of(build_model("gen_squared_bessel", {{"m0", "inf"}, {"r", r}})) == Tri::Holds);
    CHECK(nsa_of(bm(0.0)) == Tri::Holds);
}

TEST_CASE("check_nupbr examples") {
    CHECK(nupbr_of(build_model("gen_squared_bessel", {{"m0", "inf"}})) == Tri::Fails);
    CHECK(nupbr_of(build_model("sticky_reflected_bm", {})) == Tri::Holds);
    CHECK(nupbr_of(bm(0.7)) == Tri::Holds);
}

TEST_CASE("check_rp examples") {
    CHECK(check_rp(derive_natural_scale(build_model("fat_cantor", {}))).status == Tri::Fails);
    CHECK(check_rp(derive_natural_scale(build_model("cubed_bm", {}))).status == Tri::Holds);
    CHECK(check_rp(derive_natural_scale(bm(0.0))).status == Tri::Holds);
}

TEST_CASE("classify examples") {
    auto all = [](const Verdict& v, Tri t) { return v.nip == t && v.nsa == t && v.nupbr == t; };
    CHECK(all(classify(build_model("sticky_skew", {})), Tri::Holds));
    CHECK(all(classify(build_model("sticky_skew", {{"r", "0.9"}})), Tri::Fails));
    for (double r : {-1.0, 0.0, 0.25, 3.0}) {
        Verdict v = classify(bm(r));
        CHECK(all(v, Tri::Holds));
        CHECK(v.impr.has_value());
    }
}

TEST_CASE("BM has gamma(u) = -r u") {
    auto v = derive_natural_scale(bm(0.4));
    for (double u : {-2.0, 0.5, 3.0}) CHECK(v.gamma(u) == doctest::Approx(-0.4 * u).epsilon(1e-12));
}

TEST_CASE("equality-type reports carry a residual that decides pass or fail") {
    Tolerances tol;
    for (const char* r : {"1/2", "0.45"}) {
        Verdict v = classify(build_model("sticky_reflected_bm", {{"r", r}}), tol);
        bool seen = false;
        for (const auto& rep : v.reports) {
            if (rep.id != "NIP.i.b") continue;
            if (!rep.residual) continue;
            seen = true;
            bool small = std::fabs(*rep.residual) <= tol.equality_rel;
            CHECK(small == (rep.status == Tri::Holds));
        }
        CHECK(seen);
    }
    Verdict skew = classify(build_model("sticky_skew", {{"r", "0.9"}}), tol);
    bool seen = false;
    for (const auto& rep : skew.reports)
        if (rep.id == "NIP.ii" && rep.residual) {
            seen = true;
            CHECK(rep.status == Tri::Fails);
        }
    CHECK(seen);
}

TEST_CASE("property: implication chain, no-absorbing equivalence and zero-rate agreement on fuzzed specs") {
    std::mt19937_64 rng(20240611);
    int checked = 0, zero_rate = 0, no_absorbing = 0;
    for (int i = 0; i < 150; ++i) {
        DiffusionSpec s = fuzz::random_spec(rng, i);
        CAPTURE(i);
        Verdict v = classify(s);
        CHECK(v.nip != Tri::Inconclusive);
        if (v.nupbr == Tri::Holds) CHECK(v.nsa == Tri::Holds);
        if (v.nsa == Tri::Holds) CHECK(v.nip == Tri::Holds);
        if (v.nip == Tri::Fails) {
            CHECK(v.nsa == Tri::Fails);
            CHECK(v.nupbr == Tri::Fails);
        }
        if (!has_absorbing(s)) {
            CHECK(nsa_of(s) == nupbr_of(s));
            ++no_absorbing;
        }
        if (s.r == 0.0) {
            CHECK(nip_of(s) == nip0_of(s));
            ++zero_rate;
        }
        ++checked;
    }
    CHECK(checked == 150);
    CHECK(zero_rate > 10);
    CHECK(no_absorbing > 10);
}

TEST_CASE("property: zero-rate agreement on catalog models") {
    for (const auto& e : catalog_entries()) {
        Params p;
        for (const auto& ps : e.params)
            if (ps.name == "r") p["r"] = "0";
        DiffusionSpec s = build_model(e.name, p);
        CAPTURE(e.name);
        CHECK(nip_of(s) == nip0_of(s));
    }
}

TEST_CASE("property: scale-shift invariance") {
    std::vector<DiffusionSpec> specs = {
        build_model("sticky_reflected_bm", {}),
        build_model("sticky_reflected_bm", {{"rho", "0.9"}}),
        build_model("sticky_skew", {}),
        build_model("sticky_skew", {{"r", "0.9"}}),
        build_model("gen_squared_bessel", {{"m0", "inf"}}),
        build_model("gen_squared_bessel", {{"m0", "0"}}),
        build_model("squared_bessel", {{"delta", "0.5"}}),
        build_model("cubed_bm", {}),
        bm(0.3),
    };
    std::mt19937_64 rng(5);
    for (int i = 0; i < 10; ++i) specs.push_back(fuzz::random_spec(rng, i));
    for (const auto& s : specs) {
        Verdict base = classify(s);
        for (auto [a, b] : {std::pair{2.0, 0.0}, std::pair{0.5, -1.0}, std::pair{4.0, 0.75}}) {
            CAPTURE(s.model_id);
            CAPTURE(a);
            CAPTURE(b);
            Verdict v = classify(shift_scale(s, a, b));
            CHECK(v.nip == base.nip);
            CHECK(v.nsa == base.nsa);
            CHECK(v.nupbr == base.nupbr);
            CHECK(v.rp == base.rp);
        }
    }
}

TEST_CASE("property: IMPR residual vanishes on NIP-holding models") {
    struct Case {
        DiffusionSpec spec;
        std::uint64_t seed;
    };
    std::vector<Case> cases = {
        {build_model("brownian_motion", {{"r", "1/2"}, {"x0", "1/2"}}), 11},
        {build_model("sticky_reflected_bm", {}), 12},
        {build_model("sticky_skew", {}), 13},
    };
    for (const auto& c : cases) {
        REQUIRE(classify(c.spec).nip == Tri::Holds);
        auto [mean, se] = impr_residual(c.spec, 256, 4000, c.seed);
        CAPTURE(c.spec.model_id);
        CAPTURE(mean);
        CAPTURE(se);
        CHECK(std::fabs(mean / se) < 3.0);
    }
}

TEST_CASE("IMPR residual detects an NIP failure") {
    auto spec = build_model("sticky_reflected_bm", {{"r", "0"}, {"rho", "0"}});
    REQUIRE(classify(spec).nip == Tri::Fails);
    auto [mean, se] = impr_residual(spec, 256, 4000, 14);
    CHECK(mean / se > 3.0);
}
