#include <doctest.h>

#include "gdarb/diffusion_model.hpp"
#include "gdarb/errors.hpp"
#include "gdarb/model_catalog.hpp"

#include <cmath>
#include <random>
#include <string>

using namespace gdarb;

namespace {

MeasureSpec lebesgue() {
    MeasureSpec m;
    m.ac = make_const(1.0);
    return m;
}

DiffusionSpec bm_spec(double r = 0.0) {
    DiffusionSpec s;
    s.scale = make_affine(1.0, 0.0);
    s.speed = lebesgue();
    s.r = r;
    return s;
}

std::string error_text(const DiffusionSpec& s) {
    try {
        derive_natural_scale(s);
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("Brownian motion has phi = gamma = 0 and two inaccessible ends") {
    auto v = derive_natural_scale(bm_spec());
    for (double u : {-2.0, 0.0, 1.5}) {
        CHECK(v.phi(u) == 0.0);
        CHECK(v.gamma(u) == 0.0);
    }
    CHECK(v.left.kind == BoundaryKind::Inaccessible);
    CHECK(v.right.kind == BoundaryKind::Inaccessible);
}

TEST_CASE("cubed Brownian motion has phi(u) = 1/u off zero") {
    auto spec = build_model("cubed_bm", {});
    auto v = derive_natural_scale(spec);
    for (double u : {-2.0, -0.3, 0.01, 1.0, 4.0}) CHECK(v.phi(u) == doctest::Approx(1.0 / u).epsilon(1e-9));
    CHECK(v.phi(0.0) == 0.0);
}

TEST_CASE("squared Bessel market price of risk is delta / (4 Y)") {
    for (double delta : {0.5, 1.0, 1.5}) {
        auto spec = build_model("squared_bessel", {{"delta", std::to_string(delta)}});
        auto v = derive_natural_scale(spec);
        for (double u : {0.2, 1.0, 2.5}) {
            double y = v.q.value(u);
            CHECK(v.gamma(u) == doctest::Approx(delta / (4.0 * y)).epsilon(1e-8));
        }
        CHECK(v.gamma(0.0) == 0.0);
    }
}

TEST_CASE("natural scale view is consistent with the spec") {
    auto spec = build_model("sticky_skew", {});
    auto v = derive_natural_scale(spec);
    const auto& s = *spec.scale;
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> U(-3.0, 4.0);
    for (int i = 0; i < 100; ++i) {
        double x = U(rng);
        CHECK(v.q.value(eval(s, x)) == doctest::Approx(x).epsilon(1e-10));
        double y = U(rng);
        double a = std::min(x, y), b = std::max(x, y);
        DecomposedMeasure m = to_measure(*spec.speed, {-kInfinity, kInfinity, false, false});
        CHECK(v.mU.mass(eval(s, a), eval(s, b)) == doctest::Approx(m.mass(a, b)).epsilon(1e-8));
    }
}

TEST_CASE("boundary classification examples") {
    auto v = derive_natural_scale(build_model("sticky_reflected_bm", {{"rho", "2"}}));
    CHECK(v.left.kind == BoundaryKind::Reflecting);
    CHECK(v.left.stickiness == 2.0);
    CHECK(v.right.kind == BoundaryKind::Inaccessible);
    auto g = derive_natural_scale(build_model("gen_squared_bessel", {{"m0", "inf"}}));
    CHECK(g.left.kind == BoundaryKind::Absorbing);
    auto g0 = derive_natural_scale(build_model("gen_squared_bessel", {{"m0", "0"}}));
    CHECK(g0.left.kind == BoundaryKind::Reflecting);
    CHECK(g0.left.stickiness == 0.0);
}

TEST_CASE("boundary declaration conflicting with the test is an error") {
    auto spec = build_model("sticky_reflected_bm", {});
    spec.left_declared = BoundaryKind::Absorbing;
    CHECK_THROWS_AS(derive_natural_scale(spec), Error);
}

TEST_CASE("an inaccessible closed end is rejected") {
    // s = id, m = x^-2 dx: int_0 y m(dy) diverges, so 0 is inaccessible.
    DiffusionSpec s;
    s.J = {0.0, kInfinity, true, false};
    s.scale = make_affine(1.0, 0.0);
    MeasureSpec m;
    m.ac = make_power_signed(0.0, -2.0);
    s.speed = m;
    s.x0 = 1.0;
    CHECK_THROWS_AS(derive_natural_scale(s), Error);
}

TEST_CASE("absorbing starting value is a validation error") {
    auto spec = build_model("gen_squared_bessel", {{"m0", "inf"}});
    spec.x0 = 0.0;
    std::string msg = error_text(spec);
    CHECK(msg.find("starting value absorbing") != std::string::npos);
}

TEST_CASE("validation errors name the offending field") {
    DiffusionSpec s = bm_spec();
    s.J = {1.0, 0.0, false, false};
    CHECK(error_text(s).find("state_interval") != std::string::npos);
    s = bm_spec();
    s.scale = make_affine(-1.0, 0.0);
    CHECK(error_text(s).find("scale") != std::string::npos);
    s = bm_spec();
    s.J = {0.0, kInfinity, false, false};
    s.x0 = -1.0;
    CHECK(error_text(s).find("x0") != std::string::npos);
}

TEST_CASE("semimartingale assumption examples") {
    auto cube = build_model("cubed_bm", {});
    CHECK(check_semimartingale_assumption(derive_natural_scale(cube), cube).pass);
    auto bm = bm_spec();
    CHECK(check_semimartingale_assumption(derive_natural_scale(bm), bm).pass);
    // q(u) = sign(u) sqrt|u|: q'_+ is not of locally finite variation at 0.
    DiffusionSpec root;
    root.inverse_scale = make_power_signed(0.0, 0.5);
    root.speed_natural = lebesgue();
    root.x0 = 0.5;
    auto view = derive_natural_scale(root);
    CHECK_FALSE(check_semimartingale_assumption(view, root).pass);
}

TEST_CASE("decomposition fields: Brownian motion") {
    auto spec = bm_spec();
    auto f = semimartingale_decomposition_fields(derive_natural_scale(spec), spec);
    for (double u : {-1.0, 0.0, 2.0}) {
        CHECK(f.qv_factor(u) == 1.0);
        CHECK(f.drift_measure.ac_density(u) == 0.0);
    }
    CHECK(f.drift_measure.atoms.empty());
    CHECK(f.boundary_terms.empty());
}

TEST_CASE("decomposition fields: sticky reflected boundary term") {
    for (auto [r, rho] : {std::pair{0.5, 1.0}, std::pair{0.5, 0.9}, std::pair{0.0, 1.0}}) {
        auto spec = build_model("sticky_reflected_bm", {{"r", std::to_string(r)}, {"rho", std::to_string(rho)}});
        auto f = semimartingale_decomposition_fields(derive_natural_scale(spec), spec);
        REQUIRE(f.boundary_terms.size() == 1);
        CHECK(f.boundary_terms[0].net() == doctest::Approx(0.5 - r * rho).epsilon(1e-12));
    }
}

TEST_CASE("decomposition fields: pure skew point at zero rate") {
    const double kappa = 0.75;
    auto spec = build_model("sticky_skew", {{"c", "0"}, {"r", "0"}});
    auto f = semimartingale_decomposition_fields(derive_natural_scale(spec), spec);
    REQUIRE(f.drift_measure.atoms.size() == 1);
    CHECK(f.drift_measure.atoms[0].x == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(f.drift_measure.atoms[0].mass == doctest::Approx(0.5 * (2 * kappa - 1) / ((1 - kappa) * kappa)).epsilon(1e-12));
}

TEST_CASE("zero rate drift density is half of q'' on polynomial q") {
    DiffusionSpec s;
    s.inverse_scale = make_sum({make_power_signed(0.0, 3.0), make_affine(1.0, 0.0)});
    s.speed_natural = lebesgue();
    auto v = derive_natural_scale(s);
    auto f = semimartingale_decomposition_fields(v, s);
    for (double u : {-2.0, -0.5, 0.25, 3.0}) {
        CHECK(f.drift_measure.ac_density(u) == doctest::Approx(3.0 * u).epsilon(1e-9));  // (u^3 + u)'' / 2
        CHECK(f.qv_factor(u) == doctest::Approx(std::pow(3 * u * u + 1, 2)).epsilon(1e-9));
    }
}

TEST_CASE("q'' has no absolutely continuous mass on the zero set of q'") {
    for (const char* name : {"cubed_bm", "fat_cantor"}) {
        auto spec = build_model(name, {});
        auto v = derive_natural_scale(spec);
        for (const auto& z : v.zero_set) {
            const int n = 10000;
            for (int i = 0; i < n; ++i) {
                double u = z.is_point() ? z.a : z.a + (z.b - z.a) * (i + 0.5) / n;
                if (!z.contains(u)) continue;
                CHECK(v.qpp.ac_density(u) == 0.0);
                if (z.is_point()) break;
            }
        }
    }
}
