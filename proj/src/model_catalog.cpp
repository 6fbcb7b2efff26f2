#include "gdarb/model_catalog.hpp"

#include "gdarb/errors.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

namespace gdarb {

namespace {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t");
    auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

bool is_inf_text(const std::string& t) {
    std::string l;
    for (char c : trim(t)) l.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return l == "inf" || l == "+inf" || l == "infinity" || l == "+infinity";
}

// Exact value of a decimal literal such as "-1.25e-3".
Rational parse_decimal(const std::string& text) {
    std::string t = trim(text);
    std::size_t i = 0;
    bool neg = false;
    if (i < t.size() && (t[i] == '+' || t[i] == '-')) neg = t[i++] == '-';
    BigInt digits = 0;
    int frac = 0, nd = 0;
    bool dot = false;
    for (; i < t.size(); ++i) {
        char c = t[i];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            digits = digits * 10 + (c - '0');
            ++nd;
            if (dot) ++frac;
        } else if (c == '.' && !dot) {
            dot = true;
        } else {
            break;
        }
    }
    if (nd == 0) fail(ErrorKind::Parse, "malformed number '" + text + "'");
    long exp10 = 0;
    if (i < t.size() && (t[i] == 'e' || t[i] == 'E')) {
        ++i;
        bool eneg = false;
        if (i < t.size() && (t[i] == '+' || t[i] == '-')) eneg = t[i++] == '-';
        if (i >= t.size()) fail(ErrorKind::Parse, "malformed number '" + text + "'");
        long e = 0;
        for (; i < t.size() && std::isdigit(static_cast<unsigned char>(t[i])); ++i) {
            e = e * 10 + (t[i] - '0');
            if (e > 400) fail(ErrorKind::Parse, "exponent out of range in '" + text + "'");
        }
        exp10 = eneg ? -e : e;
    }
    if (i != t.size()) fail(ErrorKind::Parse, "malformed number '" + text + "'");
    exp10 -= frac;
    BigInt p = 1;
    for (long k = 0; k < std::labs(exp10); ++k) p *= 10;
    Rational v = exp10 >= 0 ? Rational(digits * p) : Rational(digits, p);
    return neg ? Rational(-v) : v;
}

Rational parse_rational(const std::string& text) {
    if (is_inf_text(text)) fail(ErrorKind::Parse, "expected a finite number, got '" + text + "'");
    auto slash = text.find('/');
    if (slash == std::string::npos) return parse_decimal(text);
    Rational num = parse_decimal(text.substr(0, slash));
    Rational den = parse_decimal(text.substr(slash + 1));
    if (den == 0) fail(ErrorKind::Parse, "zero denominator in '" + text + "'");
    return num / den;
}

std::vector<CatalogEntry> make_entries() {
    const ParamSpec T{"T", "time horizon for simulation", 0.0, kInfinity, true, true, false, "1"};
    std::vector<CatalogEntry> v;
    v.push_back({"squared_bessel",
                 "squared Bessel process of dimension delta in (0,2) on [0,inf), instantaneously reflecting at 0; "
                 "s(x) = x^(1-delta/2), m(dx) = x^(delta/2-1) dx / (2(2-delta))",
                 {{"delta", "dimension", 0.0, 2.0, true, true, false, "1"},
                  {"r", "interest rate (only r = 0 is covered)", 0.0, 0.0, false, false, false, "0"},
                  {"x0", "starting value", 0.0, kInfinity, true, true, false, "1"},
                  T},
                 "NIP holds, NSA fails, NUPBR fails, RP holds",
                 "q'(0) = 0 at the reflecting origin gives NIP; with r = 0 a reflecting boundary excludes NSA"});
    v.push_back({"sticky_reflected_bm",
                 "Brownian motion on [1,inf) with (sticky) reflection at 1; s(x) = x, m(dx) = dx + rho delta_1",
                 {{"r", "interest rate", -kInfinity, kInfinity, false, false, false, "1/2"},
                  {"rho", "stickiness at 1", 0.0, kInfinity, false, false, false, "1"},
                  {"x0", "starting value", 1.0, kInfinity, false, false, false, "3/2"},
                  T},
                 "all hold iff 2 r rho = 1, otherwise all fail; RP holds",
                 "boundary identity at the reflecting point reduces to 2 r rho = 1; phi(x) = -r x is locally bounded"});
    v.push_back({"cubed_bm", "Y = W^3 for a Brownian motion W started at w0; q(u) = u^3, m^U = Lebesgue",
                 {{"w0", "starting value of W", -kInfinity, kInfinity, false, false, false, "1/2"},
                  {"r", "interest rate (only r = 0 is covered)", 0.0, 0.0, false, false, false, "0"},
                  T},
                 "NIP holds, NSA fails, NUPBR fails, RP holds",
                 "q is smooth so the zero-rate NIP criterion applies; phi(u) = 1/u is not square integrable at 0"});
    v.push_back({"fat_cantor",
                 "Y = q(W) with q' = distance to a fat Cantor set F in [0,1]; generation-8 approximant of q with "
                 "exact annotations",
                 {{"w0", "starting value of W", -kInfinity, kInfinity, false, false, false, "1/2"},
                  {"a", "total removed length bound, lambda(F) >= 1 - a/2", 0.0, 1.0, true, true, false, "1/2"},
                  {"r", "interest rate (only r = 0 is covered)", 0.0, 0.0, false, false, false, "0"},
                  T},
                 "NIP holds, NSA fails, NUPBR fails, RP fails",
                 "q' is Lipschitz so NIP holds at r = 0; phi ~ 1/(2 dist) at gap edges; {q' = 0} = F has positive measure"});
    v.push_back({"sticky_skew",
                 "sticky-skew Brownian motion on R: s(x) = (x - xi) v(x), m(dx) = dx / v(x) + c delta_xi, "
                 "v = kappa left of xi and 1 - kappa right of xi",
                 {{"kappa", "skewness", 0.0, 1.0, true, true, false, "3/4"},
                  {"c", "stickiness at xi", 0.0, kInfinity, false, false, false, "1"},
                  {"xi", "sticky-skew point", -kInfinity, kInfinity, false, false, false, "4/3"},
                  {"r", "interest rate", -kInfinity, kInfinity, false, false, false, "1"},
                  {"x0", "starting value (defaults to xi)", -kInfinity, kInfinity, false, false, false, "xi"},
                  T},
                 "all hold iff r xi c = (2 kappa - 1) / (2 kappa (1 - kappa)), otherwise all fail; RP holds",
                 "the atom of q''/2 at the sticky point must equal r q m^U there; phi is locally bounded"});
    v.push_back({"gen_squared_bessel",
                 "squared Bessel diffusion with index nu in (-1,0) and arbitrary boundary atom at 0: s(x) = x^(-nu), "
                 "m(dx) = x^nu dx / (4|nu|) + m0 delta_0",
                 {{"nu", "index", -1.0, 0.0, true, true, false, "-1/2"},
                  {"m0", "speed atom at 0 (inf means absorbing)", 0.0, kInfinity, false, false, true, "inf"},
                  {"r", "interest rate", -kInfinity, kInfinity, false, false, false, "0"},
                  {"x0", "starting value", 0.0, kInfinity, true, true, false, "1"},
                  T},
                 "m0 = inf: NIP holds, NSA holds, NUPBR fails; m0 finite: NIP holds, NSA fails, NUPBR fails; RP holds",
                 "phi ~ (1/|nu| - 1)/(2u) at 0: square integrable on no collar, weighted integral diverges; NSA holds "
                 "iff the origin is absorbing"});
    v.push_back({"brownian_motion", "Brownian motion on R: s(x) = x, m = Lebesgue",
                 {{"r", "interest rate", -kInfinity, kInfinity, false, false, false, "0"},
                  {"x0", "starting value", -kInfinity, kInfinity, false, false, false, "0"},
                  T},
                 "all hold; RP holds", "no boundaries, no singular parts and phi(x) = -r x is locally bounded"});
    return v;
}

double num(const Params& p, const std::string& k) { return param_to_double(p.at(k)); }

DiffusionSpec base_spec(const std::string& name, const Params& p) {
    DiffusionSpec s;
    s.model_id = name;
    s.T = num(p, "T");
    if (p.count("r")) s.r = num(p, "r");
    return s;
}

MeasureSpec lebesgue() {
    MeasureSpec m;
    m.ac = make_const(1.0);
    return m;
}

DiffusionSpec build_squared_bessel_like(const std::string& name, double nu, double m0, const Params& p) {
    DiffusionSpec s = base_spec(name, p);
    const double a = std::fabs(nu);
    s.J = {0.0, kInfinity, true, false};
    s.scale = make_power_signed(0.0, a);
    s.inverse_scale = make_power_signed(0.0, 1.0 / a);
    MeasureSpec m;
    m.ac = make_product({make_const(1.0 / (4.0 * a)), make_power_signed(0.0, nu)});
    if (m0 > 0.0) m.atoms.push_back({0.0, m0});
    s.speed = m;
    s.x0 = num(p, "x0");
    s.left_declared = std::isinf(m0) ? BoundaryKind::Absorbing : BoundaryKind::Reflecting;
    s.phi_behaviors.push_back({0.0, LocalBehavior::Side::Right, -1.0, 0.5 * (1.0 / a - 1.0)});
    s.impr_tag = "gamma = ((1/|nu| - 1)/2 - r q(u) / (4|nu|)) / (q'(u) u)";
    return s;
}

DiffusionSpec build_fat_cantor(const Params& p) {
    DiffusionSpec s = base_spec("fat_cantor", p);
    const double a = num(p, "a");
    const double eta = 1e-9;
    FatCantorGaps F = fat_cantor_gaps(a, 8);

    // Segments of q' = max(d_F, eta): slope type 0 = eta, +1 = (z - c), -1 = (d - z).
    struct Seg {
        double x;  // left end
        int type;
        double ref;
    };
    std::vector<Seg> segs;
    segs.push_back({-kInfinity, -1, F.f_lo});
    segs.push_back({F.f_lo - eta, 0, 0.0});
    for (const auto& g : F.gaps) {
        double h = 0.5 * (g.second - g.first);
        if (h > eta) {
            segs.push_back({g.first + eta, +1, g.first});
            segs.push_back({g.first + h, -1, g.second});
            segs.push_back({g.second - eta, 0, 0.0});
        }
    }
    segs.push_back({F.f_hi + eta, +1, F.f_hi});

    std::vector<double> bps;
    for (std::size_t j = 1; j < segs.size(); ++j) bps.push_back(segs[j].x);
    // Values at breakpoints, then shift so q(0) = 0.
    std::vector<double> qv(bps.size(), 0.0);
    auto coeffs = [&](const Seg& sg, double x) {
        if (sg.type == 0) return std::pair<double, double>{0.0, eta};
        if (sg.type > 0) return std::pair<double, double>{0.5, x - sg.ref};
        return std::pair<double, double>{-0.5, sg.ref - x};
    };
    for (std::size_t j = 1; j < bps.size(); ++j) {
        auto [ca, cb] = coeffs(segs[j], bps[j - 1]);
        double h = bps[j] - bps[j - 1];
        qv[j] = qv[j - 1] + ca * h * h + cb * h;
    }
    std::vector<Expr> pieces;
    for (std::size_t j = 0; j < segs.size(); ++j) {
        double x = j == 0 ? bps[0] : bps[j - 1];
        double v = j == 0 ? qv[0] : qv[j - 1];
        auto [ca, cb] = coeffs(segs[j], x);
        pieces.push_back(make_quadratic(ca, cb, x, v));
    }
    Expr q0 = make_piecewise(bps, pieces);
    double shift = -eval(q0, 0.0);
    for (auto& e : pieces) e = make_sum({e, make_const(shift)});
    Expr q = make_piecewise(bps, pieces);

    s.J = {-kInfinity, kInfinity, false, false};
    s.inverse_scale = q;
    s.speed_natural = lebesgue();
    const double w0 = num(p, "w0");
    s.x0 = eval(q, w0);

    ZeroSetEntry z;
    z.a = F.f_lo;
    z.b = F.f_hi;
    z.exclude = F.gaps;
    z.measure = 1.0 - a / 2.0;
    s.qprime_zero_set.push_back(z);
    using Side = LocalBehavior::Side;
    s.phi_behaviors.push_back({F.f_lo, Side::Left, -1.0, -0.5});
    s.phi_behaviors.push_back({F.f_hi, Side::Right, -1.0, 0.5});
    for (const auto& g : F.gaps) {
        s.phi_behaviors.push_back({g.first, Side::Right, -1.0, 0.5});
        s.phi_behaviors.push_back({g.second, Side::Left, -1.0, -0.5});
    }
    s.impr_tag = "gamma = q''(u) / (2 q'(u)^2) off F, 0 on F";
    return s;
}

}  // namespace

double param_to_double(const std::string& text) {
    if (is_inf_text(text)) return kInfinity;
    std::string t = trim(text);
    if (t == "-inf" || t == "-infinity") return -kInfinity;
    return static_cast<double>(parse_rational(t));
}

FatCantorGaps fat_cantor_gaps(double a, int generation) {
    std::vector<std::pair<int, int>> rats{{0, 1}, {1, 1}};
    for (int d = 2; d <= generation; ++d)
        for (int n = 1; n < d; ++n)
            if (std::gcd(n, d) == 1) rats.emplace_back(n, d);
    std::vector<std::pair<double, double>> iv;
    for (std::size_t i = 0; i < rats.size(); ++i) {
        double c = static_cast<double>(rats[i].first) / rats[i].second;
        double r = a * std::ldexp(1.0, -static_cast<int>(i + 1) - 2);
        iv.emplace_back(c - r, c + r);
    }
    std::sort(iv.begin(), iv.end());
    std::vector<std::pair<double, double>> merged;
    for (const auto& x : iv) {
        if (!merged.empty() && x.first < merged.back().second)
            merged.back().second = std::max(merged.back().second, x.second);
        else
            merged.push_back(x);
    }
    FatCantorGaps out;
    out.f_lo = 0.0;
    out.f_hi = 1.0;
    for (const auto& m : merged) {
        if (m.first < 0.0) {
            out.f_lo = std::max(out.f_lo, m.second);
        } else if (m.second > 1.0) {
            out.f_hi = std::min(out.f_hi, m.first);
        } else {
            out.gaps.push_back(m);
        }
    }
    return out;
}

const std::vector<CatalogEntry>& catalog_entries() {
    static const std::vector<CatalogEntry> entries = make_entries();
    return entries;
}

const CatalogEntry& catalog_entry(const std::string& name) {
    for (const auto& e : catalog_entries())
        if (e.name == name) return e;
    fail(ErrorKind::UnknownModel, "unknown catalog model '" + name + "'");
}

Params resolve_params(const std::string& name, const Params& given) {
    const CatalogEntry& e = catalog_entry(name);
    for (const auto& [k, v] : given) {
        (void)v;
        bool known = std::any_of(e.params.begin(), e.params.end(), [&](const ParamSpec& p) { return p.name == k; });
        if (!known) fail(ErrorKind::Validation, "params." + k + ": unknown parameter for " + name);
    }
    Params out;
    for (const auto& ps : e.params) {
        auto it = given.find(ps.name);
        out[ps.name] = it != given.end() ? it->second : ps.default_value;
    }
    for (const auto& ps : e.params) {
        std::string& t = out[ps.name];
        if (t == "xi") t = out.at("xi");
        double v;
        try {
            v = param_to_double(t);
        } catch (const Error& err) {
            fail(ErrorKind::Validation, "params." + ps.name + ": " + err.what());
        }
        bool ok = !std::isnan(v);
        if (std::isinf(v)) {
            ok = ok && ps.allow_inf && v > 0;
        } else {
            ok = ok && (ps.lo_open ? v > ps.lo : v >= ps.lo) && (ps.hi_open ? v < ps.hi : v <= ps.hi);
        }
        if (!ok) {
            std::string range = std::string(ps.lo_open ? "(" : "[") + (std::isinf(ps.lo) ? "-inf" : std::to_string(ps.lo)) +
                                ", " + (std::isinf(ps.hi) ? "inf" : std::to_string(ps.hi)) + (ps.hi_open ? ")" : "]");
            fail(ErrorKind::Validation, "params." + ps.name + ": value " + t + " outside " + range +
                                            (ps.allow_inf ? " or inf" : ""));
        }
    }
    return out;
}

DiffusionSpec build_model(const std::string& name, const Params& given) {
    Params p = resolve_params(name, given);
    if (name == "squared_bessel") {
        double delta = num(p, "delta");
        return build_squared_bessel_like(name, delta / 2.0 - 1.0, 0.0, p);
    }
    if (name == "gen_squared_bessel") return build_squared_bessel_like(name, num(p, "nu"), num(p, "m0"), p);
    if (name == "sticky_reflected_bm") {
        DiffusionSpec s = base_spec(name, p);
        s.J = {1.0, kInfinity, true, false};
        s.scale = make_affine(1.0, 0.0);
        MeasureSpec m = lebesgue();
        double rho = num(p, "rho");
        if (rho > 0) m.atoms.push_back({1.0, rho});
        s.speed = m;
        s.x0 = num(p, "x0");
        s.left_declared = BoundaryKind::Reflecting;
        s.impr_tag = "gamma(u) = -r u";
        return s;
    }
    if (name == "cubed_bm") {
        DiffusionSpec s = base_spec(name, p);
        s.inverse_scale = make_power_signed(0.0, 3.0);
        s.speed_natural = lebesgue();
        double w0 = num(p, "w0");
        s.x0 = w0 * w0 * w0;
        ZeroSetEntry z;
        s.qprime_zero_set.push_back(z);
        s.phi_behaviors.push_back({0.0, LocalBehavior::Side::Both, -1.0, 1.0});
        s.impr_tag = "gamma(u) = 1 / (3 u^3)";
        return s;
    }
    if (name == "fat_cantor") return build_fat_cantor(p);
    if (name == "sticky_skew") {
        DiffusionSpec s = base_spec(name, p);
        double kappa = num(p, "kappa"), c = num(p, "c"), xi = num(p, "xi");
        s.scale = make_piecewise({xi}, {make_affine(kappa, -kappa * xi), make_affine(1.0 - kappa, -(1.0 - kappa) * xi)});
        MeasureSpec m;
        m.ac = make_piecewise({xi}, {make_const(1.0 / kappa), make_const(1.0 / (1.0 - kappa))});
        if (c > 0) m.atoms.push_back({xi, c});
        s.speed = m;
        s.x0 = num(p, "x0");
        s.kinks.push_back({0.0, 1.0 / (1.0 - kappa) - 1.0 / kappa});
        s.impr_tag = "gamma(u) = -r q(u) / (a(u) q'(u)^2), a = kappa^2 left of 0, (1-kappa)^2 right";
        return s;
    }
    if (name == "brownian_motion") {
        DiffusionSpec s = base_spec(name, p);
        s.scale = make_affine(1.0, 0.0);
        s.speed = lebesgue();
        s.x0 = num(p, "x0");
        s.impr_tag = "gamma(u) = -r u";
        return s;
    }
    fail(ErrorKind::UnknownModel, "unknown catalog model '" + name + "'");
}

ExpectedVerdict expected_verdict(const std::string& name, const Params& given) {
    Params p = resolve_params(name, given);
    const CatalogEntry& e = catalog_entry(name);
    ExpectedVerdict v;
    v.citation = e.citation;
    auto all = [&v](Tri t) { v.nip = v.nsa = v.nupbr = t; };
    if (name == "squared_bessel" || name == "cubed_bm") {
        v.nsa = v.nupbr = Tri::Fails;
    } else if (name == "fat_cantor") {
        v.nsa = v.nupbr = Tri::Fails;
        v.rp = Tri::Fails;
    } else if (name == "sticky_reflected_bm") {
        bool eq = 2 * parse_rational(p.at("r")) * parse_rational(p.at("rho")) == 1;
        all(eq ? Tri::Holds : Tri::Fails);
    } else if (name == "sticky_skew") {
        Rational k = parse_rational(p.at("kappa"));
        Rational lhs = parse_rational(p.at("r")) * parse_rational(p.at("xi")) * parse_rational(p.at("c")) * 2 * k * (1 - k);
        all(lhs == 2 * k - 1 ? Tri::Holds : Tri::Fails);
    } else if (name == "gen_squared_bessel") {
        bool absorbing = is_inf_text(p.at("m0"));
        v.nupbr = Tri::Fails;
        v.nsa = absorbing ? Tri::Holds : Tri::Fails;
    }
    return v;
}

}  // namespace gdarb
