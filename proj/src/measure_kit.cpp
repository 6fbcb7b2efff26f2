#include "gdarb/measure_kit.hpp"

#include "gdarb/errors.hpp"
#include "quad.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gdarb {

namespace {

std::string num(double x) {
    std::ostringstream os;
    os.precision(12);
    os << x;
    return os.str();
}

void sort_unique(std::vector<double>& v, double tol = 0.0) {
    std::sort(v.begin(), v.end());
    std::vector<double> out;
    for (double x : v)
        if (out.empty() || x - out.back() > tol * std::max(1.0, std::fabs(x))) out.push_back(x);
    v.swap(out);
}

}  // namespace

// Infinite when increments fail to decay geometrically.
double limit_at_infinity(const Fn& f, int dir) {
    double prev = f(dir * 1.0);
    double prev_inc = 0.0;
    for (int k = 1; k <= 200; ++k) {
        double x = dir * std::ldexp(1.0, k);
        double v = f(x);
        if (!std::isfinite(v)) return v;
        double inc = std::fabs(v - prev);
        if (k > 8 && prev_inc > 0 && inc < 0.75 * prev_inc && inc < 1e-13 * (1.0 + std::fabs(v))) return v;
        if (k > 8 && inc == 0.0) return v;
        prev = v;
        prev_inc = inc;
    }
    return dir * kInfinity;
}

SmoothPiece1D piece_from_expr(const Expr& f, const Interval& domain) {
    SmoothPiece1D p;
    p.domain = domain;
    p.value = [f](double x) { return gdarb::eval(f, x); };
    p.d_plus = [f](double x) { return f->d_plus(x); };
    p.d_minus = [f](double x) { return f->d_minus(x); };
    p.d2_ac = [f](double x) { return f->d2(x); };
    double lo = std::max(domain.lo, -1e8), hi = std::min(domain.hi, 1e8);
    f->special_points(lo, hi, p.special);
    sort_unique(p.special, 1e-14);
    return p;
}

double eval(const SmoothPiece1D& f, double x) {
    if (!f.domain.contains(x)) fail(ErrorKind::Domain, "x=" + num(x) + " outside domain");
    return f.value(x);
}

double invert_monotone(const SmoothPiece1D& f, double y) {
    const double tol = 1e-12 * (1.0 + std::fabs(y));
    double a = f.domain.lo, b = f.domain.hi;
    if (!std::isfinite(a) || !std::isfinite(b)) {
        double ca = std::isfinite(a) ? a : (std::isfinite(b) ? b - 1.0 : -1.0);
        double cb = std::isfinite(b) ? b : (std::isfinite(a) ? a + 1.0 : 1.0);
        if (!std::isfinite(a)) {
            double step = 1.0;
            a = ca;
            while (f.value(a) > y) {
                step *= 2.0;
                a = cb - step;
                if (step > 1e300) fail(ErrorKind::Range, "invert_monotone: y=" + num(y) + " below range");
            }
        }
        if (!std::isfinite(b)) {
            double step = 1.0;
            b = cb;
            while (f.value(b) < y) {
                step *= 2.0;
                b = a + step;
                if (step > 1e300) fail(ErrorKind::Range, "invert_monotone: y=" + num(y) + " above range");
            }
        }
    }
    double fa = f.value(a) - y, fb = f.value(b) - y;
    if (fa > tol || fb < -tol) fail(ErrorKind::Range, "invert_monotone: y=" + num(y) + " outside range");
    if (std::fabs(fa) <= 0.0) return a;
    if (std::fabs(fb) <= 0.0) return b;
    if (fa >= 0) return a;
    if (fb <= 0) return b;

    double x = 0.5 * (a + b);
    bool last_newton = false;
    double last_width = b - a;
    for (int it = 0; it < 400; ++it) {
        double fx = f.value(x) - y;
        if (fx == 0.0) return x;
        if (fx < 0)
            a = x;
        else
            b = x;
        double width = b - a;
        if (width <= 2.2e-16 * std::max(std::fabs(a), std::fabs(b)) || width < 1e-300) break;
        bool use_newton = !(last_newton && width > 0.5 * last_width);
        double next = 0.5 * (a + b);
        last_newton = false;
        if (use_newton) {
            double d = f.d_plus(x);
            if (std::isfinite(d) && std::fabs(d) >= 1e-6) {
                double xn = x - fx / d;
                if (xn > a && xn < b) {
                    next = xn;
                    last_newton = true;
                }
            }
        }
        last_width = width;
        x = next;
    }
    double fa2 = std::fabs(f.value(a) - y), fb2 = std::fabs(f.value(b) - y), fx2 = std::fabs(f.value(x) - y);
    if (fa2 < fx2 && fa2 <= fb2) return a;
    if (fb2 < fx2) return b;
    return x;
}

double DecomposedMeasure::atom_mass(double x, double loc_tol) const {
    for (const auto& a : atoms)
        if (std::fabs(a.x - x) <= loc_tol * std::max(1.0, std::fabs(x))) return a.mass;
    return 0.0;
}

double DecomposedMeasure::ac_integral(const Fn& w, double a, double b, double rel) const {
    if (!ac || !(b > a)) return 0.0;
    std::vector<double> pts{a};
    for (double x : breaks)
        if (x > a && x < b) pts.push_back(x);
    pts.push_back(b);
    Fn f = w ? Fn([&](double y) { return w(y) * ac(y); }) : ac;
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        auto r = detail::integrate(f, pts[i], pts[i + 1], rel, 1e-14);
        if (!r.ok || !std::isfinite(r.value))
            fail(ErrorKind::Quadrature, "measure quadrature failed on [" + num(pts[i]) + ", " + num(pts[i + 1]) + "]");
        total += r.value;
    }
    return total;
}

double DecomposedMeasure::mass(double a, double b, double rel) const {
    double total = ac_integral(Fn{}, a, b, rel);
    for (const auto& at : atoms)
        if (at.x >= a && at.x <= b) total += at.mass;
    if (sc) {
        double lo = std::max(a, sc->lo), hi = std::min(b, sc->hi);
        if (lo < hi) {
            const int n = 4096;
            double prev = sc->base_cdf(lo);
            for (int i = 1; i <= n; ++i) {
                double x1 = lo + (hi - lo) * i / n;
                double c1 = sc->base_cdf(x1);
                double mid = lo + (hi - lo) * (i - 0.5) / n;
                total += sc->multiplier(mid) * (c1 - prev);
                prev = c1;
            }
        }
    }
    return total;
}

void validate_measure(const DecomposedMeasure& m, bool signed_allowed) {
    for (std::size_t i = 0; i < m.atoms.size(); ++i) {
        const auto& a = m.atoms[i];
        if (!std::isfinite(a.x)) fail(ErrorKind::Validation, "atom location must be finite");
        if (i > 0 && !(a.x > m.atoms[i - 1].x))
            fail(ErrorKind::Validation, "atoms must be sorted and pairwise distinct");
        if (std::isnan(a.mass)) fail(ErrorKind::Validation, "atom mass is NaN");
        if (std::isinf(a.mass)) {
            if (signed_allowed || a.mass < 0) fail(ErrorKind::Validation, "infinite atom mass not allowed here");
            if (a.x != m.support.lo && a.x != m.support.hi)
                fail(ErrorKind::Validation, "infinite atom mass only allowed at a state-interval endpoint (x=" +
                                                num(a.x) + ")");
        } else if (!signed_allowed && !(a.mass > 0)) {
            fail(ErrorKind::Validation, "atom mass must be positive (x=" + num(a.x) + ")");
        }
    }
    if (m.sc) {
        double prev = m.sc->base_cdf(m.sc->lo);
        for (int i = 1; i <= 256; ++i) {
            double x = m.sc->lo + (m.sc->hi - m.sc->lo) * i / 256.0;
            double c = m.sc->base_cdf(x);
            if (c < prev - 1e-12) fail(ErrorKind::Validation, "sc base_cdf must be nondecreasing");
            prev = c;
        }
    }
}

SmoothPiece1D invert_piece(const SmoothPiece1D& s) {
    SmoothPiece1D q;
    double lo = std::isfinite(s.domain.lo) ? s.value(s.domain.lo) : limit_at_infinity(s.value, -1);
    double hi = std::isfinite(s.domain.hi) ? s.value(s.domain.hi) : limit_at_infinity(s.value, 1);
    q.domain = Interval{lo, hi, s.domain.lo_closed, s.domain.hi_closed};
    auto sp = std::make_shared<SmoothPiece1D>(s);
    q.value = [sp](double u) { return invert_monotone(*sp, u); };
    q.d_plus = [sp](double u) {
        double d = sp->d_plus(invert_monotone(*sp, u));
        if (std::isinf(d)) return 0.0;
        return d == 0.0 ? kInfinity : 1.0 / d;
    };
    q.d_minus = [sp](double u) {
        double d = sp->d_minus(invert_monotone(*sp, u));
        if (std::isinf(d)) return 0.0;
        return d == 0.0 ? kInfinity : 1.0 / d;
    };
    q.d2_ac = [sp](double u) {
        double x = invert_monotone(*sp, u);
        double d = sp->d_plus(x);
        if (std::isinf(d)) return 0.0;
        if (d == 0.0) return kInfinity;
        return -sp->d2_ac(x) / (d * d * d);
    };
    for (double x : s.special) q.special.push_back(s.value(x));
    sort_unique(q.special, 1e-14);
    return q;
}

DecomposedMeasure pushforward(const DecomposedMeasure& m, const SmoothPiece1D& s, const SmoothPiece1D& q) {
    DecomposedMeasure out;
    out.support = Interval{q.domain.lo, q.domain.hi, m.support.lo_closed, m.support.hi_closed};
    if (m.ac) {
        auto mac = m.ac;
        auto qv = q.value;
        auto qd = q.d_plus;
        out.ac = [mac, qv, qd](double u) {
            double d = qd(u);
            if (d == 0.0) return 0.0;
            return mac(qv(u)) * d;
        };
        out.breaks = q.special;
        for (double x : m.breaks)
            if (s.domain.contains(x)) out.breaks.push_back(s.value(x));
        sort_unique(out.breaks, 1e-14);
    }
    for (const auto& a : m.atoms) {
        double u;
        if (a.x == m.support.lo && !std::isfinite(s.domain.lo))
            u = q.domain.lo;
        else
            u = s.value(a.x);
        out.atoms.push_back({u, a.mass});
    }
    if (m.sc) {
        ScPart sc = *m.sc;
        auto cdf = m.sc->base_cdf;
        auto mult = m.sc->multiplier;
        auto qv = q.value;
        sc.base_cdf = [cdf, qv](double u) { return cdf(qv(u)); };
        sc.multiplier = [mult, qv](double u) { return mult(qv(u)); };
        sc.lo = s.value(m.sc->lo);
        sc.hi = s.value(m.sc->hi);
        out.sc = sc;
    }
    return out;
}

DecomposedMeasure pushforward(const DecomposedMeasure& m, const SmoothPiece1D& s) {
    return pushforward(m, s, invert_piece(s));
}

DecomposedMeasure second_derivative_decomposition(const SmoothPiece1D& q, const std::vector<Kink>& kinks,
                                                  double rel_tol) {
    DecomposedMeasure out;
    out.support = q.domain;
    out.ac = q.d2_ac;
    out.breaks = q.special;
    std::vector<Atom> atoms;
    for (const auto& k : kinks) {
        double actual = q.d_plus(k.x) - q.d_minus(k.x);
        if (!std::isfinite(actual) ||
            std::fabs(actual - k.jump) > rel_tol * std::max({1.0, std::fabs(actual), std::fabs(k.jump)}))
            fail(ErrorKind::Validation, "declared kink at " + num(k.x) + " with jump " + num(k.jump) +
                                            " does not match one-sided derivatives (jump " + num(actual) + ")");
        if (actual != 0.0) atoms.push_back({k.x, actual});
    }
    for (double x : q.special) {
        if (!q.domain.in_interior(x)) continue;
        bool declared = std::any_of(kinks.begin(), kinks.end(), [x](const Kink& k) { return k.x == x; });
        if (declared) continue;
        double dp = q.d_plus(x), dm = q.d_minus(x);
        double jump = dp - dm;
        if (!std::isfinite(jump)) continue;
        if (std::fabs(jump) > 1e-12 * std::max({1.0, std::fabs(dp), std::fabs(dm)})) atoms.push_back({x, jump});
    }
    std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.x < b.x; });
    for (const auto& a : atoms)
        if (out.atoms.empty() || out.atoms.back().x != a.x) out.atoms.push_back(a);
    return out;
}

// ---- integrability ----

namespace {

struct Annot {
    double x;
    LocalBehavior::Side side;
    double expo;  // exponent of the integrand near x
};

struct HalfResult {
    Integrability status;
    bool annotated;
    std::vector<double> diag;
};

bool side_matches(LocalBehavior::Side s, bool right_side) {
    return s == LocalBehavior::Side::Both || (right_side ? s == LocalBehavior::Side::Right : s == LocalBehavior::Side::Left);
}

// Integral of g over the half-interval between e and the far point m.
HalfResult decide_half(const Fn& g, double e, double m, const std::vector<Annot>& annots, const NumericOptions& opt) {
    const bool right_side = m > e;
    for (const auto& a : annots) {
        if (std::fabs(a.x - e) <= 1e-12 * std::max(1.0, std::fabs(e)) && side_matches(a.side, right_side))
            return {a.expo > -1.0 ? Integrability::Finite : Integrability::Divergent, true, {}};
    }
    const double w = std::fabs(m - e);
    const double dir = right_side ? 1.0 : -1.0;
    auto seg = [&](double a, double b) {
        double lo = std::min(a, b), hi = std::max(a, b);
        return detail::integrate(g, lo, hi, opt.rel_tol, opt.abs_tol);
    };

    // Bounded integrands near e are integrable on a bounded collar.
    double max_early = 0.0, max_late = 0.0;
    bool finite_samples = true;
    for (int k = 1; k <= 48; ++k) {
        double v = std::fabs(g(e + dir * w * std::ldexp(1.0, -k)));
        if (!std::isfinite(v)) {
            finite_samples = false;
            break;
        }
        (k <= 24 ? max_early : max_late) = std::max(k <= 24 ? max_early : max_late, v);
    }
    if (finite_samples && max_late <= 16.0 * max_early + 1e-300) {
        auto r = seg(e, m);
        if (r.ok && std::isfinite(r.value)) return {Integrability::Finite, false, {r.value}};
    }

    std::vector<double> inc, cum;
    double total = 0.0;
    for (int k = 1; k <= opt.levels; ++k) {
        double a = e + dir * w * std::ldexp(1.0, -k);
        double b = e + dir * w * std::ldexp(1.0, -k + 1);
        auto r = seg(a, b);
        if (!std::isfinite(r.value)) return {Integrability::Divergent, false, cum};
        if (!r.ok) return {Integrability::Inconclusive, false, cum};
        inc.push_back(r.value);
        total += r.value;
        cum.push_back(total);
    }
    std::vector<double> diag(cum.size() > 6 ? cum.end() - 6 : cum.begin(), cum.end());
    if (total == 0.0) return {Integrability::Finite, false, diag};
    const std::size_t n = inc.size();
    int tail_checks = std::min<int>(3, static_cast<int>(n) - 1);
    bool all_big = tail_checks > 0;
    double rho_max = 0.0;
    for (int j = 0; j < tail_checks; ++j) {
        double prev = inc[n - 2 - j], cur = inc[n - 1 - j];
        double rho = prev > 0 ? cur / prev : (cur > 0 ? kInfinity : 0.0);
        rho_max = std::max(rho_max, rho);
        if (rho < opt.divergence_ratio) all_big = false;
    }
    if (all_big) return {Integrability::Divergent, false, diag};
    if (rho_max < 1.0) {
        double tail = inc.back() * rho_max / (1.0 - rho_max);
        if (tail < opt.tail_rel * total) return {Integrability::Finite, false, diag};
    }
    return {Integrability::Inconclusive, false, diag};
}

IntegrabilityVerdict decide_core(const Fn& g, const Interval& window, const std::vector<Annot>& annots,
                                 const std::vector<double>& suspects, const NumericOptions& opt) {
    if (!std::isfinite(window.lo) || !std::isfinite(window.hi) || !(window.lo < window.hi))
        fail(ErrorKind::Domain, "integrability window must be a finite nonempty interval");
    std::vector<double> pts{window.lo, window.hi};
    for (const auto& a : annots)
        if (a.x >= window.lo && a.x <= window.hi) pts.push_back(a.x);
    for (double s : suspects)
        if (s >= window.lo && s <= window.hi) pts.push_back(s);
    sort_unique(pts, 1e-13);

    IntegrabilityVerdict v;
    // Annotated halves are free to decide; one divergence settles the window.
    for (std::size_t j = 0; j + 1 < pts.size(); ++j) {
        for (int side = 0; side < 2; ++side) {
            double e = side == 0 ? pts[j] : pts[j + 1];
            bool right_side = side == 0;
            for (const auto& an : annots) {
                if (std::fabs(an.x - e) <= 1e-12 * std::max(1.0, std::fabs(e)) && side_matches(an.side, right_side) &&
                    an.expo <= -1.0) {
                    v.status = Integrability::Divergent;
                    v.method = IntegrabilityMethod::ExponentRule;
                    return v;
                }
            }
        }
    }
    bool any_div = false, any_inc = false, any_annot = false, div_annot = false;
    for (std::size_t j = 0; j + 1 < pts.size() && !any_div; ++j) {
        double a = pts[j], b = pts[j + 1], mid = 0.5 * (a + b);
        for (int side = 0; side < 2; ++side) {
            HalfResult h = side == 0 ? decide_half(g, a, mid, annots, opt) : decide_half(g, b, mid, annots, opt);
            any_annot = any_annot || h.annotated;
            if (h.status == Integrability::Divergent) {
                any_div = true;
                div_annot = div_annot || h.annotated;
            }
            if (h.status == Integrability::Inconclusive) any_inc = true;
            if (!h.diag.empty() && (h.status != Integrability::Finite || v.diagnostics.empty())) v.diagnostics = h.diag;
        }
    }
    v.status = any_div ? Integrability::Divergent : (any_inc ? Integrability::Inconclusive : Integrability::Finite);
    bool exponent = any_div ? div_annot : (any_inc ? false : any_annot);
    v.method = exponent ? IntegrabilityMethod::ExponentRule : IntegrabilityMethod::NumericRefinement;
    return v;
}

}  // namespace

IntegrabilityVerdict decide_L2_local(const Fn& f, const Interval& window, const std::vector<LocalBehavior>& behaviors,
                                     const std::vector<double>& suspects, const NumericOptions& opt) {
    std::vector<Annot> annots;
    for (const auto& b : behaviors) annots.push_back({b.point, b.side, b.C == 0.0 ? 0.0 : 2.0 * b.p});
    Fn g = [f](double x) {
        double v = f(x);
        return v * v;
    };
    return decide_core(g, window, annots, suspects, opt);
}

IntegrabilityVerdict decide_weighted_L2_boundary(const Fn& f, double b_image, const Interval& window,
                                                 const std::vector<LocalBehavior>& behaviors,
                                                 const std::vector<double>& suspects, const NumericOptions& opt) {
    if (b_image != window.lo && b_image != window.hi)
        fail(ErrorKind::Domain, "weighted boundary window must be adjacent to the boundary image");
    std::vector<Annot> annots;
    for (const auto& b : behaviors) {
        bool at_b = std::fabs(b.point - b_image) <= 1e-12 * std::max(1.0, std::fabs(b_image));
        annots.push_back({b.point, b.side, b.C == 0.0 ? 0.0 : 2.0 * b.p + (at_b ? 1.0 : 0.0)});
    }
    Fn g = [f, b_image](double x) {
        double v = f(x);
        double w = std::fabs(x - b_image);
        return w == 0.0 ? 0.0 : w * v * v;
    };
    return decide_core(g, window, annots, suspects, opt);
}

IntegrabilityVerdict decide_integral(const Fn& g, const Interval& window, const std::vector<double>& suspects,
                                     const NumericOptions& opt) {
    return decide_core(g, window, {}, suspects, opt);
}

const char* to_string(Integrability s) {
    switch (s) {
        case Integrability::Finite: return "finite";
        case Integrability::Divergent: return "divergent";
        default: return "inconclusive";
    }
}

}  // namespace gdarb
