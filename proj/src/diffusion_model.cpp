#include "gdarb/diffusion_model.hpp"

#include "gdarb/errors.hpp"
#include "quad.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

namespace gdarb {

namespace {

std::string num(double x) {
    std::ostringstream os;
    os.precision(12);
    os << x;
    return os.str();
}

const char* side_name(Endpoint e) { return e == Endpoint::Left ? "left" : "right"; }

void sort_unique(std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

// Finite window of J used to sample the scale function.
Interval sampling_window(const StateInterval& J, double x0) {
    double R = 8.0 * std::max(1.0, std::fabs(x0));
    double lo = std::isfinite(J.alpha) ? J.alpha : std::min(x0, std::isfinite(J.beta) ? J.beta : x0) - R;
    double hi = std::isfinite(J.beta) ? J.beta : std::max(x0, std::isfinite(J.alpha) ? J.alpha : x0) + R;
    return Interval{lo, hi, true, true};
}

Fn expr_fn(const Expr& e) {
    return [e](double x) { return gdarb::eval(e, x); };
}

}  // namespace

bool ZeroSetEntry::contains(double u) const {
    if (is_point()) return u == a;
    if (u < a || u > b) return false;
    for (const auto& ex : exclude)
        if (u > ex.first && u < ex.second) return false;
    return true;
}

DecomposedMeasure to_measure(const MeasureSpec& m, const Interval& support) {
    DecomposedMeasure out;
    out.support = support;
    if (m.ac) {
        out.ac = expr_fn(m.ac);
        m.ac->special_points(std::max(support.lo, -1e8), std::min(support.hi, 1e8), out.breaks);
        std::sort(out.breaks.begin(), out.breaks.end());
        out.breaks.erase(std::unique(out.breaks.begin(), out.breaks.end()), out.breaks.end());
    }
    out.atoms = m.atoms;
    std::sort(out.atoms.begin(), out.atoms.end(), [](const Atom& a, const Atom& b) { return a.x < b.x; });
    if (m.sc) {
        ScPart sc;
        sc.base_id = m.sc->base_id;
        sc.base_cdf = expr_fn(m.sc->base_cdf);
        sc.multiplier = expr_fn(m.sc->multiplier);
        sc.lo = m.sc->lo;
        sc.hi = m.sc->hi;
        out.sc = sc;
    }
    return out;
}

bool NaturalScaleView::in_zero_set(double u) const {
    for (const auto& z : zero_set)
        if (z.contains(u)) return true;
    return false;
}

Interval NaturalScaleView::collar(Endpoint e) const {
    double len = std::isfinite(sJ.length()) ? std::min(1.0, sJ.length() / 4.0) : 1.0;
    if (e == Endpoint::Left) return Interval{sJ.lo, sJ.lo + len, true, true};
    return Interval{sJ.hi - len, sJ.hi, true, true};
}

Interval NaturalScaleView::exhaustion_range() const {
    double R = 8.0 * std::max(1.0, std::fabs(u0));
    double lo = std::isfinite(sJ.lo) ? sJ.lo : std::min(u0, std::isfinite(sJ.hi) ? sJ.hi : u0) - R;
    double hi = std::isfinite(sJ.hi) ? sJ.hi : std::max(u0, std::isfinite(sJ.lo) ? sJ.lo : u0) + R;
    return Interval{lo, hi, true, true};
}

const char* to_string(BoundaryKind k) {
    switch (k) {
        case BoundaryKind::Absorbing: return "absorbing";
        case BoundaryKind::Reflecting: return "reflecting";
        default: return "inaccessible";
    }
}

namespace {

void validate_interval(const DiffusionSpec& spec) {
    const auto& J = spec.J;
    if (std::isnan(J.alpha) || std::isnan(J.beta) || !(J.alpha < J.beta))
        fail(ErrorKind::Validation, "state_interval: alpha must be < beta");
    if (J.alpha_closed && !std::isfinite(J.alpha))
        fail(ErrorKind::Validation, "state_interval: alpha_closed requires a finite alpha");
    if (J.beta_closed && !std::isfinite(J.beta))
        fail(ErrorKind::Validation, "state_interval: beta_closed requires a finite beta");
    Interval I{J.alpha, J.beta, J.alpha_closed, J.beta_closed};
    if (!std::isfinite(spec.x0) || !I.contains(spec.x0)) fail(ErrorKind::Validation, "x0: must lie in the state interval");
    if (!std::isfinite(spec.r)) fail(ErrorKind::Validation, "r: must be finite");
    if (!(spec.T > 0) || !std::isfinite(spec.T)) fail(ErrorKind::Validation, "T: must be positive");
    if (!spec.scale && !spec.inverse_scale) fail(ErrorKind::Validation, "scale: one of scale / inverse_scale is required");
    if (!spec.speed && !spec.speed_natural) fail(ErrorKind::Validation, "speed: one of speed / speed_natural is required");
    if (spec.speed && spec.speed_natural) fail(ErrorKind::Validation, "speed: give either speed or speed_natural, not both");
}

void check_increasing(const SmoothPiece1D& f, const Interval& w, const char* what) {
    const int n = 1024;
    double prev = f.value(w.lo);
    for (int i = 1; i <= n; ++i) {
        double x = w.lo + (w.hi - w.lo) * i / n;
        double v = f.value(x);
        if (!(v > prev)) fail(ErrorKind::Validation, std::string(what) + ": must be strictly increasing (fails near " + num(x) + ")");
        prev = v;
    }
}

}  // namespace

NaturalScaleView derive_natural_scale(const DiffusionSpec& spec) {
    validate_interval(spec);
    const auto& J = spec.J;
    Interval Jint{J.alpha, J.beta, J.alpha_closed, J.beta_closed};
    Interval win = sampling_window(J, spec.x0);
    NaturalScaleView v;
    v.r = spec.r;

    if (spec.scale) {
        if (!is_continuous(*spec.scale)) fail(ErrorKind::Validation, "scale: must be continuous");
        v.s = piece_from_expr(*spec.scale, Jint);
        check_increasing(v.s, win, "scale");
        if (spec.inverse_scale) {
            double lo = std::isfinite(J.alpha) ? v.s.value(J.alpha) : limit_at_infinity(v.s.value, -1);
            double hi = std::isfinite(J.beta) ? v.s.value(J.beta) : limit_at_infinity(v.s.value, 1);
            v.q = piece_from_expr(*spec.inverse_scale, Interval{lo, hi, J.alpha_closed, J.beta_closed});
            for (int i = 0; i <= 64; ++i) {
                double x = win.lo + (win.hi - win.lo) * i / 64.0;
                double back = v.q.value(v.s.value(x));
                if (std::fabs(back - x) > 1e-8 * std::max(1.0, std::fabs(x)))
                    fail(ErrorKind::Validation, "inverse_scale: is not the inverse of scale near x=" + num(x));
            }
        } else {
            v.q = invert_piece(v.s);
        }
    } else {
        if (!is_continuous(*spec.inverse_scale)) fail(ErrorKind::Validation, "inverse_scale: must be continuous");
        SmoothPiece1D qfull = piece_from_expr(*spec.inverse_scale, Interval{});
        auto image_of = [&](double b, int dir) {
            if (std::isfinite(b)) return invert_monotone(qfull, b);
            if (std::isfinite(limit_at_infinity(qfull.value, dir)))
                fail(ErrorKind::Validation, "inverse_scale: must map onto the state interval; give scale instead");
            return dir * kInfinity;
        };
        double lo = image_of(J.alpha, -1), hi = image_of(J.beta, 1);
        v.q = piece_from_expr(*spec.inverse_scale, Interval{lo, hi, J.alpha_closed, J.beta_closed});
        v.s = invert_piece(v.q);
        v.s.domain = Jint;
    }
    v.sJ = v.q.domain;
    v.u0 = v.s.value(spec.x0);
    {
        Interval uw = v.exhaustion_range();
        check_increasing(v.q, uw, "inverse scale");
    }

    if (spec.speed_natural) {
        v.mU = to_measure(*spec.speed_natural, v.sJ);
    } else {
        DecomposedMeasure m = to_measure(*spec.speed, Jint);
        validate_measure(m, false);
        v.mU = pushforward(m, v.s, v.q);
    }
    v.mU.support = v.sJ;
    validate_measure(v.mU, false);
    for (const auto& a : v.mU.atoms)
        if (!v.sJ.contains(a.x) && !(a.x == v.sJ.lo || a.x == v.sJ.hi))
            fail(ErrorKind::Validation, "speed: atom at " + num(a.x) + " lies outside the state interval");

    v.qpp = second_derivative_decomposition(v.q, spec.kinks);
    if (spec.qpp_sc) {
        ScPart sc;
        sc.base_id = spec.qpp_sc->base_id;
        sc.base_cdf = expr_fn(spec.qpp_sc->base_cdf);
        sc.multiplier = expr_fn(spec.qpp_sc->multiplier);
        sc.lo = spec.qpp_sc->lo;
        sc.hi = spec.qpp_sc->hi;
        v.qpp.sc = sc;
    }

    // Zero set of q': declared entries plus isolated critical special points.
    v.zero_set = spec.qprime_zero_set;
    for (double u : v.q.special) {
        if (!v.sJ.in_interior(u)) continue;
        if (v.q.d_plus(u) == 0.0 && v.q.d_minus(u) == 0.0 && !v.in_zero_set(u)) {
            ZeroSetEntry z;
            z.a = z.b = u;
            v.zero_set.push_back(z);
        }
    }
    {
        Interval uw = v.exhaustion_range();
        const int n = 2048;
        int run = 0;
        for (int i = 1; i < n; ++i) {
            double u = uw.lo + (uw.hi - uw.lo) * i / n;
            if (v.q.d_plus(u) == 0.0 && !v.in_zero_set(u)) {
                if (++run >= 2)
                    fail(ErrorKind::Validation, "qprime_zero_set: q' vanishes on an undeclared set near u=" + num(u));
            } else {
                run = 0;
            }
        }
    }

    // Positivity and local finiteness of the speed measure on the interior.
    {
        Interval uw = v.exhaustion_range();
        const int pieces = 16;
        for (int i = 0; i < pieces; ++i) {
            double a = uw.lo + (uw.hi - uw.lo) * i / pieces, b = uw.lo + (uw.hi - uw.lo) * (i + 1) / pieces;
            if (i == 0 && std::isfinite(v.sJ.lo)) a += 1e-9 * (b - a);
            if (i == pieces - 1 && std::isfinite(v.sJ.hi)) b -= 1e-9 * (b - a);
            double mass = v.mU.mass(a, b);
            bool boundary_inf = false;
            for (const auto& at : v.mU.atoms)
                if (std::isinf(at.mass) && at.x >= a && at.x <= b) boundary_inf = true;
            if (!boundary_inf && (!(mass > 0) || !std::isfinite(mass)))
                fail(ErrorKind::Validation, "speed: must be positive and finite on [" + num(a) + ", " + num(b) + "]");
        }
    }

    auto q = std::make_shared<SmoothPiece1D>(v.q);
    auto mU = std::make_shared<DecomposedMeasure>(v.mU);
    auto zs = std::make_shared<std::vector<ZeroSetEntry>>(v.zero_set);
    const double r = spec.r;
    auto numerator = [q, mU, r](double u) {
        double qpp = q->d2_ac(u);
        double m = mU->ac_density(u);
        double drift = 0.5 * qpp;
        if (r != 0.0 && m != 0.0) drift -= r * q->value(u) * m;
        return drift;
    };
    auto in_zs = [zs](double u) {
        for (const auto& z : *zs)
            if (z.contains(u)) return true;
        return false;
    };
    v.phi = [q, numerator, in_zs](double u) {
        double d = q->d_plus(u);
        if (d == 0.0 || !std::isfinite(d) || in_zs(u)) return 0.0;
        return numerator(u) / d;
    };
    const double blo = v.sJ.lo, bhi = v.sJ.hi;
    v.gamma = [q, numerator, in_zs, blo, bhi](double u) {
        if (u == blo || u == bhi) return 0.0;
        double d = q->d_plus(u);
        if (d == 0.0 || !std::isfinite(d) || in_zs(u)) return 0.0;
        return numerator(u) / (d * d);
    };

    for (double u : v.q.special) v.special.push_back(u);
    for (const auto& z : v.zero_set)
        if (z.is_point()) v.special.push_back(z.a);
    for (const auto& a : v.qpp.atoms) v.special.push_back(a.x);
    for (const auto& a : v.mU.atoms) v.special.push_back(a.x);
    for (const auto& b : spec.phi_behaviors) v.special.push_back(b.point);
    if (std::isfinite(v.sJ.lo)) v.special.push_back(v.sJ.lo);
    if (std::isfinite(v.sJ.hi)) v.special.push_back(v.sJ.hi);
    v.special.erase(std::remove_if(v.special.begin(), v.special.end(),
                                   [&](double u) { return !(u >= v.sJ.lo && u <= v.sJ.hi); }),
                    v.special.end());
    sort_unique(v.special);

    v.left = classify_boundary(spec, v, Endpoint::Left);
    v.right = classify_boundary(spec, v, Endpoint::Right);

    if (spec.x0 == J.alpha || spec.x0 == J.beta) {
        const auto& b = spec.x0 == J.alpha ? v.left : v.right;
        if (b.kind == BoundaryKind::Absorbing)
            fail(ErrorKind::Validation, "x0: starting value absorbing (the process would be constant)");
    }
    return v;
}

BoundaryBehavior classify_boundary(const DiffusionSpec& spec, const NaturalScaleView& view, Endpoint e) {
    const bool left = e == Endpoint::Left;
    const double b = left ? spec.J.alpha : spec.J.beta;
    const bool closed = left ? spec.J.alpha_closed : spec.J.beta_closed;
    const auto& declared = left ? spec.left_declared : spec.right_declared;
    BoundaryBehavior out;
    out.image = left ? view.sJ.lo : view.sJ.hi;

    enum class Test { Accessible, Inaccessible, Unknown } test;
    if (!std::isfinite(b) || !std::isfinite(out.image)) {
        test = Test::Inaccessible;
    } else {
        Interval c = view.collar(e);
        const double img = out.image;
        const DecomposedMeasure* mU = &view.mU;
        Fn g = [mU, img](double u) { return std::fabs(u - img) * mU->ac_density(u); };
        std::vector<double> sus{img};
        for (double u : view.special)
            if (u >= c.lo && u <= c.hi) sus.push_back(u);
        NumericOptions opt;
        opt.levels = 40;
        auto iv = decide_integral(g, c, sus, opt);
        test = iv.status == Integrability::Finite     ? Test::Accessible
               : iv.status == Integrability::Divergent ? Test::Inaccessible
                                                       : Test::Unknown;
    }

    const double atom = std::isfinite(out.image) ? view.mU.atom_mass(out.image) : 0.0;
    std::ostringstream note;
    if (test == Test::Unknown) {
        if (!declared)
            fail(ErrorKind::Validation, std::string("boundaries.") + side_name(e) +
                                            ": accessibility test inconclusive; declare the boundary behavior");
        note << "accessibility test inconclusive; declared behavior used";
        test = *declared == BoundaryKind::Inaccessible ? Test::Inaccessible : Test::Accessible;
    }
    if (test == Test::Accessible) {
        if (!closed)
            fail(ErrorKind::Validation, std::string("state_interval: ") + side_name(e) +
                                            " endpoint is accessible and must belong to J (closed)");
        out.kind = std::isinf(atom) ? BoundaryKind::Absorbing : BoundaryKind::Reflecting;
        out.stickiness = std::isinf(atom) ? kInfinity : atom;
    } else {
        if (closed)
            fail(ErrorKind::Validation, std::string("state_interval: ") + side_name(e) +
                                            " endpoint is inaccessible and cannot belong to J");
        out.kind = BoundaryKind::Inaccessible;
    }
    if (declared && *declared != out.kind)
        fail(ErrorKind::Validation, std::string("boundaries.") + side_name(e) + ": declared " + to_string(*declared) +
                                        " conflicts with derived " + to_string(out.kind));
    out.note = note.str();
    return out;
}

namespace {

// Total variation of q'_+ on a grid with n cells plus the special points.
double sampled_tv(const SmoothPiece1D& q, double a, double b, int n, const std::vector<double>& special,
                  double* bad_at) {
    std::vector<double> xs;
    xs.reserve(n + 1 + special.size());
    for (int i = 0; i <= n; ++i) xs.push_back(a + (b - a) * i / n);
    for (double s : special)
        if (s > a && s < b) xs.push_back(s);
    std::sort(xs.begin(), xs.end());
    double tv = 0.0;
    double prev = q.d_plus(xs[0]);
    if (!std::isfinite(prev)) {
        *bad_at = xs[0];
        return kInfinity;
    }
    for (std::size_t i = 1; i < xs.size(); ++i) {
        double d = q.d_plus(xs[i]);
        if (!std::isfinite(d)) {
            *bad_at = xs[i];
            return kInfinity;
        }
        tv += std::fabs(d - prev);
        prev = d;
    }
    return tv;
}

}  // namespace

AssumptionReport check_semimartingale_assumption(const NaturalScaleView& view, const DiffusionSpec&) {
    AssumptionReport rep;
    Interval range = view.exhaustion_range();
    std::vector<std::pair<double, double>> windows;
    const int nw = 32;
    double lo = range.lo, hi = range.hi;
    for (int i = 0; i < nw; ++i) {
        double a = lo + (hi - lo) * i / nw, b = lo + (hi - lo) * (i + 1) / nw;
        windows.emplace_back(a, b);
    }
    auto adjust = [&](Endpoint e) {
        const auto& bb = view.boundary(e);
        if (!std::isfinite(bb.image)) return;
        double eps = 1e-9 * std::max(1.0, view.collar(e).length());
        for (auto& w : windows) {
            if (e == Endpoint::Left && w.first == bb.image && bb.kind != BoundaryKind::Reflecting) w.first += eps;
            if (e == Endpoint::Right && w.second == bb.image && bb.kind != BoundaryKind::Reflecting) w.second -= eps;
        }
    };
    adjust(Endpoint::Left);
    adjust(Endpoint::Right);

    for (const auto& w : windows) {
        double prev_tv = -1.0;
        for (int n : {64, 256, 1024, 4096}) {
            double bad = 0.0;
            double tv = sampled_tv(view.q, w.first, w.second, n, view.special, &bad);
            if (!std::isfinite(tv)) {
                rep.pass = false;
                rep.notes.push_back("q'_+ is not finite at u=" + num(bad) + " (q is not a difference of convex functions)");
                return rep;
            }
            if (prev_tv >= 0 && n == 4096 && tv > 1.05 * prev_tv + 1e-9 * (1.0 + prev_tv)) {
                rep.pass = false;
                rep.notes.push_back("sampled total variation of q'_+ on [" + num(w.first) + ", " + num(w.second) +
                                    "] grows under refinement");
                return rep;
            }
            prev_tv = tv;
        }
    }

    for (Endpoint e : {Endpoint::Left, Endpoint::Right}) {
        const auto& bb = view.boundary(e);
        if (bb.kind == BoundaryKind::Absorbing) {
            Interval c = view.collar(e);
            const double img = bb.image;
            const SmoothPiece1D* q = &view.q;
            Fn g = [q, img](double u) { return std::fabs(u - img) * std::fabs(q->d2_ac(u)); };
            std::vector<double> sus{img};
            NumericOptions opt;
            opt.levels = 40;
            auto iv = decide_integral(g, c, sus, opt);
            if (iv.status == Integrability::Divergent) {
                rep.pass = false;
                rep.notes.push_back(std::string("weighted |q''| integral diverges at the absorbing ") + side_name(e) +
                                    " boundary");
                return rep;
            }
            if (iv.status == Integrability::Inconclusive)
                rep.notes.push_back(std::string("weighted |q''| integral at the ") + side_name(e) +
                                    " boundary is inconclusive");
        } else if (bb.kind == BoundaryKind::Reflecting) {
            double qd = e == Endpoint::Left ? view.q.d_plus(bb.image) : view.q.d_minus(bb.image);
            if (!std::isfinite(qd)) {
                rep.pass = false;
                rep.notes.push_back(std::string("q' is infinite at the reflecting ") + side_name(e) + " boundary");
                return rep;
            }
        }
    }
    return rep;
}

DecompositionFields semimartingale_decomposition_fields(const NaturalScaleView& view, const DiffusionSpec& spec) {
    DecompositionFields out;
    auto q = std::make_shared<SmoothPiece1D>(view.q);
    out.qv_factor = [q](double u) {
        double d = q->d_plus(u);
        return d * d;
    };
    auto mU = std::make_shared<DecomposedMeasure>(view.mU);
    const double r = spec.r;
    out.drift_measure.support = view.sJ;
    out.drift_measure.ac = [q, mU, r](double u) {
        double v = 0.5 * q->d2_ac(u);
        double m = mU->ac_density(u);
        if (r != 0.0 && m != 0.0) v -= r * q->value(u) * m;
        return v;
    };
    out.drift_measure.breaks = view.mU.breaks;
    out.drift_measure.breaks.insert(out.drift_measure.breaks.end(), view.q.special.begin(), view.q.special.end());
    std::sort(out.drift_measure.breaks.begin(), out.drift_measure.breaks.end());
    std::vector<Atom> atoms;
    for (const auto& a : view.qpp.atoms)
        if (view.sJ.in_interior(a.x)) atoms.push_back({a.x, 0.5 * a.mass});
    for (const auto& a : view.mU.atoms) {
        if (!view.sJ.in_interior(a.x) || r == 0.0) continue;
        double add = -r * view.q.value(a.x) * a.mass;
        auto it = std::find_if(atoms.begin(), atoms.end(), [&](const Atom& b) { return b.x == a.x; });
        if (it != atoms.end())
            it->mass += add;
        else
            atoms.push_back({a.x, add});
    }
    std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.x < b.x; });
    out.drift_measure.atoms = atoms;
    if (view.qpp.sc) {
        ScPart sc = *view.qpp.sc;
        auto mult = sc.multiplier;
        sc.multiplier = [mult](double u) { return 0.5 * mult(u); };
        out.drift_measure.sc = sc;
    }
    for (Endpoint e : {Endpoint::Left, Endpoint::Right}) {
        const auto& bb = view.boundary(e);
        if (bb.kind != BoundaryKind::Reflecting) continue;
        BoundaryTerm t;
        t.side = e;
        t.image = bb.image;
        t.local_time_coefficient = e == Endpoint::Left ? 0.5 * view.q.d_plus(bb.image) : -0.5 * view.q.d_minus(bb.image);
        double b = e == Endpoint::Left ? spec.J.alpha : spec.J.beta;
        t.time_coefficient = -r * b * bb.stickiness;
        out.boundary_terms.push_back(t);
    }
    return out;
}

}  // namespace gdarb
