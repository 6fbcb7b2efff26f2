#include "gdarb/arb_classifier.hpp"

#include "gdarb/errors.hpp"

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

const char* side_name(Endpoint e) { return e == Endpoint::Left ? "left" : "right"; }

Tri from_integrability(Integrability s) {
    switch (s) {
        case Integrability::Finite: return Tri::Holds;
        case Integrability::Divergent: return Tri::Fails;
        default: return Tri::Inconclusive;
    }
}

Tri combine(const std::vector<ConditionReport>& reps) {
    Tri t = Tri::Holds;
    for (const auto& r : reps) t = tri_and(t, r.status);
    return t;
}

bool close_rel(double a, double b, double rel) {
    double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
    return std::fabs(a - b) <= rel * scale;
}

double boundary_value(const DiffusionSpec& spec, Endpoint e) { return e == Endpoint::Left ? spec.J.alpha : spec.J.beta; }

// Interior atoms of a measure, restricted to the open natural-scale interval.
std::vector<Atom> interior_atoms(const DecomposedMeasure& m, const Interval& sJ) {
    std::vector<Atom> out;
    for (const auto& a : m.atoms)
        if (sJ.in_interior(a.x)) out.push_back(a);
    return out;
}

bool sampled_zero(const Fn& f, double lo, double hi, int n, double tol, double* worst) {
    double w = 0.0;
    for (int i = 0; i < n; ++i) {
        double u = lo + (hi - lo) * (i + 0.5) / n;
        w = std::max(w, std::fabs(f(u)));
    }
    *worst = w;
    return w <= tol;
}

// Behaviors whose point lies strictly inside the window, or at an endpoint
// with the side facing into it.
std::vector<LocalBehavior> behaviors_in(const std::vector<LocalBehavior>& all, const Interval& w) {
    std::vector<LocalBehavior> out;
    for (const auto& b : all)
        if (b.point >= w.lo && b.point <= w.hi) out.push_back(b);
    return out;
}

std::vector<double> specials_in(const NaturalScaleView& view, const Interval& w) {
    std::vector<double> out;
    for (double u : view.special)
        if (u >= w.lo && u <= w.hi) out.push_back(u);
    return out;
}

std::vector<ConditionReport> nip_reports(const NaturalScaleView& view, const DiffusionSpec& spec, const Tolerances& tol) {
    std::vector<ConditionReport> reps;
    const double r = spec.r;

    // (i) accessible boundaries.
    bool any_abs = false, any_refl = false;
    for (Endpoint e : {Endpoint::Left, Endpoint::Right}) {
        const auto& bb = view.boundary(e);
        const double b = boundary_value(spec, e);
        if (bb.kind == BoundaryKind::Absorbing) {
            any_abs = true;
            ConditionReport c{"NIP.i.a", Tri::Holds, r * b, ""};
            bool ok = std::fabs(r * b) <= tol.equality_rel;
            c.status = ok ? Tri::Holds : Tri::Fails;
            c.note = std::string(side_name(e)) + " boundary " + num(b) + " is absorbing; need r = 0 or b = 0";
            reps.push_back(c);
        } else if (bb.kind == BoundaryKind::Reflecting) {
            any_refl = true;
            double lt = e == Endpoint::Left ? 0.5 * view.q.d_plus(bb.image) : -0.5 * view.q.d_minus(bb.image);
            double tc = -r * b * bb.stickiness;
            ConditionReport c{"NIP.i.b", Tri::Holds, lt + tc, ""};
            double scale = std::max({1.0, std::fabs(lt), std::fabs(tc)});
            bool ok = std::isfinite(lt + tc) && std::fabs(lt + tc) <= tol.equality_rel * scale;
            c.status = ok ? Tri::Holds : Tri::Fails;
            c.note = std::string(side_name(e)) + " boundary " + num(b) + " is reflecting: r*b*m({s(b)}) = " +
                     num(-tc) + ", local-time coefficient " + num(lt);
            reps.push_back(c);
        }
    }
    if (!any_abs) reps.push_back({"NIP.i.a", Tri::Holds, std::nullopt, "no absorbing boundary"});
    if (!any_refl) reps.push_back({"NIP.i.b", Tri::Holds, std::nullopt, "no reflecting boundary"});

    // (ii) singular parts: 1/2 q''_si = r q m^U_si.
    {
        ConditionReport c{"NIP.ii", Tri::Holds, std::nullopt, ""};
        auto qa = interior_atoms(view.qpp, view.sJ);
        auto ma = interior_atoms(view.mU, view.sJ);
        std::vector<double> locs;
        for (const auto& a : qa) locs.push_back(a.x);
        for (const auto& a : ma) locs.push_back(a.x);
        std::sort(locs.begin(), locs.end());
        std::vector<double> uniq;
        for (double x : locs)
            if (uniq.empty() || std::fabs(x - uniq.back()) > tol.location * std::max(1.0, std::fabs(x))) uniq.push_back(x);
        double worst = 0.0;
        std::string worst_note;
        for (double x : uniq) {
            double lhs = 0.5 * view.qpp.atom_mass(x, tol.location);
            double m = view.mU.atom_mass(x, tol.location);
            double rhs = m == 0.0 ? 0.0 : r * view.q.value(x) * m;
            double res = lhs - rhs;
            c.residual = c.residual ? (std::fabs(res) > std::fabs(*c.residual) ? res : *c.residual) : res;
            if (!close_rel(lhs, rhs, tol.equality_rel)) {
                c.status = Tri::Fails;
                if (std::fabs(res) >= worst) {
                    worst = std::fabs(res);
                    worst_note = "atom at u=" + num(x) + ": q''/2 mass " + num(lhs) + " vs r q m^U mass " + num(rhs);
                }
            }
        }
        // singular-continuous parts
        const auto& qsc = view.qpp.sc;
        const auto& msc = view.mU.sc;
        std::optional<ScPart> msc_eff;
        if (msc && r != 0.0) msc_eff = msc;
        std::string sc_note;
        if (qsc && msc_eff) {
            if (qsc->base_id != msc_eff->base_id) {
                if (c.status != Tri::Fails) c.status = Tri::Inconclusive;
                sc_note = "singular-continuous parts use different bases (" + qsc->base_id + ", " + msc_eff->base_id +
                          "); cannot compare";
            } else {
                const ScPart& a = *qsc;
                const ScPart& b = *msc_eff;
                const SmoothPiece1D* q = &view.q;
                Fn diff = [&a, &b, q, r](double u) {
                    double l = 0.5 * a.multiplier(u);
                    double rr = r * q->value(u) * b.multiplier(u);
                    return (l - rr) / std::max({1.0, std::fabs(l), std::fabs(rr)});
                };
                double w = 0.0;
                if (!sampled_zero(diff, std::max(a.lo, b.lo), std::min(a.hi, b.hi), tol.sc_samples, tol.equality_rel, &w)) {
                    c.status = Tri::Fails;
                    sc_note = "singular-continuous densities differ (relative " + num(w) + ")";
                } else {
                    sc_note = "singular-continuous parts agree on " + std::to_string(tol.sc_samples) + " samples";
                }
            }
        } else if (qsc || msc_eff) {
            const ScPart& p = qsc ? *qsc : *msc_eff;
            const SmoothPiece1D* q = &view.q;
            bool is_q = qsc.has_value();
            Fn dens = [&p, q, r, is_q](double u) { return is_q ? 0.5 * p.multiplier(u) : r * q->value(u) * p.multiplier(u); };
            double w = 0.0;
            if (!sampled_zero(dens, p.lo, p.hi, tol.sc_samples, tol.equality_rel, &w)) {
                c.status = Tri::Fails;
                sc_note = std::string("unmatched singular-continuous part in ") + (is_q ? "q''" : "r q m^U");
            }
        }
        if (!worst_note.empty()) c.note = worst_note;
        if (!sc_note.empty()) c.note += (c.note.empty() ? "" : "; ") + sc_note;
        if (c.note.empty()) c.note = uniq.empty() && !qsc && !msc_eff ? "no singular parts" : "singular parts match";
        reps.push_back(c);
    }

    // (iii) on the zero set of q'.
    {
        ConditionReport c{"NIP.iii", Tri::Holds, std::nullopt, ""};
        int checked = 0;
        for (const auto& z : view.zero_set) {
            if (z.is_point() || z.measure <= 0.0) continue;
            std::vector<std::pair<double, double>> keep;
            double cur = z.a;
            auto ex = z.exclude;
            std::sort(ex.begin(), ex.end());
            for (const auto& e : ex) {
                if (e.first > cur) keep.emplace_back(cur, std::min(e.first, z.b));
                cur = std::max(cur, e.second);
                if (cur >= z.b) break;
            }
            if (cur < z.b) keep.emplace_back(cur, z.b);
            double total = 0.0;
            for (const auto& k : keep) total += k.second - k.first;
            if (!(total > 0)) continue;
            const int n = tol.zero_set_samples;
            std::size_t j = 0;
            double base = 0.0;
            for (int i = 0; i < n; ++i) {
                double t = total * (i + 0.5) / n;
                while (j + 1 < keep.size() && t > base + (keep[j].second - keep[j].first)) {
                    base += keep[j].second - keep[j].first;
                    ++j;
                }
                double u = keep[j].first + (t - base);
                if (!view.sJ.in_interior(u)) continue;
                double lhs = 0.5 * view.q.d2_ac(u);
                double m = view.mU.ac_density(u);
                double rhs = m == 0.0 ? 0.0 : r * view.q.value(u) * m;
                ++checked;
                if (!c.residual || std::fabs(lhs - rhs) > std::fabs(*c.residual)) c.residual = lhs - rhs;
                if (!close_rel(lhs, rhs, tol.equality_rel)) {
                    c.status = Tri::Fails;
                    c.note = "q''/2 = " + num(lhs) + " but r q m^U = " + num(rhs) + " at u=" + num(u);
                    break;
                }
            }
            if (c.status == Tri::Fails) break;
        }
        if (c.note.empty())
            c.note = checked ? std::to_string(checked) + " zero-set samples agree" : "zero set of q' is Lebesgue-null";
        reps.push_back(c);
    }
    return reps;
}

Interval shrink_from_boundaries(const NaturalScaleView& view, Interval w) {
    if (std::isfinite(view.sJ.lo) && w.lo <= view.sJ.lo) w.lo = view.sJ.lo + 1e-6 * view.collar(Endpoint::Left).length();
    if (std::isfinite(view.sJ.hi) && w.hi >= view.sJ.hi) w.hi = view.sJ.hi - 1e-6 * view.collar(Endpoint::Right).length();
    return w;
}

std::vector<ConditionReport> nsa_reports(const NaturalScaleView& view, const DiffusionSpec& spec, const Tolerances& tol) {
    std::vector<ConditionReport> reps;
    std::vector<LocalBehavior> interior;
    for (const auto& b : spec.phi_behaviors)
        if (view.sJ.in_interior(b.point)) interior.push_back(b);

    // (iv) local square integrability on a compact exhaustion of the interior.
    {
        ConditionReport c{"NSA.iv.loc", Tri::Holds, std::nullopt, ""};
        Interval range = view.exhaustion_range();
        const int n = std::max(1, tol.generic_windows);
        for (int i = 0; i < n && c.status != Tri::Fails; ++i) {
            Interval w{range.lo + (range.hi - range.lo) * i / n, range.lo + (range.hi - range.lo) * (i + 1) / n, true, true};
            w = shrink_from_boundaries(view, w);
            if (!(w.lo < w.hi)) continue;
            auto v = decide_L2_local(view.phi, w, behaviors_in(interior, w), specials_in(view, w), tol.numeric);
            Tri t = from_integrability(v.status);
            if (t != Tri::Holds) {
                c.status = tri_and(c.status, t);
                c.note = std::string("phi^2 integral ") + to_string(v.status) + " on [" + num(w.lo) + ", " + num(w.hi) + "]" +
                         (v.method == IntegrabilityMethod::ExponentRule ? " (exponent rule)" : " (numeric refinement)");
            }
        }
        // Points outside the sampled range that carry annotations.
        for (const auto& b : interior) {
            if (c.status == Tri::Fails) break;
            if (b.point >= range.lo && b.point <= range.hi) continue;
            double h = 0.5;
            Interval w = shrink_from_boundaries(view, Interval{b.point - h, b.point + h, true, true});
            auto v = decide_L2_local(view.phi, w, behaviors_in(interior, w), specials_in(view, w), tol.numeric);
            Tri t = from_integrability(v.status);
            if (t != Tri::Holds) {
                c.status = tri_and(c.status, t);
                c.note = std::string("phi^2 integral ") + to_string(v.status) + " near u=" + num(b.point);
            }
        }
        if (c.note.empty()) c.note = "phi is square integrable on every sampled compact window";
        reps.push_back(c);
    }

    // (iv) reflecting boundaries: square integrability up to the boundary.
    bool any = false;
    for (Endpoint e : {Endpoint::Left, Endpoint::Right}) {
        const auto& bb = view.boundary(e);
        if (bb.kind != BoundaryKind::Reflecting) continue;
        any = true;
        Interval w = view.collar(e);
        auto v = decide_L2_local(view.phi, w, behaviors_in(spec.phi_behaviors, w), specials_in(view, w), tol.numeric);
        ConditionReport c{"NSA.iv.refl", from_integrability(v.status), std::nullopt,
                          std::string("phi^2 on the ") + side_name(e) + " collar [" + num(w.lo) + ", " + num(w.hi) +
                              "] is " + to_string(v.status)};
        reps.push_back(c);
    }
    if (!any) reps.push_back({"NSA.iv.refl", Tri::Holds, std::nullopt, "no reflecting boundary"});
    return reps;
}

std::vector<ConditionReport> nupbr_reports(const NaturalScaleView& view, const DiffusionSpec& spec, const Tolerances& tol) {
    std::vector<ConditionReport> reps;
    bool any = false;
    for (Endpoint e : {Endpoint::Left, Endpoint::Right}) {
        const auto& bb = view.boundary(e);
        if (bb.kind != BoundaryKind::Absorbing) continue;
        any = true;
        Interval w = view.collar(e);
        auto v = decide_weighted_L2_boundary(view.phi, bb.image, w, behaviors_in(spec.phi_behaviors, w),
                                             specials_in(view, w), tol.numeric);
        reps.push_back({"NUPBR.v", from_integrability(v.status), std::nullopt,
                        std::string("|u - s(b)| phi^2 on the ") + side_name(e) + " collar is " + to_string(v.status)});
    }
    if (!any) reps.push_back({"NUPBR.v", Tri::Holds, std::nullopt, "no absorbing boundary"});
    return reps;
}

}  // namespace

Tri tri_and(Tri a, Tri b) {
    if (a == Tri::Fails || b == Tri::Fails) return Tri::Fails;
    if (a == Tri::Inconclusive || b == Tri::Inconclusive) return Tri::Inconclusive;
    return Tri::Holds;
}

const char* verdict_string(Tri t) {
    switch (t) {
        case Tri::Holds: return "holds";
        case Tri::Fails: return "fails";
        default: return "inconclusive";
    }
}

const char* condition_string(Tri t) {
    switch (t) {
        case Tri::Holds: return "pass";
        case Tri::Fails: return "fail";
        default: return "inconclusive";
    }
}

CheckResult check_nip(const NaturalScaleView& view, const DiffusionSpec& spec, const Tolerances& tol) {
    CheckResult out;
    out.reports = nip_reports(view, spec, tol);
    out.status = combine(out.reports);
    return out;
}

CheckResult check_nip_zero_rate(const NaturalScaleView& view, const DiffusionSpec& spec, const Tolerances& tol) {
    if (spec.r != 0.0) fail(ErrorKind::Domain, "check_nip_zero_rate requires r = 0");
    CheckResult out;
    for (Endpoint e : {Endpoint::Left, Endpoint::Right}) {
        const auto& bb = view.boundary(e);
        if (bb.kind != BoundaryKind::Reflecting) continue;
        double d = e == Endpoint::Left ? view.q.d_plus(bb.image) : view.q.d_minus(bb.image);
        bool ok = std::fabs(d) <= tol.equality_rel;
        out.reports.push_back({"NIP.i.b", ok ? Tri::Holds : Tri::Fails, d,
                               std::string("q' at the reflecting ") + side_name(e) + " boundary is " + num(d)});
    }
    ConditionReport c{"NIP.ii", Tri::Holds, std::nullopt, "q' is locally absolutely continuous"};
    for (const auto& a : interior_atoms(view.qpp, view.sJ)) {
        if (std::fabs(a.mass) > tol.equality_rel) {
            c.status = Tri::Fails;
            c.residual = 0.5 * a.mass;
            c.note = "q' jumps by " + num(a.mass) + " at u=" + num(a.x);
            break;
        }
    }
    if (c.status == Tri::Holds && view.qpp.sc) {
        const ScPart& p = *view.qpp.sc;
        double w = 0.0;
        if (!sampled_zero(p.multiplier, p.lo, p.hi, tol.sc_samples, tol.equality_rel, &w)) {
            c.status = Tri::Fails;
            c.note = "q'' has a singular-continuous part";
        }
    }
    out.reports.push_back(c);
    out.status = combine(out.reports);
    return out;
}

CheckResult check_nsa(const NaturalScaleView& view, const DiffusionSpec& spec, const Tolerances& tol) {
    CheckResult out;
    Tri nip = check_nip(view, spec, tol).status;
    out.reports = nsa_reports(view, spec, tol);
    out.status = tri_and(nip, combine(out.reports));
    return out;
}

CheckResult check_nupbr(const NaturalScaleView& view, const DiffusionSpec& spec, const Tolerances& tol) {
    CheckResult out;
    Tri nsa = check_nsa(view, spec, tol).status;
    out.reports = nupbr_reports(view, spec, tol);
    out.status = tri_and(nsa, combine(out.reports));
    return out;
}

CheckResult check_rp(const NaturalScaleView& view) {
    CheckResult out;
    ConditionReport c{"RP", Tri::Holds, std::nullopt, "zero set of q' is Lebesgue-null"};
    double total = 0.0;
    for (const auto& z : view.zero_set)
        if (!z.is_point()) total += z.measure;
    if (total > 0.0) {
        c.status = Tri::Fails;
        c.residual = total;
        c.note = "zero set of q' has Lebesgue measure at least " + num(total);
    }
    out.reports.push_back(c);
    out.status = c.status;
    return out;
}

Verdict classify(const DiffusionSpec& spec, const Tolerances& tol) {
    NaturalScaleView view = derive_natural_scale(spec);
    AssumptionReport ar = check_semimartingale_assumption(view, spec);
    if (!ar.pass) {
        std::string msg = "semimartingale assumption fails";
        for (const auto& n : ar.notes) msg += ": " + n;
        fail(ErrorKind::Validation, msg);
    }
    Verdict v;
    v.model_id = spec.model_id;
    v.r = spec.r;

    auto nip = nip_reports(view, spec, tol);
    auto nsa = nsa_reports(view, spec, tol);
    auto nupbr = nupbr_reports(view, spec, tol);
    auto rp = check_rp(view);

    v.nip = combine(nip);
    if (spec.r == 0.0) {
        auto fast = check_nip_zero_rate(view, spec, tol);
        if (fast.status != v.nip && v.nip != Tri::Inconclusive) {
            nip.push_back({"NIP.ii", Tri::Inconclusive, std::nullopt,
                           std::string("zero-rate shortcut disagrees (") + verdict_string(fast.status) + ")"});
            v.nip = Tri::Inconclusive;
        }
    }
    v.nsa = tri_and(v.nip, combine(nsa));
    v.nupbr = tri_and(v.nsa, combine(nupbr));
    v.rp = rp.status;

    for (auto* part : {&nip, &nsa, &nupbr, &rp.reports})
        v.reports.insert(v.reports.end(), part->begin(), part->end());
    for (const auto& n : ar.notes) v.reports.push_back({"NIP.ii", Tri::Holds, std::nullopt, "assumption note: " + n});
    for (Endpoint e : {Endpoint::Left, Endpoint::Right})
        if (!view.boundary(e).note.empty())
            v.reports.push_back({e == Endpoint::Left ? "NIP.i.a" : "NIP.i.b", Tri::Holds, std::nullopt,
                                 std::string(side_name(e)) + " boundary: " + view.boundary(e).note});

    if (v.nip == Tri::Holds) {
        ImprDescription d;
        d.tag = spec.impr_tag;
        Interval range = shrink_from_boundaries(view, view.exhaustion_range());
        const int n = 17;
        for (int i = 0; i < n; ++i) {
            double u = range.lo + (range.hi - range.lo) * i / (n - 1);
            d.table.emplace_back(u, view.gamma(u));
        }
        v.impr = d;
    }
    return v;
}

}  // namespace gdarb
