#include "gdarb/mc_engine.hpp"

#include "gdarb/errors.hpp"
#include "quad.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

namespace gdarb {

// ---- Philox4x32-10 ----

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
    std::uint64_t x = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

Philox::Philox(std::uint64_t seed, std::uint64_t stream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      ctr_{0u, 0u, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> c, std::array<std::uint32_t, 2> key) {
    std::uint32_t k0 = key[0], k1 = key[1];
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kM0, c[0], hi0, lo0);
        mulhilo(kM1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
        k0 += kW0;
        k1 += kW1;
    }
    return c;
}

std::array<double, 2> Philox::next_pair() {
    std::array<std::uint32_t, 4> c = philox4x32_10(ctr_, key_);
    if (++ctr_[0] == 0) ++ctr_[1];
    return {to_unit(c[0], c[1]), to_unit(c[2], c[3])};
}

// ---- chain construction ----

std::size_t ChainModel::nearest(double x) const {
    auto it = std::lower_bound(u.begin(), u.end(), x);
    if (it == u.end()) return u.size() - 1;
    std::size_t j = static_cast<std::size_t>(it - u.begin());
    if (j > 0 && std::fabs(u[j - 1] - x) <= std::fabs(u[j] - x)) return j - 1;
    return j;
}

double ChainModel::max_spacing() const {
    double h = 0.0;
    for (std::size_t i = 1; i < u.size(); ++i) h = std::max(h, u[i] - u[i - 1]);
    return h;
}

namespace {

std::string num(double x) {
    std::ostringstream os;
    os.precision(10);
    os << x;
    return os.str();
}

double upper_normal_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

// int w(y) m(dy) over [a, b] with the ac part by quadrature, finite atoms in
// the selected range and the sc part by a Stieltjes sum.
double weighted_mass(const DecomposedMeasure& m, const Fn& w, double a, double b, bool include_a, bool include_b) {
    double total = 0.0;
    if (m.ac && b > a) {
        double v = m.ac_integral(w, a, b);
        if (!std::isfinite(v)) fail(ErrorKind::Numeric, "chain cell integral diverges on [" + num(a) + ", " + num(b) + "]");
        total += v;
    }
    for (const auto& at : m.atoms) {
        if (std::isinf(at.mass)) continue;
        bool in = (at.x > a && at.x < b) || (include_a && at.x == a) || (include_b && at.x == b);
        if (in) total += at.mass * w(at.x);
    }
    if (m.sc) {
        const ScPart& sc = *m.sc;
        double lo = std::max(a, sc.lo), hi = std::min(b, sc.hi);
        const int cells = 64;
        for (int k = 0; k < cells && hi > lo; ++k) {
            double x0 = lo + (hi - lo) * k / cells, x1 = lo + (hi - lo) * (k + 1) / cells, xm = 0.5 * (x0 + x1);
            total += w(xm) * sc.multiplier(xm) * (sc.base_cdf(x1) - sc.base_cdf(x0));
        }
    }
    return total;
}

double min_density(const DecomposedMeasure& m, double a, double b) {
    double lo = kInfinity;
    const int n = 256;
    for (int k = 0; k <= n; ++k) {
        double x = a + (b - a) * k / n;
        double d = m.ac_density(x);
        if (std::isfinite(d)) lo = std::min(lo, d);
    }
    return lo;
}

// Half-width of the truncation window on an inaccessible side.
double truncation_width(const NaturalScaleView& view, double T, int dir, double limit, double* bound) {
    const double z = 3.5;
    const double cap = 64.0 * std::max(1.0, std::fabs(view.u0)) + 64.0 * std::sqrt(T);
    double a = z * std::sqrt(T);
    for (int it = 0; it < 8; ++it) {
        double far = view.u0 + dir * a;
        if (std::isfinite(limit)) far = dir > 0 ? std::min(far, limit) : std::max(far, limit);
        double md = min_density(view.mU, std::min(view.u0, far), std::max(view.u0, far));
        double next = md > 0 && std::isfinite(md) ? z * std::sqrt(T / md) : cap;
        next = std::min(std::max(next, z * 1e-3), cap);
        if (std::fabs(next - a) <= 1e-3 * a) {
            a = next;
            break;
        }
        a = next;
    }
    double md = min_density(view.mU, std::min(view.u0, view.u0 + dir * a), std::max(view.u0, view.u0 + dir * a));
    *bound += md > 0 ? 2.0 * upper_normal_tail(a / std::sqrt(T / md)) : 1.0;
    return a;
}

}  // namespace

ChainModel build_chain(const NaturalScaleView& view, const DiffusionSpec& spec, int N, const std::vector<double>& hints) {
    if (N < 16) fail(ErrorKind::Validation, "grid: N must be at least 16");
    ChainModel c;
    c.T = spec.T;
    c.r = spec.r;
    const double u0 = view.u0;

    StateRule left_rule = StateRule::Exit, right_rule = StateRule::Exit;
    double L, H;
    const auto& lb = view.left;
    const auto& rb = view.right;
    if (std::isfinite(view.sJ.lo) && lb.kind != BoundaryKind::Inaccessible) {
        L = view.sJ.lo;
        left_rule = lb.kind == BoundaryKind::Absorbing ? StateRule::Absorb : StateRule::ReflectUp;
    } else {
        double a = truncation_width(view, spec.T, -1, view.sJ.lo, &c.truncation_exit_bound);
        L = u0 - a;
        if (std::isfinite(view.sJ.lo)) L = std::max(L, view.sJ.lo + 1e-6 * (u0 - view.sJ.lo));
    }
    if (std::isfinite(view.sJ.hi) && rb.kind != BoundaryKind::Inaccessible) {
        H = view.sJ.hi;
        right_rule = rb.kind == BoundaryKind::Absorbing ? StateRule::Absorb : StateRule::ReflectDown;
    } else {
        double a = truncation_width(view, spec.T, +1, view.sJ.hi, &c.truncation_exit_bound);
        H = u0 + a;
        if (std::isfinite(view.sJ.hi)) H = std::min(H, view.sJ.hi - 1e-6 * (view.sJ.hi - u0));
    }
    if (!(L <= u0 && u0 <= H)) fail(ErrorKind::Validation, "grid: window does not contain the starting point");

    std::vector<double> req{L, H, u0};
    auto add_inside = [&](double x) {
        if (x > L && x < H) req.push_back(x);
    };
    for (const auto& a : view.mU.atoms) add_inside(a.x);
    for (const auto& a : view.qpp.atoms) add_inside(a.x);
    for (const auto& z : view.zero_set)
        if (z.is_point()) add_inside(z.a);
    for (double h : hints) add_inside(h);
    std::sort(req.begin(), req.end());
    req.erase(std::unique(req.begin(), req.end()), req.end());

    const double h = (H - L) / N;
    c.u.push_back(req[0]);
    for (std::size_t j = 1; j < req.size(); ++j) {
        double a = req[j - 1], b = req[j];
        int k = std::max(1, static_cast<int>(std::lround((b - a) / h)));
        for (int m = 1; m < k; ++m) c.u.push_back(a + (b - a) * m / k);
        c.u.push_back(b);
    }
    const std::size_t n = c.u.size();
    if (n < 3) fail(ErrorKind::Validation, "grid: too few states");
    c.up_prob.assign(n, 0.0);
    c.mean_hold.assign(n, kInfinity);
    c.cell_mass.assign(n, 0.0);
    c.du.assign(n, 0.0);
    c.rule.assign(n, StateRule::Interior);
    c.q.assign(n, 0.0);
    c.phi.assign(n, 0.0);
    c.ac_drift.assign(n, std::nan(""));
    c.rule[0] = left_rule;
    c.rule[n - 1] = right_rule;
    c.start = c.nearest(u0);

    const auto& mU = view.mU;
    for (std::size_t i = 0; i < n; ++i) {
        c.q[i] = view.q.value(c.u[i]);
        c.phi[i] = view.phi(c.u[i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double x = c.u[i];
        double lo_mid = i > 0 ? 0.5 * (c.u[i - 1] + x) : x;
        double hi_mid = i + 1 < n ? 0.5 * (x + c.u[i + 1]) : x;
        c.du[i] = hi_mid - lo_mid;
        Fn one = [](double) { return 1.0; };
        c.cell_mass[i] = weighted_mass(mU, one, lo_mid, hi_mid, true, i + 1 == n);

        if (c.rule[i] == StateRule::Interior) {
            const double a = c.u[i - 1], b = c.u[i + 1];
            const double p = (x - a) / (b - a);
            c.up_prob[i] = p;
            Fn G = [a, b, x](double y) { return (std::min(x, y) - a) * (b - std::max(x, y)) / (b - a); };
            double hold = 2.0 * weighted_mass(mU, G, a, b, false, false);
            if (!(hold > 0) || !std::isfinite(hold))
                fail(ErrorKind::Numeric, "grid: infinite or zero expected holding time at u=" + num(x));
            c.mean_hold[i] = hold;
            const double Gii = G(x);
            const double qpp_atom = view.qpp.atom_mass(x);
            const double m_atom = mU.atom_mass(x);
            double d_ac = p * c.q[i + 1] + (1.0 - p) * c.q[i - 1] - c.q[i] - Gii * qpp_atom;
            double m_ac = hold - 2.0 * Gii * (std::isfinite(m_atom) ? m_atom : 0.0);
            c.ac_drift[i] = (c.q[i] + d_ac) / (1.0 + c.r * m_ac) - c.q[i];
        } else if (c.rule[i] == StateRule::ReflectUp) {
            const double u1 = c.u[i + 1];
            Fn w = [u1](double y) { return u1 - y; };
            c.mean_hold[i] = 2.0 * weighted_mass(mU, w, x, u1, true, false);
            c.up_prob[i] = 1.0;
        } else if (c.rule[i] == StateRule::ReflectDown) {
            const double um = c.u[i - 1];
            Fn w = [um](double y) { return y - um; };
            c.mean_hold[i] = 2.0 * weighted_mass(mU, w, um, x, false, true);
            c.up_prob[i] = 0.0;
        }
        if ((c.rule[i] == StateRule::ReflectUp || c.rule[i] == StateRule::ReflectDown) &&
            (!(c.mean_hold[i] > 0) || !std::isfinite(c.mean_hold[i])))
            fail(ErrorKind::Numeric, "grid: invalid holding time at the reflecting state u=" + num(x));
    }
    return c;
}

// ---- sampling ----

namespace {

struct BatchOut {
    std::vector<PathRecord> paths;
    std::vector<double> occupation;
    std::vector<DriftStats> drift;
    std::size_t discarded = 0;
    std::size_t steps = 0;
};

struct Prepared {
    std::vector<double> k_weight;
    std::vector<std::vector<double>> H;  // per H-by-state strategy, per state
    std::vector<int> strategy_kind;      // 0: by state, 1: post hitting
    std::vector<std::size_t> level_idx;
    std::vector<int> watch_slot;         // state -> slot or -1
    std::vector<int> drift_slot;
    bool need_discount = false;
    std::ptrdiff_t left_refl = -1, right_refl = -1;
};

Prepared prepare(const ChainModel& c, const SampleRequest& req) {
    Prepared p;
    const std::size_t n = c.size();
    p.k_weight.assign(n, 0.0);
    if (req.tradeoff)
        for (std::size_t i = 0; i < n; ++i)
            if (c.cell_mass[i] > 0 && std::isfinite(c.cell_mass[i]))
                p.k_weight[i] = c.phi[i] * c.phi[i] * c.du[i] / c.cell_mass[i];
    for (const auto& s : req.strategies) {
        std::vector<double> H(n, 0.0);
        if (s.kind == Strategy::Kind::PostHittingHold) {
            p.strategy_kind.push_back(1);
            p.level_idx.push_back(c.nearest(s.level));
        } else {
            p.strategy_kind.push_back(0);
            p.level_idx.push_back(0);
            if (s.kind == Strategy::Kind::BoundarySit) {
                for (std::size_t i = 0; i < n; ++i)
                    if (c.rule[i] == StateRule::ReflectUp || c.rule[i] == StateRule::ReflectDown) H[i] = 1.0;
            } else {
                auto tab = s.table;
                std::sort(tab.begin(), tab.end());
                for (std::size_t i = 0; i < n; ++i) {
                    double v = 0.0;
                    for (const auto& e : tab)
                        if (e.first <= c.u[i] + 1e-12 * std::max(1.0, std::fabs(c.u[i]))) v = e.second;
                    H[i] = v;
                }
            }
        }
        p.H.push_back(H);
    }
    p.need_discount = !req.strategies.empty() || !req.drift_states.empty();
    p.watch_slot.assign(n, -1);
    for (std::size_t k = 0; k < req.watch_states.size(); ++k)
        if (req.watch_states[k] < n) p.watch_slot[req.watch_states[k]] = static_cast<int>(k);
    p.drift_slot.assign(n, -1);
    for (std::size_t k = 0; k < req.drift_states.size(); ++k) {
        std::size_t s = req.drift_states[k];
        if (s < n && c.rule[s] == StateRule::Interior) p.drift_slot[s] = static_cast<int>(k);
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (c.rule[i] == StateRule::ReflectUp) p.left_refl = static_cast<std::ptrdiff_t>(i);
        if (c.rule[i] == StateRule::ReflectDown) p.right_refl = static_cast<std::ptrdiff_t>(i);
    }
    return p;
}

void run_batch(const ChainModel& c, const Prepared& P, const SampleRequest& req, std::uint64_t seed,
               std::size_t first, std::size_t last, BatchOut& out) {
    const std::size_t n = c.size();
    const double T = c.T, r = c.r;
    out.occupation.assign(n, 0.0);
    out.drift.resize(req.drift_states.size());
    for (std::size_t k = 0; k < req.drift_states.size(); ++k) out.drift[k].state = req.drift_states[k];
    std::vector<double> scratch(n, 0.0);
    std::vector<std::uint32_t> touched;
    std::vector<DriftStats> pd(req.drift_states.size());
    const std::size_t ns = req.strategies.size();

    for (std::size_t path = first; path < last; ++path) {
        Philox rng(seed, path);
        PathRecord rec;
        rec.watch_occ.assign(req.watch_states.size(), 0.0);
        rec.payoff.assign(ns, 0.0);
        rec.hit_time.assign(ns, -1.0);
        for (auto& d : pd) d = DriftStats{d.state, 0, 0.0, 0.0, 0.0, 0.0};
        touched.clear();
        std::size_t i = c.start;
        double t = 0.0;
        bool discard = false;
        for (std::size_t k = 0; k < ns; ++k)
            if (P.strategy_kind[k] == 1 && P.level_idx[k] == i) rec.hit_time[k] = 0.0;

        auto occupy = [&](std::size_t s, double dt) {
            if (scratch[s] == 0.0) touched.push_back(static_cast<std::uint32_t>(s));
            scratch[s] += dt;
            rec.K += P.k_weight[s] * dt;
            rec.occupied += dt;
            if (P.watch_slot[s] >= 0) rec.watch_occ[P.watch_slot[s]] += dt;
        };

        while (true) {
            const StateRule rule = c.rule[i];
            if (rule == StateRule::Exit) {
                discard = true;
                break;
            }
            if (rule == StateRule::Absorb) {
                rec.absorbed = true;
                rec.absorption_time = t;
                if (P.need_discount)
                    for (std::size_t k = 0; k < ns; ++k)
                        if (P.strategy_kind[k] == 0 && P.H[k][i] != 0.0)
                            rec.payoff[k] += P.H[k][i] * (std::exp(-r * T) - std::exp(-r * t)) * c.q[i];
                break;
            }
            auto uv = rng.next_pair();
            ++out.steps;
            const double tau = -c.mean_hold[i] * std::log(uv[0]);
            std::size_t next;
            if (rule == StateRule::ReflectUp)
                next = i + 1;
            else if (rule == StateRule::ReflectDown)
                next = i - 1;
            else
                next = uv[1] < c.up_prob[i] ? i + 1 : i - 1;
            if (P.drift_slot[i] >= 0) {
                double z = std::exp(-r * tau) * c.q[next] - c.q[i] - c.ac_drift[i];
                auto& d = pd[P.drift_slot[i]];
                ++d.visits;
                d.sum += z;
                d.sum_sq += z * z;
                d.hold_sum += tau;
                d.hold_sum_sq += tau * tau;
            }
            if (t + tau >= T) {
                occupy(i, T - t);
                if (P.need_discount)
                    for (std::size_t k = 0; k < ns; ++k)
                        if (P.strategy_kind[k] == 0 && P.H[k][i] != 0.0)
                            rec.payoff[k] += P.H[k][i] * (std::exp(-r * T) - std::exp(-r * t)) * c.q[i];
                t = T;
                break;
            }
            occupy(i, tau);
            if (P.need_discount)
                for (std::size_t k = 0; k < ns; ++k)
                    if (P.strategy_kind[k] == 0 && P.H[k][i] != 0.0)
                        rec.payoff[k] += P.H[k][i] * (std::exp(-r * (t + tau)) * c.q[next] - std::exp(-r * t) * c.q[i]);
            t += tau;
            i = next;
            for (std::size_t k = 0; k < ns; ++k)
                if (P.strategy_kind[k] == 1 && rec.hit_time[k] < 0 && P.level_idx[k] == i) rec.hit_time[k] = t;
        }
        rec.terminal = i;

        if (discard) {
            ++out.discarded;
            for (auto s : touched) scratch[s] = 0.0;
            continue;
        }
        for (std::size_t k = 0; k < ns; ++k) {
            if (P.strategy_kind[k] != 1 || rec.hit_time[k] < 0) continue;
            std::size_t lv = P.level_idx[k];
            rec.payoff[k] = std::exp(-r * T) * c.q[i] - std::exp(-r * rec.hit_time[k]) * c.q[lv];
        }
        if (req.half_local_time) {
            double D = c.u[i] - c.u[c.start];
            if (P.left_refl >= 0) D -= 0.5 * scratch[P.left_refl] / c.cell_mass[P.left_refl];
            if (P.right_refl >= 0) D += 0.5 * scratch[P.right_refl] / c.cell_mass[P.right_refl];
            rec.D = D;
        }
        for (auto s : touched) {
            out.occupation[s] += scratch[s];
            scratch[s] = 0.0;
        }
        for (std::size_t k = 0; k < pd.size(); ++k) {
            out.drift[k].visits += pd[k].visits;
            out.drift[k].sum += pd[k].sum;
            out.drift[k].sum_sq += pd[k].sum_sq;
            out.drift[k].hold_sum += pd[k].hold_sum;
            out.drift[k].hold_sum_sq += pd[k].hold_sum_sq;
        }
        out.paths.push_back(std::move(rec));
    }
}

}  // namespace

SampleSet sample_paths(const ChainModel& chain, std::size_t n_paths, std::uint64_t seed, const SampleRequest& req) {
    if (n_paths < 1) fail(ErrorKind::Validation, "paths: n_paths must be at least 1");
    Prepared P = prepare(chain, req);
    const std::size_t nb = std::min<std::size_t>(64, n_paths);
    std::vector<BatchOut> outs(nb);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t b = next++; b < nb; b = next++) {
            std::size_t first = n_paths * b / nb, last = n_paths * (b + 1) / nb;
            run_batch(chain, P, req, seed, first, last, outs[b]);
        }
    };
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    std::size_t nt = std::min<std::size_t>(hw, nb);
    std::vector<std::thread> pool;
    for (std::size_t k = 1; k < nt; ++k) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    SampleSet s;
    s.seed = seed;
    s.requested = n_paths;
    s.occupation.assign(chain.size(), 0.0);
    s.drift.resize(req.drift_states.size());
    for (std::size_t k = 0; k < req.drift_states.size(); ++k) s.drift[k].state = req.drift_states[k];
    s.paths.reserve(n_paths);
    for (auto& o : outs) {
        s.discarded += o.discarded;
        s.steps += o.steps;
        for (std::size_t i = 0; i < chain.size(); ++i) s.occupation[i] += o.occupation[i];
        for (std::size_t k = 0; k < s.drift.size(); ++k) {
            s.drift[k].visits += o.drift[k].visits;
            s.drift[k].sum += o.drift[k].sum;
            s.drift[k].sum_sq += o.drift[k].sum_sq;
            s.drift[k].hold_sum += o.drift[k].hold_sum;
            s.drift[k].hold_sum_sq += o.drift[k].hold_sum_sq;
        }
        for (auto& p : o.paths) s.paths.push_back(std::move(p));
    }
    return s;
}

// ---- estimators ----

namespace {

Estimate mean_se(const std::vector<double>& v) {
    Estimate e;
    if (v.empty()) return e;
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    e.value = m;
    e.se = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size())) : 0.0;
    return e;
}

double t_of(const Estimate& e) {
    if (e.se > 0) return e.value / e.se;
    return e.value == 0.0 ? 0.0 : (e.value > 0 ? kInfinity : -kInfinity);
}

}  // namespace

std::vector<double> estimate_local_time_field(const SampleSet& s, const ChainModel& chain) {
    std::vector<double> L(chain.size(), 0.0);
    const double n = static_cast<double>(s.paths.size());
    if (n == 0) return L;
    for (std::size_t i = 0; i < chain.size(); ++i) {
        if (s.occupation[i] == 0.0) continue;
        if (!(chain.cell_mass[i] > 0)) fail(ErrorKind::Numeric, "local time: zero-mass cell at u=" + num(chain.u[i]));
        L[i] = s.occupation[i] / n / chain.cell_mass[i];
    }
    return L;
}

Estimate estimate_local_time_at(const SampleSet& s, const ChainModel& chain, std::size_t state) {
    (void)state;
    if (s.paths.empty() || s.paths[0].watch_occ.empty())
        fail(ErrorKind::Validation, "local time: state was not watched during sampling");
    if (!(chain.cell_mass[state] > 0)) fail(ErrorKind::Numeric, "local time: zero-mass cell");
    std::vector<double> v;
    v.reserve(s.paths.size());
    for (const auto& p : s.paths) v.push_back(p.watch_occ[0] / chain.cell_mass[state]);
    return mean_se(v);
}

TradeoffEstimate estimate_tradeoff(const NaturalScaleView& view, const DiffusionSpec& spec, int N, int levels,
                                   std::size_t n_paths, std::uint64_t seed) {
    if (levels < 1) fail(ErrorKind::Validation, "levels: must be at least 1");
    TradeoffEstimate out;
    SampleRequest req;
    req.tradeoff = true;
    for (int l = 0; l < levels; ++l) {
        int Nl = N << l;
        ChainModel c = build_chain(view, spec, Nl);
        SampleSet s = sample_paths(c, n_paths, seed, req);
        std::vector<double> k;
        k.reserve(s.paths.size());
        for (const auto& p : s.paths) k.push_back(p.K);
        out.grid_sizes.push_back(Nl);
        out.K.push_back(mean_se(k));
    }
    for (std::size_t l = 1; l < out.K.size(); ++l) {
        double a = out.K[l - 1].value, b = out.K[l].value;
        double ratio = (a <= 1e-12 && b <= 1e-12) ? 1.0 : (a > 0 ? b / a : kInfinity);
        out.ratios.push_back(ratio);
    }
    if (out.ratios.size() >= 2)
        out.divergent = out.ratios[out.ratios.size() - 1] >= 1.5 && out.ratios[out.ratios.size() - 2] >= 1.5;
    else if (out.ratios.size() == 1)
        out.divergent = out.ratios[0] >= 1.5;
    return out;
}

std::pair<double, double> wilson_interval(std::size_t successes, std::size_t n, double z) {
    if (n == 0) return {0.0, 1.0};
    const double p = static_cast<double>(successes) / static_cast<double>(n);
    const double nn = static_cast<double>(n);
    const double den = 1.0 + z * z / nn;
    const double centre = (p + z * z / (2.0 * nn)) / den;
    const double half = z / den * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn));
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

StrategyResult run_strategy(const SampleSet& s, std::size_t k, const std::string& name) {
    StrategyResult r;
    r.name = name;
    if (!s.paths.empty() && k >= s.paths[0].payoff.size())
        fail(ErrorKind::Validation, "strategy: index " + std::to_string(k) + " was not sampled");
    std::size_t pos = 0;
    r.min_payoff = s.paths.empty() ? 0.0 : kInfinity;
    for (const auto& p : s.paths) {
        double v = p.payoff[k];
        r.payoffs.push_back(v);
        r.min_payoff = std::min(r.min_payoff, v);
        if (v > 1e-12) ++pos;
        if (p.hit_time[k] >= 0 || v != 0.0) ++r.triggered;
    }
    r.mean = mean_se(r.payoffs);
    r.frac_positive = s.paths.empty() ? 0.0 : static_cast<double>(pos) / static_cast<double>(s.paths.size());
    auto ci = wilson_interval(pos, s.paths.size());
    r.wilson_lo = ci.first;
    r.wilson_hi = ci.second;
    return r;
}

MartingaleDiagnostic martingale_diagnostic(const SampleSet& s, const ChainModel& chain, MartingaleTarget target) {
    MartingaleDiagnostic d;
    if (target == MartingaleTarget::UMinusHalfL) {
        d.target = "U_minus_half_L";
        bool refl = std::any_of(chain.rule.begin(), chain.rule.end(), [](StateRule r) {
            return r == StateRule::ReflectUp || r == StateRule::ReflectDown;
        });
        if (!refl) fail(ErrorKind::Validation, "martingale diagnostic: no reflecting boundary");
        std::vector<double> v;
        v.reserve(s.paths.size());
        for (const auto& p : s.paths) v.push_back(p.D);
        d.mean = mean_se(v);
        d.samples = v.size();
    } else {
        d.target = "discounted_price_drift";
        if (s.drift.empty()) fail(ErrorKind::Validation, "martingale diagnostic: no drift states were sampled");
        std::size_t n = 0;
        double sum = 0.0, sq = 0.0;
        for (const auto& st : s.drift) {
            n += st.visits;
            sum += st.sum;
            sq += st.sum_sq;
        }
        d.samples = n;
        if (n > 0) {
            double m = sum / static_cast<double>(n);
            double var = n > 1 ? (sq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1) : 0.0;
            d.mean.value = m;
            d.mean.se = std::sqrt(std::max(0.0, var) / static_cast<double>(n));
        }
    }
    d.t_stat = t_of(d.mean);
    return d;
}

// ---- pipeline ----

SimulationReport simulate(const DiffusionSpec& spec, const SimulationConfig& cfg) {
    NaturalScaleView view = derive_natural_scale(spec);
    AssumptionReport ar = check_semimartingale_assumption(view, spec);
    if (!ar.pass) fail(ErrorKind::Validation, "semimartingale assumption fails" + (ar.notes.empty() ? "" : ": " + ar.notes[0]));

    SimulationReport rep;
    rep.seed = cfg.seed;
    rep.N = cfg.N;
    rep.n_paths = cfg.n_paths;

    std::vector<double> hints;
    std::optional<double> level;
    for (Endpoint e : {Endpoint::Left, Endpoint::Right})
        if (view.boundary(e).kind == BoundaryKind::Reflecting && !level) level = view.boundary(e).image;
    if (!level)
        for (const auto& a : view.mU.atoms)
            if (view.sJ.in_interior(a.x) && !level) level = a.x;
    if (level) hints.push_back(*level);

    ChainModel chain = build_chain(view, spec, cfg.N, hints);
    bool has_refl = std::any_of(chain.rule.begin(), chain.rule.end(), [](StateRule r) {
        return r == StateRule::ReflectUp || r == StateRule::ReflectDown;
    });

    SampleRequest req;
    req.watch_states = {chain.start};
    if (has_refl) {
        req.strategies.push_back({Strategy::Kind::BoundarySit, 0.0, {}, "boundary_sit"});
        req.half_local_time = true;
    }
    if (level) req.strategies.push_back({Strategy::Kind::PostHittingHold, *level, {}, "post_hitting_hold"});
    for (const auto& a : view.mU.atoms)
        if (view.sJ.in_interior(a.x)) req.drift_states.push_back(chain.nearest(a.x));
    if (req.drift_states.empty() && chain.rule[chain.start] == StateRule::Interior) req.drift_states.push_back(chain.start);

    SampleSet s = sample_paths(chain, cfg.n_paths, cfg.seed, req);
    rep.discarded_paths = s.discarded;

    std::vector<double> xs, us;
    for (const auto& p : s.paths) {
        xs.push_back(chain.q[p.terminal]);
        us.push_back(chain.u[p.terminal]);
    }
    rep.estimates.push_back({"terminal_mean_X", mean_se(xs)});
    {
        Estimate e = mean_se(xs);
        e.value = std::exp(-spec.r * spec.T) * e.value - spec.x0;
        e.se *= std::exp(-spec.r * spec.T);
        rep.estimates.push_back({"discounted_terminal_mean_minus_x0", e});
    }
    rep.estimates.push_back({"terminal_mean_U", mean_se(us)});
    rep.estimates.push_back({"local_time_at_start", estimate_local_time_at(s, chain, chain.start)});
    {
        std::vector<double> k;
        for (const auto& p : s.paths) k.push_back(p.K);
        rep.estimates.push_back({"K_T", mean_se(k)});
    }

    std::size_t tp = cfg.tradeoff_paths ? cfg.tradeoff_paths : std::min<std::size_t>(cfg.n_paths, 2000);
    rep.tradeoff = estimate_tradeoff(view, spec, cfg.N, cfg.levels, tp, cfg.seed);
    rep.flags.push_back({"k_divergent", rep.tradeoff.divergent});

    const double tol = 2.0 * chain.max_spacing();
    for (std::size_t k = 0; k < req.strategies.size(); ++k) {
        StrategyResult sr = run_strategy(s, k, req.strategies[k].name);
        rep.estimates.push_back({"payoff_mean_" + sr.name, sr.mean});
        if (req.strategies[k].kind == Strategy::Kind::PostHittingHold)
            rep.flags.push_back({"empirical_arbitrage", sr.wilson_lo > 0.0 && sr.min_payoff >= -tol});
        rep.strategies.push_back(std::move(sr));
    }
    if (req.half_local_time) {
        auto d = martingale_diagnostic(s, chain, MartingaleTarget::UMinusHalfL);
        rep.estimates.push_back({"U_minus_half_L_increment", d.mean});
        rep.flags.push_back({"U_minus_half_L_martingale", std::fabs(d.t_stat) < 3.0});
    }
    if (!req.drift_states.empty()) {
        auto d = martingale_diagnostic(s, chain, MartingaleTarget::DiscountedPriceDrift);
        rep.estimates.push_back({"discounted_drift_residual", d.mean});
        rep.flags.push_back({"discounted_drift_zero", std::fabs(d.t_stat) < 3.0});
    }
    if (cfg.keep_paths)
        for (const auto& p : s.paths)
            rep.paths.push_back({chain.u[p.terminal], chain.q[p.terminal], p.absorbed, p.K, p.D, p.payoff});
    rep.notes.push_back({"grid_states", std::to_string(chain.size())});
    rep.notes.push_back({"max_spacing", num(chain.max_spacing())});
    rep.notes.push_back({"truncation_exit_bound", num(chain.truncation_exit_bound)});
    rep.notes.push_back({"steps", std::to_string(s.steps)});
    return rep;
}

}  // namespace gdarb
