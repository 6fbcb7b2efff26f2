#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

namespace gdarb::detail {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    bool ok = false;
};

// Globally adaptive Gauss-Kronrod (31 points): the interval with the largest
// error estimate is bisected until the total error meets the tolerance or the
// interval budget runs out. Infinite ends are mapped to finite ones.
template <class F>
QuadResult integrate(F&& f, double a, double b, double rel = 1e-8, double abs = 1e-12, unsigned max_intervals = 2000) {
    QuadResult res;
    if (a == b) {
        res.ok = true;
        return res;
    }
    double sign = 1.0;
    if (a > b) {
        std::swap(a, b);
        sign = -1.0;
    }
    if (std::isinf(a) && std::isinf(b)) {
        QuadResult l = integrate(f, a, 0.0, rel, abs, max_intervals / 2);
        QuadResult r = integrate(f, 0.0, b, rel, abs, max_intervals / 2);
        res.value = sign * (l.value + r.value);
        res.error = l.error + r.error;
        res.ok = l.ok && r.ok;
        return res;
    }
    auto g = [&](double t) {
        double x, jac;
        if (std::isinf(b)) {
            x = a + t / (1.0 - t);
            jac = 1.0 / ((1.0 - t) * (1.0 - t));
        } else if (std::isinf(a)) {
            x = b - t / (1.0 - t);
            jac = 1.0 / ((1.0 - t) * (1.0 - t));
        } else {
            x = t;
            jac = 1.0;
        }
        double v = f(x) * jac;
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };
    const double lo = (std::isinf(a) || std::isinf(b)) ? 0.0 : a;
    const double hi = (std::isinf(a) || std::isinf(b)) ? 1.0 : b;

    struct Piece {
        double a, b, v, e;
        bool operator<(const Piece& o) const { return e < o.e; }
    };
    // Boost reports the error of the rule on [-1, 1], so map explicitly.
    auto rule = [&](double x, double y) {
        const double mean = 0.5 * (x + y), scale = 0.5 * (y - x);
        auto gm = [&](double t) { return g(mean + scale * t); };
        double err = 0.0;
        double v = scale * boost::math::quadrature::gauss_kronrod<double, 31>::integrate(gm, -1.0, 1.0, 0, 0.0, &err);
        err *= scale;
        if (!std::isfinite(v)) err = std::numeric_limits<double>::infinity();
        return Piece{x, y, v, err};
    };
    std::priority_queue<Piece> heap;
    Piece first = rule(lo, hi);
    heap.push(first);
    double total = first.v, total_err = first.e;
    unsigned count = 1;
    auto converged = [&] { return std::isfinite(total) && total_err <= std::max(abs, rel * std::fabs(total)); };
    while (!converged() && count < max_intervals) {
        Piece p = heap.top();
        double mid = 0.5 * (p.a + p.b);
        if (!(mid > p.a && mid < p.b)) break;  // cannot split further
        heap.pop();
        Piece l = rule(p.a, mid), r = rule(mid, p.b);
        heap.push(l);
        heap.push(r);
        ++count;
        // Recompute sums from scratch when infinities are involved.
        if (!std::isfinite(total_err) || !std::isfinite(total)) {
            total = 0.0;
            total_err = 0.0;
            auto copy = heap;
            while (!copy.empty()) {
                total += copy.top().v;
                total_err += copy.top().e;
                copy.pop();
            }
        } else {
            total += l.v + r.v - p.v;
            total_err += l.e + r.e - p.e;
        }
    }
    // Final exact resummation to limit drift.
    if (std::isfinite(total)) {
        double t = 0.0, te = 0.0;
        auto copy = heap;
        while (!copy.empty()) {
            t += copy.top().v;
            te += copy.top().e;
            copy.pop();
        }
        total = t;
        total_err = te;
    }
    res.value = sign * total;
    res.error = total_err;
    res.ok = std::isfinite(total) && total_err <= 10.0 * std::max(abs, rel * std::fabs(total));
    return res;
}

}  // namespace gdarb::detail
