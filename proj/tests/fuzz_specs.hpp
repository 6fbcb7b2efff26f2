#pragma once

// Random valid model specs for property tests. Five families rotate:
// piecewise-affine q on R with atoms at kinks, squared-Bessel-type half-line
// models, sticky reflected BM, smooth polynomial q, and sticky-skew models.
// Some draws are tuned so the singular parts balance and NIP holds.

#include "gdarb/model_catalog.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>

namespace fuzz {

using namespace gdarb;

inline double dyadic(std::mt19937_64& rng, double lo, double hi, int bits = 6) {
    std::uniform_int_distribution<int> k(0, (1 << bits));
    return lo + (hi - lo) * k(rng) / static_cast<double>(1 << bits);
}

inline bool coin(std::mt19937_64& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

inline std::string str(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline DiffusionSpec piecewise_affine(std::mt19937_64& rng) {
    DiffusionSpec s;
    s.model_id = "fuzz_piecewise";
    std::uniform_int_distribution<int> nk(0, 2);
    int k = nk(rng);
    std::vector<double> bps;
    for (int i = 0; i < k; ++i) bps.push_back(dyadic(rng, -2.0, 2.0) + 0.0625 * i);
    std::sort(bps.begin(), bps.end());
    bps.erase(std::unique(bps.begin(), bps.end()), bps.end());
    std::vector<double> slopes;
    for (std::size_t i = 0; i <= bps.size(); ++i) slopes.push_back(dyadic(rng, 0.5, 2.0));
    // q continuous, q(0) = offset.
    double offset = dyadic(rng, -1.0, 1.0);
    std::vector<Expr> pieces;
    // value at each breakpoint, walking from the piece containing 0
    auto q_at = [&](double u) {
        double v = offset, x = 0.0;
        std::size_t j = std::upper_bound(bps.begin(), bps.end(), 0.0) - bps.begin();
        if (u >= 0) {
            while (j < bps.size() && bps[j] < u) {
                v += slopes[j] * (bps[j] - x);
                x = bps[j];
                ++j;
            }
            return v + slopes[j] * (u - x);
        }
        while (j > 0 && bps[j - 1] > u) {
            v -= slopes[j] * (x - bps[j - 1]);
            x = bps[j - 1];
            --j;
        }
        return v - slopes[j] * (x - u);
    };
    for (std::size_t j = 0; j <= bps.size(); ++j) {
        double anchor = j == 0 ? (bps.empty() ? 0.0 : bps[0]) : bps[j - 1];
        pieces.push_back(make_affine(slopes[j], q_at(anchor) - slopes[j] * anchor));
    }
    s.inverse_scale = bps.empty() ? pieces[0] : make_piecewise(bps, pieces);
    MeasureSpec m;
    m.ac = make_const(dyadic(rng, 0.5, 2.0));
    s.r = coin(rng) ? 0.0 : dyadic(rng, -1.0, 1.0);
    for (std::size_t j = 0; j < bps.size(); ++j) {
        double jump = slopes[j + 1] - slopes[j];
        s.kinks.push_back({bps[j], jump});
        double qv = q_at(bps[j]);
        bool tuned = s.r != 0.0 && qv != 0.0 && coin(rng, 0.6) && jump / (2 * s.r * qv) > 0;
        if (tuned)
            m.atoms.push_back({bps[j], jump / (2 * s.r * qv)});
        else if (coin(rng))
            m.atoms.push_back({bps[j], dyadic(rng, 0.25, 2.0)});
    }
    if (coin(rng, 0.3)) {
        double x = dyadic(rng, -3.0, 3.0) + 1.0 / 3.0;
        m.atoms.push_back({x, dyadic(rng, 0.25, 2.0)});
    }
    std::sort(m.atoms.begin(), m.atoms.end(), [](const Atom& a, const Atom& b) { return a.x < b.x; });
    s.speed_natural = m;
    s.x0 = q_at(dyadic(rng, -1.0, 1.0) + 1.0 / 7.0);
    return s;
}

inline DiffusionSpec half_line(std::mt19937_64& rng) {
    Params p;
    p["nu"] = str(-dyadic(rng, 0.0625, 0.9375, 4));
    int which = std::uniform_int_distribution<int>(0, 2)(rng);
    p["m0"] = which == 0 ? "0" : which == 1 ? str(dyadic(rng, 0.25, 2.0)) : "inf";
    p["r"] = coin(rng) ? "0" : str(dyadic(rng, -1.0, 1.0));
    p["x0"] = str(dyadic(rng, 0.25, 3.0));
    return build_model("gen_squared_bessel", p);
}

inline DiffusionSpec sticky_reflected(std::mt19937_64& rng) {
    Params p;
    double rho = dyadic(rng, 0.0, 2.0, 3);
    p["rho"] = str(rho);
    p["r"] = (rho > 0 && coin(rng, 0.4)) ? str(0.5 / rho) : str(dyadic(rng, -1.0, 1.0));
    p["x0"] = str(dyadic(rng, 1.0, 3.0));
    return build_model("sticky_reflected_bm", p);
}

inline DiffusionSpec smooth(std::mt19937_64& rng) {
    DiffusionSpec s;
    s.model_id = "fuzz_smooth";
    double a = dyadic(rng, 0.25, 2.0);
    bool degenerate = coin(rng, 0.3);
    double b = degenerate ? 0.0 : dyadic(rng, 0.25, 2.0);
    s.inverse_scale = make_sum({make_product({make_const(a), make_power_signed(0.0, 3.0)}), make_affine(b, 0.0)});
    MeasureSpec m;
    m.ac = make_const(dyadic(rng, 0.5, 2.0));
    s.speed_natural = m;
    s.r = coin(rng) ? 0.0 : dyadic(rng, -1.0, 1.0);
    if (degenerate) {
        s.qprime_zero_set.push_back(ZeroSetEntry{});
        s.phi_behaviors.push_back({0.0, LocalBehavior::Side::Both, -1.0, 1.0});
        if (s.r != 0.0) s.r = 0.0;
    }
    double u0 = dyadic(rng, -1.0, 1.0) + 1.0 / 3.0;
    s.x0 = a * u0 * u0 * u0 + b * u0;
    return s;
}

inline DiffusionSpec sticky_skew(std::mt19937_64& rng) {
    Params p;
    double kappa = dyadic(rng, 0.125, 0.875, 3);
    double c = dyadic(rng, 0.25, 2.0, 3);
    double xi = dyadic(rng, 0.5, 2.0, 3) * (coin(rng) ? 1.0 : -1.0);
    p["kappa"] = str(kappa);
    p["c"] = str(c);
    p["xi"] = str(xi);
    double balanced = (2 * kappa - 1) / (2 * kappa * (1 - kappa) * xi * c);
    p["r"] = coin(rng, 0.4) ? str(balanced) : str(dyadic(rng, -1.0, 1.0));
    return build_model("sticky_skew", p);
}

inline DiffusionSpec random_spec(std::mt19937_64& rng, int i) {
    switch (i % 5) {
        case 0: return piecewise_affine(rng);
        case 1: return half_line(rng);
        case 2: return sticky_reflected(rng);
        case 3: return smooth(rng);
        default: return sticky_skew(rng);
    }
}

}  // namespace fuzz
