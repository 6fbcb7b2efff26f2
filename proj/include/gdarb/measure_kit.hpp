#pragma once

#include "gdarb/expr.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace gdarb {

using Fn = std::function<double(double)>;

constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct Interval {
    double lo = -kInfinity;
    double hi = kInfinity;
    bool lo_closed = false;
    bool hi_closed = false;

    bool contains(double x) const {
        return (x > lo || (lo_closed && x == lo)) && (x < hi || (hi_closed && x == hi));
    }
    bool in_interior(double x) const { return x > lo && x < hi; }
    double length() const { return hi - lo; }
};

struct SmoothPiece1D {
    Interval domain;
    Fn value;
    Fn d_plus;
    Fn d_minus;
    Fn d2_ac;
    std::vector<double> special;  // kinks and singular points, sorted
};

SmoothPiece1D piece_from_expr(const Expr& f, const Interval& domain);

struct Atom {
    double x;
    double mass;  // +inf only at state-interval endpoints
};

struct ScPart {
    std::string base_id;
    Fn base_cdf;
    Fn multiplier;
    double lo = 0.0;
    double hi = 1.0;  // support of the base measure
};

struct DecomposedMeasure {
    Interval support;
    Fn ac;  // empty means zero density
    std::vector<double> breaks;  // sorted points where the density may jump
    std::vector<Atom> atoms;
    std::optional<ScPart> sc;

    double ac_density(double x) const { return ac ? ac(x) : 0.0; }
    double atom_mass(double x, double loc_tol = 1e-12) const;
    bool has_singular() const { return !atoms.empty() || sc.has_value(); }
    // Integral of w times the density over [a, b], split at the breaks.
    double ac_integral(const Fn& w, double a, double b, double rel = 1e-10) const;
    // Mass of the closed interval [a, b].
    double mass(double a, double b, double rel = 1e-10) const;
};

void validate_measure(const DecomposedMeasure& m, bool signed_allowed);

struct LocalBehavior {
    enum class Side { Left, Right, Both };
    double point = 0.0;
    Side side = Side::Both;
    double p = 0.0;
    double C = 1.0;
};

enum class Integrability { Finite, Divergent, Inconclusive };
enum class IntegrabilityMethod { ExponentRule, NumericRefinement };

struct IntegrabilityVerdict {
    Integrability status = Integrability::Finite;
    IntegrabilityMethod method = IntegrabilityMethod::NumericRefinement;
    std::vector<double> diagnostics;  // last refinement-level cumulative values
};

struct NumericOptions {
    double rel_tol = 1e-8;
    double abs_tol = 1e-12;
    int levels = 6;                 // dyadic collar levels of the numeric fallback
    double divergence_ratio = 0.9;  // level ratio at or above this means divergence
    double tail_rel = 1e-8;         // finite when the geometric tail bound is below this share
};

double eval(const SmoothPiece1D& f, double x);

// Bisection refined by Newton where |d_plus| >= 1e-6 on the bracket.
double invert_monotone(const SmoothPiece1D& f, double y);

// Image of m under s; q is the inverse of s.
DecomposedMeasure pushforward(const DecomposedMeasure& m, const SmoothPiece1D& s, const SmoothPiece1D& q);
DecomposedMeasure pushforward(const DecomposedMeasure& m, const SmoothPiece1D& s);

// Inverse of a strictly increasing piece; derivatives follow from the inverse
// function rule.
SmoothPiece1D invert_piece(const SmoothPiece1D& s);

// Limit of a monotone function at +inf (dir = 1) or -inf (dir = -1).
double limit_at_infinity(const Fn& f, int dir);

struct Kink {
    double x;
    double jump;  // q'_+(x) - q'_-(x)
};

// Signed measure q'' = d2_ac dx + sum of kink atoms. Declared kinks are checked
// against the one-sided derivatives; undeclared jumps at special points are added.
DecomposedMeasure second_derivative_decomposition(const SmoothPiece1D& q, const std::vector<Kink>& kinks,
                                                  double rel_tol = 1e-9);

// int f^2 over the window; suspects are extra points where f may blow up.
IntegrabilityVerdict decide_L2_local(const Fn& f, const Interval& window, const std::vector<LocalBehavior>& behaviors,
                                     const std::vector<double>& suspects = {}, const NumericOptions& opt = {});

// int |x - b| f^2 over a window adjacent to b.
IntegrabilityVerdict decide_weighted_L2_boundary(const Fn& f, double b_image, const Interval& window,
                                                 const std::vector<LocalBehavior>& behaviors,
                                                 const std::vector<double>& suspects = {},
                                                 const NumericOptions& opt = {});

// Finite-or-not test of int g over a window where g >= 0 may blow up at the
// listed points; used by boundary and semimartingale checks.
IntegrabilityVerdict decide_integral(const Fn& g, const Interval& window, const std::vector<double>& suspects,
                                     const NumericOptions& opt);

const char* to_string(Integrability s);

}  // namespace gdarb
