#pragma once

#include "gdarb/measure_kit.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gdarb {

struct StateInterval {
    double alpha = -kInfinity;
    double beta = kInfinity;
    bool alpha_closed = false;
    bool beta_closed = false;
};

enum class BoundaryKind { Inaccessible, Absorbing, Reflecting };
enum class Endpoint { Left, Right };

struct BoundaryBehavior {
    BoundaryKind kind = BoundaryKind::Inaccessible;
    double stickiness = 0.0;  // speed atom at the endpoint when reflecting
    double image = 0.0;       // s(b), possibly infinite
    std::string note;
};

// Serializable description of a measure: expressions plus atoms.
struct ScSpec {
    std::string base_id;
    Expr base_cdf;
    Expr multiplier;
    double lo = 0.0, hi = 1.0;
};

struct MeasureSpec {
    Expr ac;  // null means zero density
    std::vector<Atom> atoms;
    std::optional<ScSpec> sc;
};

DecomposedMeasure to_measure(const MeasureSpec& m, const Interval& support);

// Points or sets, in natural-scale coordinates, on which q' vanishes.
// A set is [a, b] minus the open `exclude` intervals; `measure` is its declared
// Lebesgue measure (a lower bound is enough to decide positivity).
struct ZeroSetEntry {
    double a = 0.0, b = 0.0;
    std::vector<std::pair<double, double>> exclude;
    double measure = 0.0;
    bool is_point() const { return a == b; }
    bool contains(double u) const;
};

struct DiffusionSpec {
    std::string model_id = "model";
    StateInterval J;
    std::optional<Expr> scale;          // s on J
    std::optional<Expr> inverse_scale;  // q on s(J)
    std::optional<MeasureSpec> speed;          // m on J
    std::optional<MeasureSpec> speed_natural;  // m^U on s(J)
    double x0 = 0.0;
    double r = 0.0;
    double T = 1.0;
    std::vector<Kink> kinks;  // kinks of q, natural-scale coordinates
    std::vector<ZeroSetEntry> qprime_zero_set;
    std::vector<LocalBehavior> phi_behaviors;
    std::optional<BoundaryKind> left_declared, right_declared;
    std::optional<ScSpec> qpp_sc;  // declared singular-continuous part of q''
    std::string impr_tag;
};

struct NaturalScaleView {
    Interval sJ;
    SmoothPiece1D s;
    SmoothPiece1D q;
    DecomposedMeasure qpp;
    DecomposedMeasure mU;
    Fn phi;
    Fn gamma;
    std::vector<double> special;  // points in sJ needing care
    std::vector<ZeroSetEntry> zero_set;
    BoundaryBehavior left, right;
    double u0 = 0.0;
    double r = 0.0;

    bool in_zero_set(double u) const;
    const BoundaryBehavior& boundary(Endpoint e) const { return e == Endpoint::Left ? left : right; }
    // Collar of length min(1, |sJ|/4) adjacent to the boundary image.
    Interval collar(Endpoint e) const;
    // Finite range used for compact-exhaustion sampling of the interior.
    Interval exhaustion_range() const;
};

NaturalScaleView derive_natural_scale(const DiffusionSpec& spec);

BoundaryBehavior classify_boundary(const DiffusionSpec& spec, const NaturalScaleView& view, Endpoint e);

struct AssumptionReport {
    bool pass = true;
    std::vector<std::string> notes;
};

AssumptionReport check_semimartingale_assumption(const NaturalScaleView& view, const DiffusionSpec& spec);

struct BoundaryTerm {
    Endpoint side;
    double image;
    double local_time_coefficient;  // +q'_+/2 on the left, -q'_-/2 on the right
    double time_coefficient;        // -r b m^U({s(b)})
    double net() const { return local_time_coefficient + time_coefficient; }
};

struct DecompositionFields {
    Fn qv_factor;
    DecomposedMeasure drift_measure;
    std::vector<BoundaryTerm> boundary_terms;
};

DecompositionFields semimartingale_decomposition_fields(const NaturalScaleView& view, const DiffusionSpec& spec);

const char* to_string(BoundaryKind k);

}  // namespace gdarb
