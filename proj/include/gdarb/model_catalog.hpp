#pragma once

#include "gdarb/arb_classifier.hpp"
#include "gdarb/diffusion_model.hpp"

#include <map>
#include <string>
#include <vector>

namespace gdarb {

// Parameter values are kept as text so equality predicates can use exact
// rational arithmetic ("3/4", "0.9", "1e-3", "inf").
using Params = std::map<std::string, std::string>;

struct ParamSpec {
    std::string name;
    std::string description;
    double lo = -kInfinity, hi = kInfinity;
    bool lo_open = false, hi_open = false;
    bool allow_inf = false;
    std::string default_value;
};

struct ExpectedVerdict {
    Tri nip = Tri::Holds, nsa = Tri::Holds, nupbr = Tri::Holds, rp = Tri::Holds;
    std::string citation;
};

struct CatalogEntry {
    std::string name;
    std::string description;
    std::vector<ParamSpec> params;
    std::string expected_rule;  // human-readable predicate
    std::string citation;
};

const std::vector<CatalogEntry>& catalog_entries();
const CatalogEntry& catalog_entry(const std::string& name);

// Defaults filled in, ranges checked.
Params resolve_params(const std::string& name, const Params& given);

DiffusionSpec build_model(const std::string& name, const Params& params);
ExpectedVerdict expected_verdict(const std::string& name, const Params& params);

// Parse "a", "a/b" or "inf"; throws Parse on malformed input.
double param_to_double(const std::string& text);

// Removed intervals of the fat Cantor construction: rationals in [0, 1] with
// denominator up to `generation`, ordered by (denominator, numerator), the
// n-th (1-based) widened by a * 2^(-n-2) on each side; overlaps merged.
struct FatCantorGaps {
    double f_lo = 0.0, f_hi = 1.0;                // extreme points of F
    std::vector<std::pair<double, double>> gaps;  // components inside (f_lo, f_hi)
};
FatCantorGaps fat_cantor_gaps(double a, int generation);

}  // namespace gdarb
