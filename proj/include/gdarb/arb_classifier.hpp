#pragma once

#include "gdarb/diffusion_model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gdarb {

enum class Tri { Holds, Fails, Inconclusive };

// Conjunction: any failure wins, then any inconclusive.
Tri tri_and(Tri a, Tri b);

struct ConditionReport {
    std::string id;  // NIP.i.a, NIP.i.b, NIP.ii, NIP.iii, NSA.iv.loc, NSA.iv.refl, NUPBR.v, RP
    Tri status = Tri::Holds;
    std::optional<double> residual;
    std::string note;
};

struct ImprDescription {
    std::string tag;  // closed form, when known
    std::vector<std::pair<double, double>> table;  // (u, gamma(u)) samples
};

struct Verdict {
    std::string model_id;
    double r = 0.0;
    Tri nip = Tri::Holds, nsa = Tri::Holds, nupbr = Tri::Holds, rp = Tri::Holds;
    std::vector<ConditionReport> reports;
    std::optional<ImprDescription> impr;
};

struct Tolerances {
    double equality_rel = 1e-9;
    double location = 1e-12;
    int zero_set_samples = 10000;
    int sc_samples = 512;
    int generic_windows = 32;
    NumericOptions numeric;
};

struct CheckResult {
    Tri status = Tri::Holds;
    std::vector<ConditionReport> reports;
};

CheckResult check_nip(const NaturalScaleView& view, const DiffusionSpec& spec, const Tolerances& tol = {});
// Shortcut valid for r = 0 only.
CheckResult check_nip_zero_rate(const NaturalScaleView& view, const DiffusionSpec& spec, const Tolerances& tol = {});
CheckResult check_nsa(const NaturalScaleView& view, const DiffusionSpec& spec, const Tolerances& tol = {});
CheckResult check_nupbr(const NaturalScaleView& view, const DiffusionSpec& spec, const Tolerances& tol = {});
CheckResult check_rp(const NaturalScaleView& view);

Verdict classify(const DiffusionSpec& spec, const Tolerances& tol = {});

// "holds"/"fails"/"inconclusive" for notions, "pass"/"fail"/"inconclusive" for conditions.
const char* verdict_string(Tri t);
const char* condition_string(Tri t);

}  // namespace gdarb
