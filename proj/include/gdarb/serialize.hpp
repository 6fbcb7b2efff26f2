#pragma once

// JSON forms of expressions, measures, model specs, verdicts and simulation
// reports, plus the CSV emitters used by the CLI. Field names are listed in
// docs/model_spec_schema.md.

#include "gdarb/arb_classifier.hpp"
#include "gdarb/mc_engine.hpp"
#include "gdarb/model_catalog.hpp"

#include <string>

namespace gdarb {

// Parse errors name the offending field path, e.g. "speed.atoms[1]".
Expr parse_expr(const std::string& json_text);
std::string expr_to_json(const Expr& e);

MeasureSpec parse_measure(const std::string& json_text);
std::string measure_to_json(const MeasureSpec& m);

// Accepts a full spec document or {"catalog": name, "params": {...}}.
// Unknown fields are rejected.
DiffusionSpec parse_model_spec(const std::string& json_text);
std::string model_spec_to_json(const DiffusionSpec& spec);

// Catalog model id with non-default parameters appended, e.g. "bm(r=0.2)".
std::string catalog_model_id(const std::string& name, const Params& given);
DiffusionSpec build_catalog_model(const std::string& name, const Params& given);

// "k=v,k=v" into a parameter map; throws Parse on malformed pairs.
Params parse_param_list(const std::string& text);

// Keys: equality_rel, location, zero_set_samples, sc_samples, generic_windows,
// rel_tol, abs_tol, levels, divergence_ratio, tail_rel.
void apply_tolerance(Tolerances& tol, const std::string& key, const std::string& value);

// Stable key order: model_id, r, nip, nsa, nupbr, rp, reports, impr.
std::string verdict_to_json(const Verdict& v);

std::string simulation_report_to_json(const std::string& model_id, const SimulationReport& rep);
std::string k_ladder_csv(const TradeoffEstimate& t);
// 40 equal-width bins per strategy between its smallest and largest payoff.
std::string payoff_histogram_csv(const SimulationReport& rep, int bins = 40);
std::string paths_csv(const SimulationReport& rep);

std::string catalog_list_json();
std::string catalog_entry_json(const std::string& name);
std::string expected_verdict_json(const std::string& name, const Params& given);

}  // namespace gdarb
