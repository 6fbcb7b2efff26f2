#pragma once

#include "gdarb/diffusion_model.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gdarb {

// Philox4x32-10 block function: counter and key to four output words.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key);

// Philox4x32-10 counter-based generator; one stream per (seed, path index).
class Philox {
public:
    Philox(std::uint64_t seed, std::uint64_t stream);
    // Two independent uniforms in (0, 1) per call.
    std::array<double, 2> next_pair();

private:
    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> ctr_;
};

enum class StateRule { Interior, Absorb, ReflectUp, ReflectDown, Exit };

struct ChainModel {
    std::vector<double> u;          // grid in natural-scale coordinates
    std::vector<double> up_prob;
    std::vector<double> mean_hold;  // expected holding time; +inf for absorbing states
    std::vector<double> cell_mass;  // m^U of the cell around u_i (infinite atoms excluded)
    std::vector<double> du;         // cell width used in Riemann sums
    std::vector<StateRule> rule;
    std::vector<double> q;          // q(u_i)
    std::vector<double> phi;        // phi(u_i)
    // Expected e^{-r tau} q(next) - q(u_i) over one visit with the singular
    // parts of q'' and m^U at u_i removed; NaN off the interior.
    std::vector<double> ac_drift;
    std::size_t start = 0;
    double T = 1.0;
    double r = 0.0;
    double truncation_exit_bound = 0.0;  // Gaussian bound on the exit probability

    std::size_t size() const { return u.size(); }
    std::size_t nearest(double x) const;
    // Largest spacing of the grid.
    double max_spacing() const;
};

// N >= 16 target cells; `hints` are extra natural-scale points forced onto the grid.
ChainModel build_chain(const NaturalScaleView& view, const DiffusionSpec& spec, int N,
                       const std::vector<double>& hints = {});

struct Strategy {
    enum class Kind { BoundarySit, PostHittingHold, Custom } kind = Kind::BoundarySit;
    double level = 0.0;                             // natural-scale level for PostHittingHold
    std::vector<std::pair<double, double>> table;   // (u, H) step table for Custom; H of the last entry at or below u, 0 below the first
    std::string name;
};

// What the sampler records per path besides occupation.
struct SampleRequest {
    std::vector<std::size_t> watch_states;  // per-path occupation kept for these
    std::vector<Strategy> strategies;
    bool tradeoff = true;                   // accumulate K per path
    bool half_local_time = false;           // U - U_0 -/+ L/2 at reflecting boundaries
    std::vector<std::size_t> drift_states;  // per-visit drift residuals and holding times
    bool keep_terminal = true;
};

struct PathRecord {
    std::size_t terminal = 0;
    bool absorbed = false;
    double absorption_time = 0.0;
    double occupied = 0.0;         // total occupation recorded
    double K = 0.0;                // sum phi^2 occ du / cell_mass
    double D = 0.0;                // U_T - U_0 - L/2 (left) + L/2 (right)
    std::vector<double> watch_occ;
    std::vector<double> payoff;    // one per strategy
    std::vector<double> hit_time;  // per strategy (PostHittingHold), -1 if never
};

struct DriftStats {
    std::size_t state = 0;
    std::size_t visits = 0;
    double sum = 0.0, sum_sq = 0.0;            // drift residuals
    double hold_sum = 0.0, hold_sum_sq = 0.0;  // drawn holding times
};

struct SampleSet {
    std::uint64_t seed = 0;
    std::size_t requested = 0;
    std::size_t discarded = 0;
    std::vector<PathRecord> paths;  // kept paths only, in path-index order
    std::vector<double> occupation; // summed over kept paths
    std::vector<DriftStats> drift;
    std::size_t steps = 0;
};

SampleSet sample_paths(const ChainModel& chain, std::size_t n_paths, std::uint64_t seed, const SampleRequest& req = {});

struct Estimate {
    double value = 0.0;
    double se = 0.0;
};

// Mean local time per state, L = occupation / cell_mass (zero-mass cells throw).
std::vector<double> estimate_local_time_field(const SampleSet& s, const ChainModel& chain);
// Local time at one state with a standard error from the per-path values (state must be watched).
Estimate estimate_local_time_at(const SampleSet& s, const ChainModel& chain, std::size_t state);

struct TradeoffEstimate {
    std::vector<int> grid_sizes;
    std::vector<Estimate> K;        // mean per level
    std::vector<double> ratios;     // K[l+1] / K[l]
    bool divergent = false;
};

TradeoffEstimate estimate_tradeoff(const NaturalScaleView& view, const DiffusionSpec& spec, int N, int levels,
                                   std::size_t n_paths, std::uint64_t seed);

struct StrategyResult {
    std::string name;
    std::vector<double> payoffs;
    Estimate mean;
    double min_payoff = 0.0;
    double frac_positive = 0.0;
    double wilson_lo = 0.0, wilson_hi = 0.0;
    std::size_t triggered = 0;
};

// Strategy index refers to SampleRequest::strategies used when sampling.
StrategyResult run_strategy(const SampleSet& s, std::size_t strategy_index, const std::string& name);

std::pair<double, double> wilson_interval(std::size_t successes, std::size_t n, double z = 1.96);

struct MartingaleDiagnostic {
    std::string target;
    Estimate mean;
    double t_stat = 0.0;
    std::size_t samples = 0;
};

enum class MartingaleTarget { UMinusHalfL, DiscountedPriceDrift };

MartingaleDiagnostic martingale_diagnostic(const SampleSet& s, const ChainModel& chain, MartingaleTarget target);

struct PathRow {
    double terminal_u = 0.0, terminal_x = 0.0;
    bool absorbed = false;
    double K = 0.0, D = 0.0;
    std::vector<double> payoff;  // in strategy order
};

struct SimulationReport {
    std::uint64_t seed = 0;
    int N = 0;
    std::size_t n_paths = 0;
    std::size_t discarded_paths = 0;
    std::vector<std::pair<std::string, Estimate>> estimates;
    std::vector<std::pair<std::string, bool>> flags;
    std::vector<std::pair<std::string, std::string>> notes;
    TradeoffEstimate tradeoff;
    std::vector<StrategyResult> strategies;
    std::vector<PathRow> paths;  // filled only when SimulationConfig::keep_paths
};

struct SimulationConfig {
    int N = 512;
    std::size_t n_paths = 10000;
    int levels = 3;
    std::uint64_t seed = 42;
    std::size_t tradeoff_paths = 0;  // 0 means min(n_paths, 2000)
    bool keep_paths = false;
};

SimulationReport simulate(const DiffusionSpec& spec, const SimulationConfig& cfg);

}  // namespace gdarb
