#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "storesim/distribution.hpp"
#include "storesim/model.hpp"
#include "storesim/policies.hpp"

namespace storesim {

struct SyntheticOrigin {
    std::uint64_t seed = 0;
    std::string model;
};
struct FileOrigin {
    std::string path;
};

struct Trace {
    std::vector<double> deltas;
    std::variant<SyntheticOrigin, FileOrigin> origin;
};

struct CostReport {
    double j_g = 0.0;
    double j_l_event = 0.0;
    std::optional<double> j_l_smoothed;  // present when a smoothing law was supplied
    std::size_t n = 0;
    double curtailed_avg = 0.0;
    double final_s = 0.0;

    friend bool operator==(const CostReport&, const CostReport&) = default;
};

// Called once per slot with the state at the start of the slot.
using SlotObserver =
    std::function<void(std::size_t slot, double s, double delta, const SlotOutcome& out)>;

struct RunOptions {
    const Distribution* smoothing = nullptr;  // law used for the smoothed loss estimate
    std::size_t burn_in = 0;                  // leading slots excluded from averages
    SlotObserver observer;
};

CostReport run_trace(const SystemParams& p, const PolicyKind& policy, const Trace& trace,
                     double s1, const RunOptions& opts = {});

// Inverse-cdf sampling; deterministic in (seed, stream).
Trace sample_iid(const Distribution& dist, std::size_t n, std::uint64_t seed,
                 std::uint64_t stream = 0);

// Burn-in rule: 1% of n, at least 10^4 slots, never all of n.
std::size_t default_burn_in(std::size_t n);

struct Histogram {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<double> density;  // per-bin density over the interior samples
};

struct StationarySample {
    std::vector<double> storage;     // sorted
    std::vector<double> generation;  // sorted
    double storage_atom_empty = 0.0;
    double storage_atom_full = 0.0;
    double generation_atom_zero = 0.0;
    double generation_atom_full = 0.0;
    Histogram storage_hist;
    Histogram generation_hist;
};

StationarySample stationary_histogram(const SystemParams& p, const PolicyKind& policy,
                                      const Distribution& dist, std::size_t n,
                                      std::size_t burn_in, std::uint64_t seed,
                                      std::size_t bins = 50);

// Same, driven by an explicit trace.
StationarySample stationary_histogram(const SystemParams& p, const PolicyKind& policy,
                                      const Trace& trace, double s1, std::size_t burn_in,
                                      std::size_t bins = 50);

struct SweepMetadata {
    std::string policy;
    std::string model;
    std::uint64_t seed = 0;
    std::size_t n = 0;
    SystemParams base;
};

struct SweepResult {
    std::string axis;
    std::vector<double> axis_values;
    std::vector<CostReport> reports;
    std::vector<ThresholdPair> thresholds;  // per point; empty for threshold-free policies
    SweepMetadata meta;
};

struct SweepOptions {
    // Two-threshold sweeps: thresholds as fractions of each point's s_max.
    ThresholdPair threshold_fractions{0.0, 0.0};
    double s1_fraction = 0.0;  // initial storage as a fraction of s_max
    std::optional<std::size_t> burn_in;
    bool smoothing = true;
    unsigned threads = 0;  // 0: hardware concurrency
};

// One report per storage capacity, all on the same sampled trace.
SweepResult sweep_capacity(const SystemParams& base, const PolicyKind& policy,
                           const Distribution& dist, const std::vector<double>& smax_values,
                           std::size_t n, std::uint64_t seed, const SweepOptions& opts = {});

struct ParetoPoint {
    ThresholdPair thresholds;
    CostReport report;
};

struct ParetoResult {
    std::vector<ParetoPoint> points;    // every evaluated threshold pair, in grid order
    std::vector<std::size_t> frontier;  // indices into points, by increasing j_g
    SweepMetadata meta;
};

// All pairs (s_c, s_d) with 0 <= s_c <= s_d <= s_max on a uniform grid.
std::vector<ThresholdPair> threshold_grid(double s_max, double step);

ParetoResult pareto_two_threshold(const SystemParams& p, const Distribution& dist,
                                  const std::vector<ThresholdPair>& grid, std::size_t n,
                                  std::uint64_t seed, unsigned threads = 0);

// Indices of points not dominated in (j_g, j_l_smoothed), sorted by j_g.
std::vector<std::size_t> nondominated(const std::vector<ParetoPoint>& points);

struct PlanConfig {
    double eta_c = 1.0;
    double eta_d = 1.0;
    std::size_t n = 200000;
    std::uint64_t seed = 1;
    std::optional<std::size_t> burn_in;
    double smax_hi = 400.0;    // upper end of the storage search
    double smax_tol = 1.0;     // bisection tolerance on s_max
    double sd_tol = 0.5;       // bisection tolerance on the discharging threshold
    std::vector<double> sc_fractions{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
    unsigned threads = 0;
};

struct PlanPoint {
    double g_max = 0.0;
    bool feasible = false;
    double s_max = 0.0;  // minimal storage meeting both targets (when feasible)
    ThresholdPair thresholds;
    CostReport report;
    std::string note;  // reason when infeasible
};

struct PlanResult {
    std::vector<PlanPoint> points;
    double jg_target = 0.0;
    double jl_target = 0.0;
    PlanConfig config;
};

// For each generator capacity, the least storage for which some two-threshold
// policy meets both targets. Infeasible points are reported, not thrown.
PlanResult plan_curve(const Distribution& dist, double jg_target, double jl_target,
                      const std::vector<double>& gmax_values, const PlanConfig& cfg);

// Runs body(i) for i in [0, count) on up to `threads` workers. Exceptions are
// rethrown in index order after all workers finish.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body);

unsigned resolve_threads(unsigned requested);

}  // namespace storesim
