#pragma once

#include <cstddef>
#include <vector>

#include "storesim/distribution.hpp"
#include "storesim/model.hpp"
#include "storesim/policies.hpp"

namespace storesim {

// Objective rho1 * generation + rho2 * loss indicator.
struct CostWeights {
    double rho1 = 1.0;
    double rho2 = 0.0;
};

struct DisturbancePoint {
    double value = 0.0;
    double prob = 0.0;
};

struct Grid {
    std::size_t n_s = 0;
    std::size_t n_d = 0;
    std::vector<double> s_values;            // uniform on [0, s_max]
    std::vector<DisturbancePoint> d_values;  // equal-probability bins at conditional means
};

// Uniform storage grid and quantile-binned disturbance grid.
Grid make_grid(const SystemParams& p, const Distribution& dist, std::size_t n_s = 401,
               std::size_t n_d = 1001);

// Throws InvalidGrid.
void validate_grid(const SystemParams& p, const Grid& grid);

struct DpOptions {
    double tol = 1e-9;
    long max_iter = 100000;
    std::vector<double> initial_v;  // empty: zeros
    unsigned threads = 1;
    // Checked after every sweep; NoConvergence is not affected.
    bool check_monotone = false;
};

struct DpSolution {
    double eta = 0.0;            // average cost per slot
    std::vector<double> v;       // relative value on the storage grid, v[0] = 0
    std::vector<Decision> policy;  // row-major [state][disturbance]
    std::vector<double> next_s;    // same layout
    std::vector<bool> forced;      // loss-of-load cells
    long iterations = 0;
    double span_residual = 0.0;
    bool monotone = true;  // v nonincreasing at every checked sweep
    SystemParams params;

    std::size_t n_d = 0;
    const Decision& decision(std::size_t i, std::size_t j) const { return policy[i * n_d + j]; }
};

// Relative value iteration for the long-run average of the weighted cost.
// Actions are the next storage level; generation is the least the balance
// allows. Throws NoConvergence and InvalidGrid.
DpSolution value_iteration(const SystemParams& p, const Distribution& dist,
                           const CostWeights& w, const Grid& grid,
                           const DpOptions& opts = {});

struct ThresholdFit {
    ThresholdPair thresholds;
    bool is_two_threshold = false;
    double max_deviation = 0.0;   // MW of next-state mismatch over non-forced cells
    double mean_deviation = 0.0;
};

// Nearest two-threshold policy to a numeric policy table.
ThresholdFit extract_thresholds(const DpSolution& sol, const Grid& grid);

// Derivative of the one-slot cost-to-go (greedy second slot) in the storage level.
double two_slot_value_slope(const SystemParams& p, const Distribution& dist,
                            const CostWeights& w, double s2);

// One-slot cost-to-go under the greedy second slot, by quadrature.
double two_slot_value(const SystemParams& p, const Distribution& dist, const CostWeights& w,
                      double s2);

// Optimal first-slot thresholds of the two-slot problem. Requires a density
// nondecreasing on (-inf, 0] (HypothesisViolated otherwise).
ThresholdPair two_slot_thresholds(const SystemParams& p, const Distribution& dist,
                                  const CostWeights& w);

}  // namespace storesim
