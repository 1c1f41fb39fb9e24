#pragma once

#include <vector>

#include "storesim/distribution.hpp"
#include "storesim/model.hpp"

// Closed-form results for the greedy policy under a zero-mean Laplace
// disturbance, plus asymptotic and rate-exponent helpers.
//
// Unless noted, functions require unconstrained rates (InvalidRegime) and a
// zero-location Laplace model (UnsupportedModel). g_max and s_max may be
// unbounded; the formulas are evaluated in their limits.

namespace storesim {

struct RateBounds {
    double gamma_min = 0.0;  // 1/MW
    double gamma_max = 0.0;  // 1/MW
    double lambda0 = 0.0;    // decay rate of the suboptimal policy's storage tail
};

// Minimum long-run average generation.
double jg_closed_form(const SystemParams& p, const LaplaceModel& lap);

// |d jg / d s_max| at p.s_max.
double jg_derivative_smax(const SystemParams& p, const LaplaceModel& lap);

// Storage capacity achieving the given fraction of the largest possible reduction
// jg(0) - jg(inf). Fraction in [0, 1).
double smax_for_reduction_fraction(const SystemParams& p, const LaplaceModel& lap,
                                   double fraction);

// Smallest storage capacity with jg <= target. Throws TargetInfeasible when the
// target is at or below the unbounded-storage limit.
double smax_for_jg_target(const SystemParams& p, const LaplaceModel& lap, double target);

// Stationary cdf of stored power, atoms at 0 and s_max included.
double stationary_storage_cdf(const SystemParams& p, const LaplaceModel& lap, double s);

// Left limit P(S < s) of the same law.
double stationary_storage_cdf_left(const SystemParams& p, const LaplaceModel& lap, double s);

// Stationary cdf of generation, atoms at 0 and g_max included.
double stationary_generation_cdf(const SystemParams& p, const LaplaceModel& lap, double g);
double stationary_generation_cdf_left(const SystemParams& p, const LaplaceModel& lap, double g);

double lolp_under_min_generation(const SystemParams& p, const LaplaceModel& lap);

// (E[X^-] - alpha E[X^+])^+ for unbounded g_max and s_max; any distribution.
double jg_asymptotic(const Distribution& dist, double alpha);

// Throws ConditionViolated when alpha <= exp(-lambda g_max).
RateBounds lolp_rate_bounds(const SystemParams& p, const LaplaceModel& lap);

// Stationary storage cdf of the suboptimal loss-of-load policy (finite s_max).
double suboptimal_storage_cdf(const SystemParams& p, const LaplaceModel& lap, double s);

// Long-run loss-of-load probability of the suboptimal policy; an upper bound for
// the optimal one.
double suboptimal_lolp(const SystemParams& p, const LaplaceModel& lap);

// Tail and positivity conditions under which unbounded storage drives the
// loss-of-load probability to zero.
struct AsympConditions {
    bool tail = false;
    bool positive = false;
    bool holds() const { return tail && positive; }
};
AsympConditions lolp_asymp_conditions(const Distribution& dist, const SystemParams& p);
bool check_lolp_asymp_conditions(const Distribution& dist, const SystemParams& p);

// Average-cost optimality witness (eta, v) for the greedy policy. Requires
// alpha < 1 and finite s_max.
struct AcoeWitness {
    double eta = 0.0;
    double slope = 0.0;    // coefficient of the linear part of v
    double scale = 0.0;    // coefficient of the exponential part
    double theta = 0.0;
    double s_max = 0.0;

    double v(double s) const;
};
AcoeWitness acoe_witness(const SystemParams& p, const LaplaceModel& lap);

// max over s_grid of |eta + v(s) - E[g + v(next_s)]|, by quadrature.
double acoe_residual(const SystemParams& p, const LaplaceModel& lap,
                     const std::vector<double>& s_grid);

}  // namespace storesim
