#include "storesim/analytics.hpp"

#include <algorithm>
#include <cmath>

#include "storesim/errors.hpp"
#include "storesim/policies.hpp"
#include "storesim/quadrature.hpp"

namespace storesim {

namespace {

// Shared quantities of the closed forms. eps = 1 - alpha, theta = eps*u is the
// decay rate of the storage law, and r = (1 - alpha)/(1 - alpha exp(-theta s_max))
// is evaluated so that alpha -> 1 and s_max -> inf stay finite.
struct Shape {
    double lambda;
    double alpha;
    double eps;
    double u;
    double theta;
    double gen_tail;  // exp(-lambda g_max)
    double r;
};

// (1 - exp(-eps*x))/eps, continuous at eps = 0.
double damped(double eps, double x) {
    if (eps == 0.0) return x;
    return -std::expm1(-eps * x) / eps;
}

// log1p(eps*y)/eps, continuous at eps = 0.
double log1p_over(double eps, double y) {
    if (eps == 0.0) return y;
    return std::log1p(eps * y) / eps;
}

void require_zero_mean(const LaplaceModel& lap) {
    if (lap.mu() != 0.0)
        throw UnsupportedModel("closed form requires a zero-location Laplace model");
}

void require_rates(const SystemParams& p) {
    if (!p.is_unconstrained_rates())
        throw InvalidRegime("closed form requires eta_c*c_max = d_max/eta_d = s_max");
}

Shape shape(const SystemParams& p, const LaplaceModel& lap) {
    require_zero_mean(lap);
    require_rates(p);
    Shape sh{};
    sh.lambda = lap.lambda();
    sh.alpha = p.alpha();
    sh.eps = 1.0 - sh.alpha;
    sh.u = sh.lambda / (2.0 * p.eta_c);
    sh.theta = sh.eps * sh.u;
    sh.gen_tail = p.g_max.is_unbounded() ? 0.0 : std::exp(-sh.lambda * p.g_max.value());
    if (p.s_max.is_unbounded()) {
        sh.r = sh.eps;
    } else {
        double smax = p.s_max.value();
        sh.r = 1.0 / (damped(sh.eps, sh.u * smax) + std::exp(-sh.theta * smax));
    }
    return sh;
}

}  // namespace

double jg_closed_form(const SystemParams& p, const LaplaceModel& lap) {
    Shape sh = shape(p, lap);
    return (1.0 - sh.gen_tail) / (2.0 * sh.lambda) * sh.r;
}

double jg_derivative_smax(const SystemParams& p, const LaplaceModel& lap) {
    Shape sh = shape(p, lap);
    if (p.s_max.is_unbounded()) return 0.0;
    double decay = std::exp(-sh.theta * p.s_max.value());
    return p.eta_d * (1.0 - sh.gen_tail) * sh.r * sh.r * decay / 4.0;
}

double smax_for_reduction_fraction(const SystemParams& p, const LaplaceModel& lap,
                                   double fraction) {
    Shape sh = shape(p, lap);
    if (!(fraction >= 0.0 && fraction < 1.0))
        throw InvalidArgument("reduction fraction must lie in [0, 1)");
    return log1p_over(sh.eps, fraction / (1.0 - fraction)) / sh.u;
}

double smax_for_jg_target(const SystemParams& p, const LaplaceModel& lap, double target) {
    Shape sh = shape(p, lap);
    double k = (1.0 - sh.gen_tail) / (2.0 * sh.lambda);  // jg with no storage
    double floor = sh.eps * k;                            // jg with unbounded storage
    if (target >= k) return 0.0;
    if (!(target > floor))
        throw TargetInfeasible("jg target " + std::to_string(target) +
                               " is not above the unbounded-storage limit " +
                               std::to_string(floor));
    double y = (k - target) / (target - floor);
    return log1p_over(sh.eps, y) / sh.u;
}

double stationary_storage_cdf(const SystemParams& p, const LaplaceModel& lap, double s) {
    Shape sh = shape(p, lap);
    if (s < 0.0) return 0.0;
    if (s >= p.s_max.value()) return 1.0;
    // (1 - (1+alpha)/2 exp(-theta s)) / (1 - alpha exp(-theta s_max)), rewritten
    // through r so the alpha = 1 limit is exact.
    double tail = std::exp(-sh.theta * s);
    return sh.r * (damped(sh.eps, sh.u * s) + 0.5 * tail);
}

double stationary_storage_cdf_left(const SystemParams& p, const LaplaceModel& lap, double s) {
    Shape sh = shape(p, lap);
    if (s <= 0.0) return 0.0;
    if (s > p.s_max.value()) return 1.0;
    return sh.r * (damped(sh.eps, sh.u * s) + 0.5 * std::exp(-sh.theta * s));
}

double stationary_generation_cdf(const SystemParams& p, const LaplaceModel& lap, double g) {
    Shape sh = shape(p, lap);
    if (g < 0.0) return 0.0;
    if (g >= p.g_max.value()) return 1.0;
    return 1.0 - 0.5 * sh.r * std::exp(-sh.lambda * g);
}

double stationary_generation_cdf_left(const SystemParams& p, const LaplaceModel& lap,
                                      double g) {
    Shape sh = shape(p, lap);
    if (g <= 0.0) return 0.0;
    if (g > p.g_max.value()) return 1.0;
    return 1.0 - 0.5 * sh.r * std::exp(-sh.lambda * g);
}

double lolp_under_min_generation(const SystemParams& p, const LaplaceModel& lap) {
    Shape sh = shape(p, lap);
    return 0.5 * sh.gen_tail * sh.r;
}

double jg_asymptotic(const Distribution& dist, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("alpha must lie in [0, 1]");
    return std::max(dist.expected_negative() - alpha * dist.expected_positive(), 0.0);
}

RateBounds lolp_rate_bounds(const SystemParams& p, const LaplaceModel& lap) {
    require_zero_mean(lap);
    require_rates(p);
    double lambda = lap.lambda();
    double e = p.g_max.is_unbounded() ? 0.0 : std::exp(-lambda * p.g_max.value());
    double alpha = p.alpha();
    if (!(alpha > e))
        throw ConditionViolated("rate bounds require alpha > exp(-lambda g_max)");
    RateBounds rb;
    rb.lambda0 = lambda * (alpha - e) / (p.eta_c * (1.0 + e));
    rb.gamma_min = -p.eta_d * lambda;
    rb.gamma_max = -rb.lambda0;
    return rb;
}

double suboptimal_storage_cdf(const SystemParams& p, const LaplaceModel& lap, double s) {
    RateBounds rb = lolp_rate_bounds(p, lap);
    if (p.s_max.is_unbounded())
        throw UnsupportedModel("suboptimal-policy storage law needs finite s_max");
    double smax = p.s_max.value();
    if (s < 0.0) return 0.0;
    if (s >= smax) return 1.0;
    double e = p.g_max.is_unbounded() ? 0.0 : std::exp(-lap.lambda() * p.g_max.value());
    double alpha = p.alpha();
    double l0 = rb.lambda0;
    return e / (alpha * std::exp(l0 * smax) - e) *
           (-1.0 + (1.0 + alpha) / (1.0 + e) * std::exp(l0 * s));
}

double suboptimal_lolp(const SystemParams& p, const LaplaceModel& lap) {
    RateBounds rb = lolp_rate_bounds(p, lap);
    if (p.s_max.is_unbounded())
        throw UnsupportedModel("suboptimal-policy loss probability needs finite s_max");
    double e = p.g_max.is_unbounded() ? 0.0 : std::exp(-lap.lambda() * p.g_max.value());
    double alpha = p.alpha();
    return 0.5 * e * (alpha - e) / (alpha * std::exp(rb.lambda0 * p.s_max.value()) - e);
}

AsympConditions lolp_asymp_conditions(const Distribution& dist, const SystemParams& p) {
    AsympConditions out;

    // x F(-x) on a geometric grid reaching far into the left tail; a bounded
    // sequence does not grow between the middle and the end of the grid.
    double scale = std::max(dist.stddev(), 1e-12);
    constexpr int kPoints = 48;
    double mid = 0.0;
    double last = 0.0;
    for (int k = 0; k < kPoints; ++k) {
        double x = scale * std::ldexp(1.0, k);
        double val = x * dist.cdf(-x);
        if (k == kPoints / 2) mid = val;
        last = val;
    }
    out.tail = std::isfinite(last) && last <= 2.0 * mid + 1e-300;

    double alpha = p.alpha();
    if (p.g_max.is_unbounded()) {
        out.positive = alpha > 0.0;
    } else {
        double g = p.g_max.value();
        out.positive = alpha * dist.expected_positive(g) - dist.expected_negative(g) > 0.0;
    }
    return out;
}

bool check_lolp_asymp_conditions(const Distribution& dist, const SystemParams& p) {
    return lolp_asymp_conditions(dist, p).holds();
}

double AcoeWitness::v(double s) const {
    return slope * s + scale * std::exp(-theta * (s_max - s));
}

AcoeWitness acoe_witness(const SystemParams& p, const LaplaceModel& lap) {
    Shape sh = shape(p, lap);
    if (p.s_max.is_unbounded())
        throw UnsupportedModel("optimality witness needs finite s_max");
    if (!(sh.alpha < 1.0)) throw UnsupportedModel("optimality witness needs alpha < 1");
    double smax = p.s_max.value();
    double denom = 1.0 - sh.alpha * std::exp(-sh.theta * smax);
    double gen = 1.0 - sh.gen_tail;

    AcoeWitness w;
    w.eta = jg_closed_form(p, lap);
    w.slope = -p.eta_d * gen / denom;
    w.scale = (1.0 / sh.lambda) * ((1.0 + sh.alpha) / (1.0 - sh.alpha)) * (sh.alpha / denom) * gen;
    w.theta = sh.theta;
    w.s_max = smax;
    return w;
}

double acoe_residual(const SystemParams& p, const LaplaceModel& lap,
                     const std::vector<double>& s_grid) {
    AcoeWitness w = acoe_witness(p, lap);
    double G = p.g_max.value();
    double ec = p.eta_c;
    double ed = p.eta_d;
    double smax = p.s_max.value();

    double worst = 0.0;
    for (double s : s_grid) {
        auto integrand = [&](double delta) {
            Decision dec = decide_min_generation(p, s, delta);
            double next = s + ec * dec.c - dec.d / ed;
            return lap.pdf(delta) * (dec.g + w.v(next));
        };
        std::vector<double> cuts{(smax - s) / ec, 0.0, -ed * s, -G - ed * s};
        double expected = integrate(integrand, -INFINITY, INFINITY, cuts);
        worst = std::max(worst, std::abs(w.eta + w.v(s) - expected));
    }
    return worst;
}

}  // namespace storesim
