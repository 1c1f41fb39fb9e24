#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "storesim/analytics.hpp"
#include "storesim/errors.hpp"
#include "storesim/quadrature.hpp"

using namespace storesim;

namespace {

const LaplaceModel kLap(0.0, 13.99);

SystemParams sys(double gmax, double smax, double alpha) {
    double e = std::sqrt(alpha);
    Capacity g = std::isinf(gmax) ? Capacity::unbounded() : Capacity::mw(gmax);
    Capacity s = std::isinf(smax) ? Capacity::unbounded() : Capacity::mw(smax);
    return SystemParams::unconstrained(g, s, e, e);
}

SystemParams sys_eta(double gmax, double smax, double ec, double ed) {
    return SystemParams::unconstrained(Capacity::mw(gmax), Capacity::mw(smax), ec, ed);
}

}  // namespace

// Reference values below come from tests/oracles/derive.py (direct integration
// and a numerically solved storage chain), independent of the closed forms.

TEST(JgClosedForm, NoStorageMatchesDirectIntegral) {
    EXPECT_NEAR(jg_closed_form(sys(160, 0, 0.6), kLap), 6.9949245126088909, 1e-12 * 7);
}

TEST(JgClosedForm, MatchesStorageChainOracle) {
    EXPECT_NEAR(jg_closed_form(sys(160, 50, 0.6), kLap), 3.674016336, 3.674 * 1e-5);
}

TEST(JgClosedForm, Limits) {
    double inf = INFINITY;
    EXPECT_NEAR(jg_closed_form(sys(inf, inf, 0.6), kLap), 0.4 * 13.99 / 2, 1e-12);
    EXPECT_EQ(jg_closed_form(sys(160, inf, 1.0), kLap), 0.0);
    // Continuous at alpha = 1 and at s_max = 0.
    EXPECT_NEAR(jg_closed_form(sys(160, 50, 1.0 - 1e-12), kLap),
                jg_closed_form(sys(160, 50, 1.0), kLap), 1e-9);
    EXPECT_NEAR(jg_closed_form(sys(160, 1e-9, 0.6), kLap), jg_closed_form(sys(160, 0, 0.6), kLap),
                1e-9);
}

TEST(JgClosedForm, RejectsUnsupportedInputs) {
    EXPECT_THROW(jg_closed_form(sys(160, 50, 0.6), LaplaceModel(1.0, 13.99)), UnsupportedModel);
    SystemParams p = sys(160, 50, 0.6);
    p.c_max = Capacity::mw(1);
    EXPECT_THROW(jg_closed_form(p, kLap), InvalidRegime);
}

TEST(JgDerivative, MatchesFiniteDifferenceAndDecreases) {
    for (double alpha : {0.6, 0.8, 0.95}) {
        double h = 1e-4;
        double fd = (jg_closed_form(sys(160, h, alpha), kLap) -
                     jg_closed_form(sys(160, 0, alpha), kLap)) /
                    h;
        // Forward difference at 0; compare against the midpoint derivative.
        double mid = jg_derivative_smax(sys(160, h / 2, alpha), kLap);
        EXPECT_NEAR(-fd, mid, 1e-6 * mid);
        double prev = INFINITY;
        for (double s = 0; s <= 400; s += 10) {
            double d = jg_derivative_smax(sys(160, s, alpha), kLap);
            EXPECT_LT(d, prev);
            prev = d;
        }
    }
}

TEST(ReductionFraction, EightyPercentBelowFourSigma) {
    EXPECT_NEAR(smax_for_reduction_fraction(sys(160, 0, 0.6), kLap, 0.8), 51.772511992688808,
                1e-9);
    EXPECT_NEAR(smax_for_reduction_fraction(sys(160, 0, 0.8), kLap, 0.8), 73.549959345826, 1e-9);
    for (double alpha = 0.6; alpha <= 0.8 + 1e-12; alpha += 0.05)
        EXPECT_LT(smax_for_reduction_fraction(sys(160, 0, alpha), kLap, 0.8),
                  4.0 * kLap.stddev());
    EXPECT_EQ(smax_for_reduction_fraction(sys(160, 0, 0.6), kLap, 0.0), 0.0);
}

TEST(JgTarget, InvertsClosedForm) {
    double s = smax_for_jg_target(sys(160, 0, 0.6), kLap, 3.6);
    EXPECT_NEAR(s, 53.680069098732732, 1e-9);
    EXPECT_NEAR(jg_closed_form(sys(160, s, 0.6), kLap), 3.6, 1e-12);
    EXPECT_EQ(smax_for_jg_target(sys(160, 0, 0.6), kLap, 8.0), 0.0);
    EXPECT_THROW(smax_for_jg_target(sys(160, 0, 0.6), kLap, 2.7), TargetInfeasible);
}

TEST(StorageCdf, SupportAtomsAndMonotone) {
    SystemParams p = sys_eta(160, 100, 0.9, 0.9);
    EXPECT_EQ(stationary_storage_cdf(p, kLap, -1e-9), 0.0);
    EXPECT_EQ(stationary_storage_cdf(p, kLap, 100), 1.0);
    EXPECT_EQ(stationary_storage_cdf_left(p, kLap, 0.0), 0.0);
    double theta = (1 / 0.9 - 0.9) / 13.99 / 2;
    double atom0 = (1 - (1 + 0.81) / 2) / (1 - 0.81 * std::exp(-theta * 100));
    EXPECT_NEAR(stationary_storage_cdf(p, kLap, 0.0), atom0, 1e-14);
    // Grid solution of the storage chain.
    EXPECT_NEAR(stationary_storage_cdf(p, kLap, 0.0), 0.1535855, 1e-3);
    double prev = 0.0;
    for (double s = 0; s < 100; s += 0.5) {
        double f = stationary_storage_cdf(p, kLap, s);
        EXPECT_GE(f, prev);
        prev = f;
    }
    EXPECT_LT(stationary_storage_cdf_left(p, kLap, 100), 1.0);
}

TEST(GenerationCdf, AtomAndTail) {
    SystemParams p = sys(160, 50, 0.6);
    double theta = (1 / std::sqrt(0.6) - std::sqrt(0.6)) / 13.99 / 2;
    double r = 0.4 / (1 - 0.6 * std::exp(-theta * 50));
    EXPECT_NEAR(stationary_generation_cdf(p, kLap, 0.0), 1 - r / 2, 1e-14);
    SystemParams none = sys(160, 0, 0.6);
    for (double g : {0.0, 5.0, 50.0, 159.0})
        EXPECT_NEAR(stationary_generation_cdf(none, kLap, g), 1 - 0.5 * std::exp(-g / 13.99),
                    1e-14);
    double t1 = 1 - stationary_generation_cdf(p, kLap, 10);
    double t2 = 1 - stationary_generation_cdf(p, kLap, 30);
    EXPECT_NEAR(std::log(t1 / t2) / 20, 1 / 13.99, 1e-12);
    EXPECT_EQ(stationary_generation_cdf(p, kLap, 160), 1.0);
    EXPECT_LT(stationary_generation_cdf_left(p, kLap, 160), 1.0);
}

TEST(GenerationCdf, TailIntegralIsAverageGeneration) {
    for (double smax : {0.0, 25.0, 100.0}) {
        SystemParams p = sys(160, smax, 0.6);
        double tail = integrate([&](double g) { return 1 - stationary_generation_cdf(p, kLap, g); },
                                0, 160);
        EXPECT_NEAR(tail, jg_closed_form(p, kLap), 1e-9 * jg_closed_form(p, kLap));
    }
}

TEST(Lolp, NoStorageAndUnboundedStorage) {
    EXPECT_NEAR(lolp_under_min_generation(sys(160, 0, 0.6), kLap), 5.3958106582732497e-6,
                1e-12 * 5.4e-6);
    double e = std::exp(-160 / 13.99);
    EXPECT_NEAR(lolp_under_min_generation(sys(160, INFINITY, 0.6), kLap), 0.4 * e / 2, 1e-20);
}

TEST(Lolp, EqualsStorageLawIntegral) {
    for (double smax : {10.0, 50.0, 150.0}) {
        SystemParams p = sys(60, smax, 0.7);
        double ed = p.eta_d;
        double q = integrate(
            [&](double x) {
                return stationary_storage_cdf_left(p, kLap, -(x + 60) / ed) * kLap.pdf(x);
            },
            -INFINITY, -60, {-60 - ed * smax});
        double closed = lolp_under_min_generation(p, kLap);
        EXPECT_NEAR(q, closed, 1e-9 * closed);
    }
}

TEST(ClosedForms, NonincreasingInStorage) {
    double jg_prev = INFINITY, l_prev = INFINITY;
    for (double s = 0; s <= 300; s += 5) {
        SystemParams p = sys(160, s, 0.7);
        double jg = jg_closed_form(p, kLap);
        double l = lolp_under_min_generation(p, kLap);
        EXPECT_LE(jg, jg_prev);
        EXPECT_LE(l, l_prev);
        jg_prev = jg;
        l_prev = l;
    }
}

TEST(JgAsymptotic, Cases) {
    EXPECT_NEAR(jg_asymptotic(kLap, 0.6), 0.4 * 13.99 / 2, 1e-12);
    EXPECT_EQ(jg_asymptotic(LaplaceModel(20, 13.99), 0.6), 0.0);
    EXPECT_NEAR(jg_asymptotic(LaplaceModel(5, 13.99), 0.0),
                LaplaceModel(5, 13.99).expected_negative(), 1e-15);
}

TEST(RateBounds, Ordering) {
    SystemParams p = sys(160, 100, 0.6);
    RateBounds rb = lolp_rate_bounds(p, kLap);
    EXPECT_DOUBLE_EQ(rb.gamma_min, -p.eta_d / 13.99);
    EXPECT_GT(rb.lambda0, 0.0);
    EXPECT_LT(rb.lambda0, p.eta_d / 13.99);
    EXPECT_LE(rb.gamma_min, rb.gamma_max);
    EXPECT_LT(rb.gamma_max, 0.0);
    SystemParams big = sys(INFINITY, 100, 0.6);
    EXPECT_NEAR(lolp_rate_bounds(big, kLap).lambda0, big.eta_d / 13.99, 1e-15);
    EXPECT_THROW(lolp_rate_bounds(sys(5, 100, 0.6), kLap), ConditionViolated);
}

TEST(SuboptimalLolp, MatchesStorageLawIntegral) {
    SystemParams p = sys(20, 60, 0.6);
    RateBounds rb = lolp_rate_bounds(p, kLap);
    double ed = p.eta_d;
    double e = std::exp(-20 / 13.99);
    double k = e / (0.6 * std::exp(rb.lambda0 * 60) - e);
    auto loss = [&](double s) { return kLap.cdf(-20 - ed * s); };
    double atom0 = suboptimal_storage_cdf(p, kLap, 0.0);
    double atom_full = 1 - (k * (-1 + 1.6 / (1 + e) * std::exp(rb.lambda0 * 60)));
    double body = integrate(
        [&](double s) {
            return loss(s) * k * 1.6 / (1 + e) * rb.lambda0 * std::exp(rb.lambda0 * s);
        },
        0, 60);
    double q = atom0 * loss(0) + body + atom_full * loss(60);
    EXPECT_NEAR(suboptimal_lolp(p, kLap), q, 1e-9 * q);
    EXPECT_NEAR(suboptimal_lolp(p, kLap), 0.015611, 5e-6);
}

TEST(AsympConditions, Cases) {
    EXPECT_TRUE(check_lolp_asymp_conditions(kLap, sys(160, 100, 0.6)));
    EXPECT_FALSE(check_lolp_asymp_conditions(kLap, sys(0, 100, 0.6)));
    EXPECT_TRUE(check_lolp_asymp_conditions(kLap, sys(10, 100, 1.0)));
    AsympConditions c = lolp_asymp_conditions(kLap, sys(0, 100, 0.6));
    EXPECT_TRUE(c.tail);
    EXPECT_FALSE(c.positive);
}

TEST(Acoe, WitnessSolvesOptimalityEquation) {
    for (double alpha : {0.6, 0.81}) {
        SystemParams p = sys(160, 100, alpha);
        std::vector<double> grid;
        for (int i = 0; i < 100; ++i) grid.push_back(100.0 * i / 99.0);
        EXPECT_LT(acoe_residual(p, kLap, grid), 1e-8);
        AcoeWitness w = acoe_witness(p, kLap);
        EXPECT_EQ(w.eta, jg_closed_form(p, kLap));
        for (double s : grid) EXPECT_LT(std::abs(w.v(s)), 1e4);
    }
    EXPECT_THROW(acoe_witness(sys(160, 100, 1.0), kLap), UnsupportedModel);
}
