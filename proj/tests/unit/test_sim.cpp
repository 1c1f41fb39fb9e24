#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "storesim/analytics.hpp"
#include "storesim/data.hpp"
#include "storesim/errors.hpp"
#include "storesim/sim.hpp"

using namespace storesim;

namespace {

const LaplaceModel kLap(0.0, 13.99);

SystemParams sys(double gmax, double smax, double alpha = 0.6) {
    double e = std::sqrt(alpha);
    return SystemParams::unconstrained(Capacity::mw(gmax), Capacity::mw(smax), e, e);
}

Trace fixed(std::vector<double> d) { return Trace{std::move(d), FileOrigin{"inline"}}; }

}  // namespace

TEST(RunTrace, HandWorkedGreedy) {
    SystemParams p = SystemParams::unconstrained(Capacity::mw(160), Capacity::mw(100), 1, 1);
    CostReport r = run_trace(p, policy::MinGeneration{}, fixed({10, -5, -20, 200}), 0.0);
    // 0 -> 10 -> 5 -> 0 (15 MW generated) -> 100 with 100 MW curtailed.
    EXPECT_EQ(r.n, 4u);
    EXPECT_DOUBLE_EQ(r.j_g, 15.0 / 4);
    EXPECT_DOUBLE_EQ(r.curtailed_avg, 100.0 / 4);
    EXPECT_DOUBLE_EQ(r.final_s, 100.0);
    EXPECT_EQ(r.j_l_event, 0.0);
    EXPECT_FALSE(r.j_l_smoothed.has_value());
}

TEST(RunTrace, CountsLossEventsAndBurnIn) {
    SystemParams p = SystemParams::unconstrained(Capacity::mw(10), Capacity::mw(5), 1, 1);
    RunOptions o;
    o.burn_in = 1;
    CostReport r = run_trace(p, policy::MinGeneration{}, fixed({-100, -100, 0, 0}), 5.0, o);
    EXPECT_EQ(r.n, 3u);
    EXPECT_DOUBLE_EQ(r.j_l_event, 1.0 / 3);
    EXPECT_DOUBLE_EQ(r.j_g, 10.0 / 3);
}

TEST(RunTrace, Rejections) {
    SystemParams p = sys(160, 50);
    EXPECT_THROW(run_trace(p, policy::MinGeneration{}, fixed({}), 0.0), EmptyTrace);
    EXPECT_THROW(run_trace(p, policy::MinGeneration{}, fixed({1}), 51.0), InvalidArgument);
    RunOptions o;
    o.burn_in = 1;
    EXPECT_THROW(run_trace(p, policy::MinGeneration{}, fixed({1}), 0.0, o), InvalidArgument);
    EXPECT_THROW(run_trace(p, policy::TwoThreshold{{30, 20}}, fixed({1}), 0.0), InvalidThresholds);
}

TEST(SampleIid, DeterministicPerSeedAndStream) {
    Trace a = sample_iid(kLap, 1000, 7);
    Trace b = sample_iid(kLap, 1000, 7);
    Trace c = sample_iid(kLap, 1000, 7, 1);
    Trace d = sample_iid(kLap, 1000, 8);
    EXPECT_EQ(a.deltas, b.deltas);
    EXPECT_NE(a.deltas, c.deltas);
    EXPECT_NE(a.deltas, d.deltas);
    auto origin = std::get<SyntheticOrigin>(a.origin);
    EXPECT_EQ(origin.seed, 7u);
    EXPECT_EQ(origin.model, "laplace(mu=0,b=13.99)");
    EXPECT_THROW(sample_iid(kLap, 0, 1), EmptyTrace);
}

TEST(SampleIid, MeanAndLaw) {
    const std::size_t n = 100000;
    Trace t = sample_iid(kLap, n, 3);
    double mean = 0.0;
    for (double x : t.deltas) mean += x;
    mean /= n;
    EXPECT_LT(std::abs(mean), 5 * kLap.stddev() / std::sqrt(double(n)));
    EXPECT_LT(ks_distance(t.deltas, CdfFunction::of(kLap)), 1.63 / std::sqrt(double(n)));
}

TEST(DefaultBurnIn, Rule) {
    EXPECT_EQ(default_burn_in(1000000), 10000u);
    EXPECT_EQ(default_burn_in(5000000), 50000u);
    EXPECT_EQ(default_burn_in(100), 50u);
}

TEST(RunTraceProperty, PerSlotBalanceAndStorageUpdate) {
    SystemParams p = sys(40, 60, 0.7);
    Trace t = sample_iid(kLap, 50000, 11);
    for (const PolicyKind& k : {PolicyKind{policy::MinGeneration{}}, PolicyKind{policy::MinLolp{}},
                                PolicyKind{policy::TwoThreshold{{10, 30}}},
                                PolicyKind{policy::SuboptimalLolp{}}}) {
        RunOptions o;
        double worst = 0.0;
        o.observer = [&](std::size_t, double s, double delta, const SlotOutcome& out) {
            const Decision& d = out.applied;
            if (!out.lost_load)
                worst = std::max(worst, std::abs(delta + d.g + d.d - d.c - out.curtailed));
            double next = std::clamp(s + p.eta_c * d.c - d.d / p.eta_d, 0.0, 60.0);
            worst = std::max(worst, std::abs(out.next_s - next));
            EXPECT_GE(out.curtailed, 0.0);
        };
        run_trace(p, k, t, 0.0, o);
        EXPECT_LT(worst, 1e-9) << policy_name(k);
    }
}

// With unbounded generation and storage, greedy dispatch discharges everything it
// stores, so over the run: generated = deficits - eta_d * eta_c * charged + eta_d * (final stock).
TEST(RunTraceProperty, TelescopingUnderGreedy) {
    SystemParams p = SystemParams::unconstrained(Capacity::unbounded(), Capacity::unbounded(),
                                                 0.8, 0.9);
    Trace t = sample_iid(kLap, 100000, 5);
    double deficits = 0.0;
    double charged = 0.0;
    RunOptions o;
    o.observer = [&](std::size_t, double, double delta, const SlotOutcome& out) {
        deficits += std::max(-delta, 0.0);
        charged += out.applied.c;
    };
    CostReport r = run_trace(p, policy::MinGeneration{}, t, 0.0, o);
    double generated = r.j_g * double(r.n);
    double expect = deficits - p.eta_d * p.eta_c * charged + p.eta_d * r.final_s;
    EXPECT_NEAR(generated, expect, 1e-7 * deficits);
}

TEST(RunTraceProperty, SmoothedLossMatchesEventRate) {
    SystemParams p = sys(40, 20);
    const std::size_t n = 400000;
    Trace t = sample_iid(kLap, n, 21);
    RunOptions o;
    o.smoothing = &kLap;
    for (const PolicyKind& k : {PolicyKind{policy::MinGeneration{}}, PolicyKind{policy::MinLolp{}}}) {
        CostReport r = run_trace(p, k, t, 0.0, o);
        ASSERT_TRUE(r.j_l_smoothed.has_value());
        double q = *r.j_l_smoothed;
        EXPECT_GT(q, 1e-3);
        EXPECT_NEAR(r.j_l_event, q, 5 * std::sqrt(q / double(n)) + 1e-4) << policy_name(k);
    }
}

TEST(Stationary, GreedyMatchesClosedForms) {
    SystemParams p = sys(160, 50);
    StationarySample st = stationary_histogram(p, policy::MinGeneration{}, kLap, 200000, 10000, 4);
    ASSERT_EQ(st.storage.size(), 200000u);
    CdfFunction scdf{[&](double s) { return stationary_storage_cdf(p, kLap, s); },
                     [&](double s) { return stationary_storage_cdf_left(p, kLap, s); }};
    CdfFunction gcdf{[&](double g) { return stationary_generation_cdf(p, kLap, g); },
                     [&](double g) { return stationary_generation_cdf_left(p, kLap, g); }};
    EXPECT_LT(ks_distance(st.storage, scdf), 0.01);
    EXPECT_LT(ks_distance(st.generation, gcdf), 0.01);
    EXPECT_NEAR(st.storage_atom_empty, stationary_storage_cdf(p, kLap, 0.0), 0.01);
    EXPECT_NEAR(st.storage_atom_full, 1 - stationary_storage_cdf_left(p, kLap, 50.0), 0.01);
    EXPECT_NEAR(st.generation_atom_zero, stationary_generation_cdf(p, kLap, 0.0), 0.01);

    double mass = 0.0;
    double w = (st.storage_hist.hi - st.storage_hist.lo) / st.storage_hist.density.size();
    for (double d : st.storage_hist.density) mass += d * w;
    EXPECT_NEAR(mass + st.storage_atom_empty + st.storage_atom_full, 1.0, 1e-9);
}

TEST(Sweep, GreedyGenerationFallsWithStorage) {
    SweepResult r = sweep_capacity(sys(160, 0), policy::MinGeneration{}, kLap,
                                   {0, 10, 25, 50, 100}, 100000, 2);
    ASSERT_EQ(r.reports.size(), 5u);
    EXPECT_EQ(r.axis, "s_max");
    EXPECT_TRUE(r.thresholds.empty());
    for (std::size_t i = 1; i < r.reports.size(); ++i)
        EXPECT_LE(r.reports[i].j_g, r.reports[i - 1].j_g + 1e-12);
    EXPECT_THROW(sweep_capacity(sys(160, 0), policy::MinGeneration{}, kLap, {10, 5}, 100, 1),
                 InvalidArgument);
}

TEST(Sweep, ThreadCountDoesNotChangeResults) {
    SweepOptions one;
    one.threads = 1;
    one.threshold_fractions = {0.2, 0.6};
    SweepOptions four = one;
    four.threads = 4;
    std::vector<double> v{0, 20, 40, 80};
    PolicyKind k = policy::TwoThreshold{};
    SweepResult a = sweep_capacity(sys(160, 0), k, kLap, v, 50000, 9, one);
    SweepResult b = sweep_capacity(sys(160, 0), k, kLap, v, 50000, 9, four);
    EXPECT_EQ(a.reports, b.reports);
    EXPECT_EQ(a.thresholds, b.thresholds);
    EXPECT_EQ(a.thresholds[2], (ThresholdPair{8, 24}));
}

TEST(Pareto, GridAndFrontier) {
    auto grid = threshold_grid(40, 10);
    EXPECT_EQ(grid.size(), 15u);
    EXPECT_EQ(grid.front(), (ThresholdPair{0, 0}));
    EXPECT_EQ(grid.back(), (ThresholdPair{40, 40}));

    SystemParams p = sys(40, 40);
    ParetoResult r = pareto_two_threshold(p, kLap, grid, 100000, 3, 2);
    ASSERT_FALSE(r.frontier.empty());
    double min_jg = INFINITY;
    double min_jl = INFINITY;
    for (const auto& pt : r.points) {
        min_jg = std::min(min_jg, pt.report.j_g);
        min_jl = std::min(min_jl, *pt.report.j_l_smoothed);
    }
    EXPECT_EQ(r.points[r.frontier.front()].report.j_g, min_jg);
    EXPECT_EQ(*r.points[r.frontier.back()].report.j_l_smoothed, min_jl);
    for (std::size_t i = 1; i < r.frontier.size(); ++i) {
        const auto& a = r.points[r.frontier[i - 1]].report;
        const auto& b = r.points[r.frontier[i]].report;
        EXPECT_LT(a.j_g, b.j_g);
        EXPECT_GT(*a.j_l_smoothed, *b.j_l_smoothed);
    }
    // Greedy is the cheapest in generation; full-storage the safest.
    EXPECT_EQ(r.points.front().report.j_g, min_jg);
    EXPECT_EQ(*r.points.back().report.j_l_smoothed, min_jl);
}

TEST(Pareto, NondominatedSmallCase) {
    auto pt = [](double g, double l) {
        ParetoPoint p;
        p.report.j_g = g;
        p.report.j_l_smoothed = l;
        return p;
    };
    std::vector<ParetoPoint> pts{pt(1, 5), pt(2, 3), pt(2, 4), pt(3, 3), pt(4, 1)};
    EXPECT_EQ(nondominated(pts), (std::vector<std::size_t>{0, 1, 4}));
}

TEST(Plan, LooseLossTargetMatchesClosedFormInversion) {
    PlanConfig cfg;
    cfg.eta_c = cfg.eta_d = std::sqrt(0.6);
    cfg.n = 200000;
    cfg.smax_hi = 200;
    cfg.smax_tol = 0.5;
    cfg.sc_fractions = {0.0};
    PlanResult r = plan_curve(kLap, 3.6, 1.0, {160}, cfg);
    ASSERT_EQ(r.points.size(), 1u);
    const PlanPoint& pt = r.points[0];
    ASSERT_TRUE(pt.feasible);
    EXPECT_EQ(pt.thresholds.s_c, 0.0);
    EXPECT_LE(pt.report.j_g, 3.6);
    double expect = smax_for_jg_target(sys(160, 0), kLap, 3.6);
    EXPECT_NEAR(pt.s_max, expect, 4.0);
}

TEST(Plan, ReportsInfeasiblePoints) {
    PlanConfig cfg;
    cfg.n = 20000;
    cfg.smax_hi = 20;
    PlanResult r = plan_curve(kLap, 0.5, 1e-9, {30}, cfg);
    ASSERT_EQ(r.points.size(), 1u);
    EXPECT_FALSE(r.points[0].feasible);
    EXPECT_FALSE(r.points[0].note.empty());
}

TEST(ParallelFor, RethrowsInIndexOrder) {
    try {
        parallel_for(8, 3, [](std::size_t i) {
            if (i == 2 || i == 6) throw InvalidArgument("boom " + std::to_string(i));
        });
        FAIL();
    } catch (const InvalidArgument& e) {
        EXPECT_STREQ(e.what(), "boom 2");
    }
}
