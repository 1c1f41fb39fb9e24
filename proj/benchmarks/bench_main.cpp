#include <benchmark/benchmark.h>

#include <cmath>

#include "storesim/analytics.hpp"
#include "storesim/dp.hpp"
#include "storesim/policies.hpp"
#include "storesim/quadrature.hpp"
#include "storesim/sim.hpp"

using namespace storesim;

namespace {

const LaplaceModel kLap(0.0, 13.99);

SystemParams base(double smax) {
    double e = std::sqrt(0.6);
    return SystemParams::unconstrained(Capacity::mw(160), Capacity::mw(smax), e, e);
}

void BM_Decide(benchmark::State& state) {
    SystemParams p = base(100);
    PolicyKind kinds[] = {policy::MinGeneration{}, policy::MinLolp{},
                          policy::TwoThreshold{{20, 60}}};
    const PolicyKind& k = kinds[state.range(0)];
    double s = 0.0;
    double delta = -30.0;
    for (auto _ : state) {
        Decision d = decide(p, k, s, delta);
        benchmark::DoNotOptimize(d);
        s = s < 99.0 ? s + 0.7 : 0.0;
        delta = delta < 30.0 ? delta + 1.3 : -30.0;
    }
}
BENCHMARK(BM_Decide)->DenseRange(0, 2);

void BM_SampleIid(benchmark::State& state) {
    for (auto _ : state) {
        Trace t = sample_iid(kLap, static_cast<std::size_t>(state.range(0)), 1);
        benchmark::DoNotOptimize(t.deltas.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SampleIid)->Arg(1 << 16);

void BM_RunTrace(benchmark::State& state) {
    Trace t = sample_iid(kLap, static_cast<std::size_t>(state.range(0)), 1);
    SystemParams p = base(100);
    RunOptions ro;
    ro.smoothing = &kLap;
    for (auto _ : state) {
        CostReport r = run_trace(p, policy::MinGeneration{}, t, 0.0, ro);
        benchmark::DoNotOptimize(r);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RunTrace)->Arg(1 << 16);

void BM_ValueIteration(benchmark::State& state) {
    SystemParams p = base(60);
    Grid g = make_grid(p, kLap, static_cast<std::size_t>(state.range(0)),
                       static_cast<std::size_t>(2 * state.range(0)));
    for (auto _ : state) {
        DpSolution sol = value_iteration(p, kLap, {1.0, 0.0}, g);
        benchmark::DoNotOptimize(sol.eta);
    }
}
BENCHMARK(BM_ValueIteration)->Arg(41)->Arg(81)->Unit(benchmark::kMillisecond);

void BM_AcoeResidual(benchmark::State& state) {
    SystemParams p = base(100);
    std::vector<double> grid;
    for (int i = 0; i < 100; ++i) grid.push_back(100.0 * i / 99.0);
    for (auto _ : state) benchmark::DoNotOptimize(acoe_residual(p, kLap, grid));
}
BENCHMARK(BM_AcoeResidual)->Unit(benchmark::kMillisecond);

void BM_Integrate(benchmark::State& state) {
    for (auto _ : state)
        benchmark::DoNotOptimize(
            integrate([](double x) { return std::abs(x) * kLap.pdf(x); }, -INFINITY, INFINITY, {0.0}));
}
BENCHMARK(BM_Integrate);

}  // namespace

BENCHMARK_MAIN();
