#include <benchmark/benchmark.h>

#include "ftls/analysis.hpp"
#include "ftls/limits.hpp"
#include "ftls/profile.hpp"
#include "ftls/sim.hpp"

using namespace ftls;

namespace {

SubcaseReport report_1b() {
    const auto p = ModelParams::standard();
    const auto [rm, rp] = subcase_asymptotes(p, 3.0 / 16.0, 'B');
    return classify(p, rm, rp);
}

void BM_RhsMain(benchmark::State& state) {
    const auto p = ModelParams::standard();
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto s = riemann_init(p, 0.2, 0.75, 0.0, n, n);
    for (auto _ : state) benchmark::DoNotOptimize(rhs_main(s, p));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(s.size()));
}
BENCHMARK(BM_RhsMain)->Arg(200)->Arg(800);

void BM_IntegrateStep(benchmark::State& state) {
    const auto p = ModelParams::standard();
    const auto s = riemann_init(p, 0.2, 0.75, 0.0, 200, 200);
    IntegrateOptions o;
    o.T = 0.1 * p.ell / 2.0 * 10;
    o.sample_stride = 1000;
    for (auto _ : state) benchmark::DoNotOptimize(integrate(s, p, o));
    state.SetItemsProcessed(state.iterations() * 10);
}
BENCHMARK(BM_IntegrateStep)->Unit(benchmark::kMillisecond);

void BM_BuildProfile(benchmark::State& state) {
    const auto r = report_1b();
    const Grid g{-20.0, 20.0, 1.0 / static_cast<double>(state.range(0))};
    for (auto _ : state) benchmark::DoNotOptimize(build_profile(r, 0.5, g));
}
BENCHMARK(BM_BuildProfile)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_PeriodCheck(benchmark::State& state) {
    const auto r = report_1b();
    const Profile P = build_profile(r, 0.5, Grid{-20.0, 20.0, 0.001});
    const auto xs = period_samples(r.params);
    for (auto _ : state) benchmark::DoNotOptimize(period_check(P, r.params, r.fbar, xs));
}
BENCHMARK(BM_PeriodCheck)->Unit(benchmark::kMillisecond);

void BM_SolveU(benchmark::State& state) {
    const auto r = report_1b();
    const Grid g{-10.0, 10.0, 0.001};
    for (auto _ : state) benchmark::DoNotOptimize(solve_U(r, 0.5, g));
}
BENCHMARK(BM_SolveU)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
