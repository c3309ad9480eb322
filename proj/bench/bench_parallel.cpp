#include <benchmark/benchmark.h>

#include "attsync/gradcheck.hpp"
#include "attsync/montecarlo.hpp"
#include "attsync/scenario.hpp"

namespace {

attsync::Scenario hybrid_scenario()
{
    attsync::ScenarioConfig cfg = attsync::load_config(ATTSYNC_SCENARIO_DIR "/paper_fig3_hybrid.json");
    cfg.t_end = 5.0;
    return attsync::build_scenario(cfg);
}

void BM_MonteCarloSerial(benchmark::State& state)
{
    const attsync::Scenario sc = hybrid_scenario();
    for (auto _ : state) {
        benchmark::DoNotOptimize(attsync::montecarlo_serial(sc, static_cast<int>(state.range(0)), 7));
    }
}

void BM_MonteCarloParallel(benchmark::State& state)
{
    const attsync::Scenario sc = hybrid_scenario();
    for (auto _ : state) {
        benchmark::DoNotOptimize(attsync::montecarlo_parallel(sc, static_cast<int>(state.range(0)), 7));
    }
}

void BM_GradcheckSerial(benchmark::State& state)
{
    const attsync::Scenario sc = hybrid_scenario();
    attsync::GradcheckOptions opt;
    opt.points = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(attsync::gradcheck_serial(sc.loop, opt));
    }
}

void BM_GradcheckParallel(benchmark::State& state)
{
    const attsync::Scenario sc = hybrid_scenario();
    attsync::GradcheckOptions opt;
    opt.points = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(attsync::gradcheck_parallel(sc.loop, opt));
    }
}

}  // namespace

BENCHMARK(BM_MonteCarloSerial)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MonteCarloParallel)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GradcheckSerial)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GradcheckParallel)->Arg(200)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
