// Seed batches: OpenMP loop against the serial reference.
#include <benchmark/benchmark.h>

#include "cogmesh/runner.hpp"

using namespace cogmesh;

namespace {

std::vector<ScenarioConfig> batch(std::int64_t seeds) {
    ScenarioConfig c;
    c.su_count = 50;
    c.channel_count = 8;
    c.pu_count = 4;
    c.duration_ticks = 1000;
    std::vector<std::uint64_t> s;
    for (std::int64_t i = 1; i <= seeds; ++i) s.push_back(static_cast<std::uint64_t>(i));
    return with_seeds(c, s);
}

void BM_BatchSerial(benchmark::State& state) {
    const auto configs = batch(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(run_batch_serial(configs));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BatchParallel(benchmark::State& state) {
    const auto configs = batch(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(run_batch(configs));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_BatchSerial)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_BatchParallel)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
