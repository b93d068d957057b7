#include <benchmark/benchmark.h>

#include "collcast/harness.hpp"
#include "collcast/traffic_sim.hpp"

using namespace collcast;

static void BM_ComputeRingPlan(benchmark::State& state) {
  ProcGroup group{static_cast<int>(state.range(0)), 0};
  for (auto _ : state) {
    for (int rel = 0; rel < group.size; ++rel)
      benchmark::DoNotOptimize(compute_ring_plan(rel, group));
  }
}
BENCHMARK(BM_ComputeRingPlan)->Arg(16)->Arg(64)->Arg(256);

static void BM_SimulateTunedBroadcast(benchmark::State& state) {
  ProcGroup group{static_cast<int>(state.range(0)), 0};
  for (auto _ : state) {
    auto sim = simulate(Algorithm::ScatterRingTuned, group, 1 << 20);
    benchmark::DoNotOptimize(sim.report.total_messages);
  }
}
BENCHMARK(BM_SimulateTunedBroadcast)->Arg(16)->Arg(64)->Arg(256);

static void BM_InProcessBroadcast(benchmark::State& state) {
  ProcGroup group{static_cast<int>(state.range(0)), 0};
  const std::size_t nbytes = 1 << 18;
  for (auto _ : state) {
    auto cell = execute_cell(Algorithm::ScatterRingTuned, group, nbytes, 1,
                             TransportKind::InProcess, nullptr, 4);
    benchmark::DoNotOptimize(cell.observed.total_bytes);
  }
  state.SetBytesProcessed(state.iterations() * nbytes * group.size);
}
BENCHMARK(BM_InProcessBroadcast)->Arg(4)->Arg(8)->Arg(16);

BENCHMARK_MAIN();
