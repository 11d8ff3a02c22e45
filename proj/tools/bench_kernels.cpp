// Serial reference vs OpenMP paths of the data-parallel kernels.

#include <benchmark/benchmark.h>

#include "tenantsim/affinity.hpp"
#include "tenantsim/io.hpp"
#include "tenantsim/profiler.hpp"

using namespace tenantsim;

namespace {

const NodeConfig kNode{8, 6, 64.0, 64.0};

Zoo bench_zoo() {
  Zoo zoo = default_zoo();
  zoo.models.resize(4);  // DLRM-A..D
  for (auto& m : zoo.models) {
    m.memory_footprint_gb = std::min(m.memory_footprint_gb, 6.0);
    m.cache_working_set_ways = std::min(m.cache_working_set_ways, kNode.llc_ways);
  }
  return zoo;
}

ProfileConfig config(Exec exec) {
  ProfileConfig c;
  c.exec = exec;
  c.probe.expected_queries = 400;
  return c;
}

void BM_ProfileZoo(benchmark::State& state) {
  const Zoo zoo = bench_zoo();
  const auto cfg = config(state.range(0) ? Exec::parallel : Exec::serial);
  for (auto _ : state) benchmark::DoNotOptimize(profile_zoo(zoo, kNode, 1, cfg));
}

void BM_AffinityMatrix(benchmark::State& state) {
  const Zoo zoo = bench_zoo();
  const Profiles profiles = profile_zoo(zoo, kNode, 1, config(Exec::parallel));
  const Exec exec = state.range(0) ? Exec::parallel : Exec::serial;
  for (auto _ : state) benchmark::DoNotOptimize(build_affinity_matrix(profiles, zoo, kNode, exec));
}

}  // namespace

BENCHMARK(BM_ProfileZoo)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AffinityMatrix)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
