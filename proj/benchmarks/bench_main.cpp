// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <random>

#include "rdna/scenario.hpp"

namespace {

void BM_CrtSolve(benchmark::State& state) {
  const std::vector<rdna::ResidueConstraint> cs{
      {rdna::CoreSwitchId(11), 1}, {rdna::CoreSwitchId(19), 0}, {rdna::CoreSwitchId(17), 14},
      {rdna::CoreSwitchId(23), 5}, {rdna::CoreSwitchId(29), 7}, {rdna::CoreSwitchId(31), 3}};
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::span<const rdna::ResidueConstraint> view(cs.data(), n);
  for (auto _ : state) benchmark::DoNotOptimize(rdna::crt_solve(view));
}
BENCHMARK(BM_CrtSolve)->DenseRange(1, 6);

void BM_ModuloForward(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::vector<rdna::RouteId> routes;
  for (int i = 0; i < 1024; ++i) routes.emplace_back(rng() % rdna::kRouteIdLimit);
  const rdna::CoreSwitchId core(19);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(rdna::modulo_forward(routes[i++ & 1023], core));
}
BENCHMARK(BM_ModuloForward);

void BM_FigBSimulation(benchmark::State& state) {
  auto s = rdna::builtin_fig_b_migration(static_cast<double>(state.range(0)));
  s.run.duration_s = 2;
  for (auto& f : s.flows) f.stop_s = 2;
  s.migrations.front().at_s = 1;
  std::uint64_t packets = 0;
  for (auto _ : state) {
    const auto r = rdna::run_scenario(s);
    packets += r.counters.generated;
  }
  state.counters["packets/s"] = benchmark::Counter(static_cast<double>(packets), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_FigBSimulation)->Arg(100)->Arg(800)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
