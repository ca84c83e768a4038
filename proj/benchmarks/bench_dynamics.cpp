#include <benchmark/benchmark.h>

#include "bftevo/dynamics.hpp"
#include "bftevo/equilibrium.hpp"
#include "bftevo/matching.hpp"
#include "bftevo/sweep.hpp"

namespace {

bftevo::ModelConfig example(int n, int nu) {
  bftevo::ModelConfig c;
  c.payoffs = {10, 4, 2, 1};
  c.protocol = {n, nu};
  c.belief = {0.2};
  c.initial_honest_fraction = 0.6;
  return c;
}

void BM_MeanField(benchmark::State& state) {
  const auto model = bftevo::require_valid(example(10, 3));
  const auto w = bftevo::default_offset(model.payoffs());
  for (auto _ : state) benchmark::DoNotOptimize(bftevo::simulate_mean_field(model, w));
}
BENCHMARK(BM_MeanField);

void BM_Agents(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto model = bftevo::require_valid(example(n, n * 3 / 10));
  const auto w = bftevo::default_offset(model.payoffs());
  for (auto _ : state) benchmark::DoNotOptimize(bftevo::simulate_agents(model, w));
}
BENCHMARK(BM_Agents)->Arg(100)->Arg(1000)->Arg(10000);

void BM_Matching(benchmark::State& state) {
  const auto pop = bftevo::AgentPopulation::with_fraction(1000, 0.4, 0);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(bftevo::run_matching(pop, bftevo::Belief{0.5}, 100, seed++));
  state.SetItemsProcessed(state.iterations() * 100'000);
}
BENCHMARK(BM_Matching);

void BM_Classify(benchmark::State& state) {
  const auto model = bftevo::require_valid(example(10, 3));
  for (auto _ : state) benchmark::DoNotOptimize(bftevo::classify_analytic(model));
}
BENCHMARK(BM_Classify);

void BM_Sweep(benchmark::State& state) {
  bftevo::SweepSpec spec;
  spec.base = example(10, 3);
  spec.axes = {bftevo::parse_axis("x1:0:1:50"), bftevo::parse_axis("m:0:0.99:50")};
  spec.threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(bftevo::run_sweep(spec));
}
BENCHMARK(BM_Sweep)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
