#include <benchmark/benchmark.h>

#include "ldla/dla.hpp"

using namespace ldla;

namespace {

const StepLaw& law() {
  static const StepLaw l(0.5);
  return l;
}

const GreenTable& table() {
  static const GreenTable t = build_table(law(), GreenOptions{});
  return t;
}

void BM_SampleStep(benchmark::State& state) {
  const StepLaw l(state.range(0) / 100.0);
  Rng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(l.sample_step(rng));
}
BENCHMARK(BM_SampleStep)->Arg(25)->Arg(50)->Arg(75);

void BM_GreenLookup(benchmark::State& state) {
  const GreenTable& t = table();
  Rng rng(2);
  std::vector<Site> xs(4096);
  for (Site& x : xs) x = static_cast<Site>(rng.below(1u << 20));
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(t(xs[i++ & 4095]));
}
BENCHMARK(BM_GreenLookup);

void BM_Extend(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<Site> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back(static_cast<Site>(3 * i));
  const PotentialState base(table(), pts);
  for (auto _ : state) {
    state.PauseTiming();
    PotentialState s = base;
    state.ResumeTiming();
    benchmark::DoNotOptimize(s.extend(-1));
  }
}
BENCHMARK(BM_Extend)->Arg(64)->Arg(256)->Arg(1024);

void BM_DlaStep(benchmark::State& state) {
  const auto n = state.range(0);
  for (auto _ : state) {
    state.PauseTiming();
    Aggregate agg(law(), table(), 7);
    while (static_cast<std::int64_t>(agg.n()) < n) dla_step(agg);
    state.ResumeTiming();
    benchmark::DoNotOptimize(dla_step(agg));
  }
}
BENCHMARK(BM_DlaStep)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
