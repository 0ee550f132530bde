#include <benchmark/benchmark.h>

#include "poisson_malliavin/integrals.hpp"
#include "poisson_malliavin/malliavin.hpp"
#include "poisson_malliavin/processes.hpp"
#include "poisson_malliavin/registry.hpp"

namespace {

const pm::ProductIntensity& rho() {
  static const auto r = pm::make_intensity(1.0, pm::MarkSpace::uniform(5.0));
  return r;
}

const pm::RegionTable& regions() {
  static const auto t = pm::default_regions(rho());
  return t;
}

void BM_IteratedDifference(benchmark::State& state) {
  const auto F = pm::make_functional("exp_count:A,0.5", rho(), regions()).functional;
  const auto w = pm::sample_poisson(rho(), pm::Seed{1});
  std::vector<pm::Atom> tuple;
  for (int i = 0; i < state.range(0); ++i) tuple.push_back({0.05 * (i + 1), 1.0});
  for (auto _ : state) benchmark::DoNotOptimize(pm::iterated_difference(F, w, tuple));
}
BENCHMARK(BM_IteratedDifference)->DenseRange(2, 12, 2);

void BM_EvalCompensated(benchmark::State& state) {
  const auto f = pm::make_kernel(state.range(0) == 1 ? "ind:A" : "poly:1," + std::to_string(state.range(0)), rho(),
                                 regions());
  const auto w = pm::sample_poisson(rho(), pm::Seed{2});
  for (auto _ : state) benchmark::DoNotOptimize(pm::eval_compensated(f, w, rho()).value);
}
BENCHMARK(BM_EvalCompensated)->DenseRange(1, 3);

void BM_SamplePoisson(benchmark::State& state) {
  const auto r = pm::make_intensity(1.0, pm::MarkSpace::uniform(static_cast<double>(state.range(0))));
  std::uint64_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(pm::sample_poisson(r, pm::Seed{i++}).size());
}
BENCHMARK(BM_SamplePoisson)->RangeMultiplier(10)->Range(5, 5000);

void BM_HawkesThinning(benchmark::State& state) {
  const pm::HawkesModel m;
  std::uint64_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(pm::simulate_hawkes(m, pm::Seed{i++}).accepted.size());
}
BENCHMARK(BM_HawkesThinning);

}  // namespace

BENCHMARK_MAIN();
