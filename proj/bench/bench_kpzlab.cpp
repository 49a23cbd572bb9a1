// Serial reference path vs OpenMP kernels. Both produce identical numbers;
// only wall time differs.

#include <benchmark/benchmark.h>

#include "kpzlab/sigma.hpp"
#include "kpzlab/wedge.hpp"

namespace {

using kpzlab::Exec;

void BM_sigma2(benchmark::State& state, Exec exec) {
  const double L = static_cast<double>(state.range(0));
  kpzlab::SigmaOptions options;
  options.exec = exec;
  for (auto _ : state) {
    auto est = kpzlab::estimate_sigma2(L, 2000, 0, kpzlab::SigmaForm::shifted, 1, options);
    benchmark::DoNotOptimize(est);
  }
  state.SetItemsProcessed(state.iterations() * 2000);
}

void BM_survival_mc(benchmark::State& state, Exec exec) {
  const double L = static_cast<double>(state.range(0));
  kpzlab::WedgeMcOptions options;
  options.exec = exec;
  for (auto _ : state) {
    auto est = kpzlab::survival_probability_mc(2.0, L, 20000, 1, options);
    benchmark::DoNotOptimize(est);
  }
  state.SetItemsProcessed(state.iterations() * 20000);
}

}  // namespace

BENCHMARK_CAPTURE(BM_sigma2, serial, Exec::serial)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_sigma2, openmp, Exec::parallel)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_survival_mc, serial, Exec::serial)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_survival_mc, openmp, Exec::parallel)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
