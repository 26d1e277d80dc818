// OpenMP kernels against their serial counterparts. On a single core the
// parallel variants only show the threading overhead.

#include <benchmark/benchmark.h>

#include "habitret/lifecycle.hpp"
#include "habitret/montecarlo.hpp"

using namespace habitret;

namespace {

const PolicyEvaluator& policy() {
  static const PolicyEvaluator pol(solve_nu(baseline_params(), 40.0));
  return pol;
}

SimConfig config(benchmark::State& state, bool parallel) {
  SimConfig c;
  c.n_paths = static_cast<std::size_t>(state.range(0));
  c.dt = 1.0 / 25;
  c.parallel = parallel;
  return c;
}

void BM_simulate_tables_parallel(benchmark::State& state) {
  const auto cfg = config(state, true);
  for (auto _ : state) benchmark::DoNotOptimize(simulate(policy(), cfg).paths.data());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_simulate_tables_serial(benchmark::State& state) {
  const auto cfg = config(state, false);
  for (auto _ : state) benchmark::DoNotOptimize(simulate(policy(), cfg).paths.data());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_simulate_reference(benchmark::State& state) {
  const auto cfg = config(state, false);
  for (auto _ : state) benchmark::DoNotOptimize(simulate_reference(policy(), cfg).paths.data());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_optimize_tau(benchmark::State& state) {
  LifecycleOptions opts;
  opts.parallel = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(optimize_tau(baseline_params(), 0.5, opts).tau_star);
}

void BM_budget_map(benchmark::State& state) {
  const BudgetKernel f(baseline_params(), 40.0, DualOptions{}.rule);
  double x = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(f(x));
    x *= 1.0000001;
  }
}

void BM_future_kernel(benchmark::State& state) {
  const FutureKernel k = policy().future_kernel(20.0);
  double x = -1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(k(x));
    x += 1e-9;
  }
}

}  // namespace

BENCHMARK(BM_simulate_tables_parallel)->Arg(16)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_simulate_tables_serial)->Arg(16)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_simulate_reference)->Arg(16)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_optimize_tau)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_budget_map)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_future_kernel)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
