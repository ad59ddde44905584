// Serial reference against the OpenMP kernels. Arg 0 is serial, 1 parallel.

#include <benchmark/benchmark.h>

#include "lowimpact/builtins.hpp"
#include "models.hpp"

using namespace lowimpact;

namespace {

Execution mode(const benchmark::State& state) { return state.range(0) ? Execution::Parallel : Execution::Serial; }

void BM_EvaluateAll(benchmark::State& state, const char* scenario, const char* measure_name) {
  const auto s = builtin(scenario);
  const auto obj = objective(s, measure_name, "none", 1.0);
  PlannerOptions opts;
  opts.exec = mode(state);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_all(s.model, obj, opts));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(PolicySpace(s.model, obj.agent).size()));
}

void BM_HillClimb(benchmark::State& state) {
  const auto s = make_paperclip_grid();
  const auto obj = objective(s, "coarse", "none", 0.05);
  PlannerOptions opts;
  opts.exec = mode(state);
  opts.budget = 10;
  opts.restarts = 8;
  opts.mutations = 128;
  for (auto _ : state) benchmark::DoNotOptimize(optimize(s.model, obj, opts));
}

void BM_Detectability(benchmark::State& state) {
  const auto m = testmodels::coin_bits(16);
  DetectionConfig cfg;
  cfg.slice = testmodels::all_bits(m);
  cfg.samples = static_cast<std::size_t>(state.range(1));
  const PolicyProfile profile{testmodels::flip_k(m, 8)};
  for (auto _ : state) benchmark::DoNotOptimize(detectability(m, profile, 0, cfg, {}, mode(state)));
  state.SetItemsProcessed(state.iterations() * state.range(1) * static_cast<std::int64_t>(cfg.rho_grid.size()));
}

void BM_Propagate(benchmark::State& state) {
  const auto s = make_stock_advisor(static_cast<int>(state.range(0)));
  const auto profile = null_profile(s.model);
  for (auto _ : state) benchmark::DoNotOptimize(propagate(s.model, profile, {}));
}

}  // namespace

BENCHMARK_CAPTURE(BM_EvaluateAll, paperclip_coarse, "paperclip-grid", "coarse")->Arg(0)->Arg(1);
BENCHMARK_CAPTURE(BM_EvaluateAll, paperclip_importance, "paperclip-grid", "importance")->Arg(0)->Arg(1);
BENCHMARK_CAPTURE(BM_EvaluateAll, stock_js, "stock-advisor", "div:js")->Arg(0)->Arg(1);
BENCHMARK(BM_HillClimb)->Arg(0)->Arg(1);
BENCHMARK(BM_Detectability)->Args({0, 1000})->Args({1, 1000})->Args({0, 10000})->Args({1, 10000});
BENCHMARK(BM_Propagate)->Arg(100)->Arg(1000);

BENCHMARK_MAIN();
