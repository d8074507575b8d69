#include <benchmark/benchmark.h>

#include <vector>

#include "aoicache/analytics.hpp"
#include "aoicache/desim.hpp"
#include "aoicache/model.hpp"
#include "aoicache/optimizer.hpp"

using namespace aoicache;

namespace {

const model::ServiceRates kRates(5000.0, 1500.0);

std::vector<double> zipf_rates(std::size_t n) {
  auto q = model::zipf_popularities(n, 0.56);
  for (auto& x : q) x *= 2000.0;
  return q;
}

}  // namespace

static void BM_PredictSingle(benchmark::State& state) {
  const analytics::LoadPoint point(400.0, 0.01, kRates);
  for (auto _ : state) benchmark::DoNotOptimize(analytics::predict_single(point));
}
BENCHMARK(BM_PredictSingle);

static void BM_MultiSourcePredict(benchmark::State& state) {
  const auto catalog =
      model::Catalog::zipf(static_cast<std::size_t>(state.range(0)), 0.56, 2000.0, 0.05);
  for (auto _ : state) benchmark::DoNotOptimize(analytics::multi_source_predict(catalog, kRates));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MultiSourcePredict)->RangeMultiplier(10)->Range(10, 10'000);

static void BM_Simulation(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  desim::SimConfig cfg{1, model::ServiceRates(1000.0, 1000.0),
                       model::Catalog::zipf(n, 0.56, 400.0, 0.01), 100'000, 0.1,
                       desim::Policy::freshness_window};
  for (auto _ : state) benchmark::DoNotOptimize(desim::run_simulation(cfg));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(cfg.request_budget));
}
BENCHMARK(BM_Simulation)->Arg(1)->Arg(10)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_InvertPrice(benchmark::State& state) {
  double nu = 1e-3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(optimizer::invert_price(100.0, nu));
    nu = nu < 1e3 ? nu * 1.1 : 1e-3;
  }
}
BENCHMARK(BM_InvertPrice);

static void BM_Solve(benchmark::State& state) {
  const optimizer::OptProblem problem(zipf_rates(static_cast<std::size_t>(state.range(0))), kRates,
                                      0.1);
  for (auto _ : state) benchmark::DoNotOptimize(optimizer::solve(problem));
}
BENCHMARK(BM_Solve)->Arg(10)->Arg(100)->Arg(1000)->Unit(benchmark::kMicrosecond);

static void BM_SolveOracle(benchmark::State& state) {
  const optimizer::OptProblem problem(zipf_rates(10), kRates, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(optimizer::solve_oracle(problem));
}
BENCHMARK(BM_SolveOracle)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
