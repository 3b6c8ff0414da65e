#include <benchmark/benchmark.h>

#include "awsde/estimator.hpp"

namespace {

void run_estimate(benchmark::State& state, const awsde::ExecutionPolicy& policy) {
  const auto mu = awsde::make_stepper(awsde::builtin_model("brownian"), awsde::SchemeKind::em);
  const auto nu = awsde::make_stepper(awsde::builtin_model("perturbed_sign", {{"k", 5}}),
                                      awsde::SchemeKind::em);
  const awsde::TimeGrid grid(1.0, 512);
  const std::int64_t paths = state.range(0);
  for (auto _ : state) {
    const auto r = awsde::estimate_aw(mu, nu, 2.0, grid, paths, 7, policy);
    benchmark::DoNotOptimize(r.estimate);
  }
  state.SetItemsProcessed(state.iterations() * paths);
}

void run_rates(benchmark::State& state, const awsde::ExecutionPolicy& policy) {
  const auto config = awsde::make_stepper(awsde::builtin_model("cubic"), awsde::SchemeKind::tiem_mono);
  const std::int64_t paths = state.range(0);
  for (auto _ : state) {
    const auto c = awsde::strong_error_curve(config, 2.0, {1.0 / 64, 1.0 / 128, 1.0 / 256},
                                             1.0 / 1024, 1.0, paths, 7, policy);
    benchmark::DoNotOptimize(c.points.front().err_sup);
  }
  state.SetItemsProcessed(state.iterations() * paths);
}

void BM_EstimateSerial(benchmark::State& s) { run_estimate(s, awsde::ExecutionPolicy::serial()); }
void BM_EstimateOpenMP(benchmark::State& s) { run_estimate(s, {}); }
void BM_RateCurveSerial(benchmark::State& s) { run_rates(s, awsde::ExecutionPolicy::serial()); }
void BM_RateCurveOpenMP(benchmark::State& s) { run_rates(s, {}); }

}  // namespace

BENCHMARK(BM_EstimateSerial)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EstimateOpenMP)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RateCurveSerial)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RateCurveOpenMP)->Arg(256)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
