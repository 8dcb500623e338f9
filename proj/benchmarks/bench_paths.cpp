#include "cabps/bench_harness.hpp"
#include "cabps/metropolised_core.hpp"
#include "cabps/samplers.hpp"
#include "cabps/target_models.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace cabps;

// One proposal window on the banana; range(0) is the hardness, range(1) the mode.
void BM_ProposePath(benchmark::State& state) {
  BananaTarget t;
  MetroParams p;
  p.hardness = static_cast<double>(state.range(0));
  p.mode = state.range(1) ? FlowMode::CovarianceAdaptive : FlowMode::SplitLagrangian;
  p.window_T = 0.5;
  p.grid_step = 0.05;
  Rng rng(4);
  const Vector x{{1.0, 1.0}};
  const PdmpState z0{x, refresh_velocity(local_geometry(t, x, p.hardness).metric, rng)};
  for (auto _ : state) benchmark::DoNotOptimize(propose_path(t, z0, p, 1, rng));
}
BENCHMARK(BM_ProposePath)
    ->ArgsProduct({{10, 1000, 1000000}, {0, 1}})
    ->Unit(benchmark::kMicrosecond);

void BM_MhStepGaussian(benchmark::State& state) {
  AnisotropicGaussianTarget t(20, static_cast<double>(state.range(0)));
  MetroParams p;
  p.fixed_metric = fixed_metric_for(t, p.hardness);
  Rng rng(5);
  PdmpState s{Vector::Zero(20), Vector::Zero(20)};
  for (auto _ : state) s = mh_step(t, s, p, rng).state;
}
BENCHMARK(BM_MhStepGaussian)->Arg(10)->Arg(10000)->Unit(benchmark::kMicrosecond);

void BM_BpsWindows(benchmark::State& state) {
  AnisotropicGaussianTarget t(20, static_cast<double>(state.range(0)));
  for (auto _ : state) {
    Rng rng(6);
    benchmark::DoNotOptimize(run_bps(t, BpsParams{}, Budget::of_windows(1000), rng));
  }
}
BENCHMARK(BM_BpsWindows)->Arg(10)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_KsDistance(benchmark::State& state) {
  Rng rng(7);
  std::vector<double> xs(static_cast<std::size_t>(state.range(0)));
  for (auto& x : xs) x = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(ks_distance(xs, standard_normal_cdf));
}
BENCHMARK(BM_KsDistance)->Arg(1000)->Arg(100000);

}  // namespace
