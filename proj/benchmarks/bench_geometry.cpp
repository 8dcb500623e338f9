#include "cabps/dynamics.hpp"
#include "cabps/events_rates.hpp"
#include "cabps/softabs_metric.hpp"
#include "cabps/target_models.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace cabps;

void BM_BuildMetric(benchmark::State& state) {
  const Index d = state.range(0);
  Rng rng(1);
  Matrix a(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) a(i, j) = rng.normal();
  const Matrix h = 0.5 * (a + a.transpose());
  for (auto _ : state) benchmark::DoNotOptimize(build_metric(h));
}
BENCHMARK(BM_BuildMetric)->Arg(2)->Arg(5)->Arg(20);

// Local geometry plus Christoffel symbols on the banana, across hardness.
void BM_BananaGeometry(benchmark::State& state) {
  const double hardness = static_cast<double>(state.range(0));
  BananaTarget t;
  const Vector x{{0.7, 0.5}};
  for (auto _ : state) {
    const LocalGeometry geom = local_geometry(t, x, hardness);
    benchmark::DoNotOptimize(metric_derivatives(t, geom));
  }
}
BENCHMARK(BM_BananaGeometry)->Arg(10)->Arg(1000)->Arg(1000000);

void BM_VelocitySegment(benchmark::State& state) {
  const double hardness = static_cast<double>(state.range(0));
  BananaTarget t;
  const Vector x{{0.7, 0.5}};
  const LocalGeometry geom = local_geometry(t, x, hardness);
  const FlowCoefficients c =
      flow_coefficients(geom, metric_derivatives(t, geom), FlowMode::SplitLagrangian);
  Rng rng(2);
  const Vector v0 = refresh_velocity(geom.metric, rng);
  const RateEvaluator rate = [&c](const Vector& v) {
    const double r = rho_fixed_x(c, v);
    return RatePair{positive_part(r), positive_part(-r)};
  };
  for (auto _ : state)
    benchmark::DoNotOptimize(integrate_velocity_flow(c, v0, 1e300, 0.1, rate));
}
BENCHMARK(BM_VelocitySegment)->Arg(10)->Arg(1000)->Arg(1000000);

void BM_Reflect(benchmark::State& state) {
  AnisotropicGaussianTarget t(20, 1e3);
  Rng rng(3);
  const Vector x = rng.normal_vector(20);
  const LocalGeometry geom = local_geometry(t, x);
  const Vector v = refresh_velocity(geom.metric, rng);
  for (auto _ : state) benchmark::DoNotOptimize(reflect(v, geom.grad_log_pi, geom.metric));
}
BENCHMARK(BM_Reflect);

}  // namespace
