#include "cabps/validation.hpp"

#include "cabps/bench_harness.hpp"
#include "cabps/dynamics.hpp"
#include "cabps/events_rates.hpp"
#include "cabps/finite_difference.hpp"
#include "cabps/metropolised_core.hpp"
#include "cabps/samplers.hpp"
#include "cabps/softabs_metric.hpp"
#include "cabps/target_models.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>

namespace cabps {

namespace {

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

double rel_err(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / std::max(1e-12, b.norm());
}

Vector banana_point(Rng& rng) {
  Vector x(2);
  x[0] = -1.5 + 4.0 * rng.uniform();
  x[1] = x[0] * x[0] + 0.05 * rng.normal();
  return x;
}

struct Tracker {
  double worst = 0.0;
  void see(double e) {
    if (!(e <= worst)) worst = std::isnan(e) ? INFINITY : e;
  }
};

SuiteResult timed(const std::string& name, const std::string& invariant,
                  double tolerance, const std::function<double()>& body) {
  SuiteResult r;
  r.name = name;
  r.invariant = invariant;
  r.tolerance = tolerance;
  const auto start = std::chrono::steady_clock::now();
  try {
    r.worst = body();
    r.passed = r.worst <= tolerance;
  } catch (const std::exception& e) {
    r.passed = false;
    r.worst = INFINITY;
    r.detail = e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

double metric_partials(std::uint64_t seed) {
  const BananaTarget banana;
  Rng rng(seed);
  Tracker t;
  for (int n = 0; n < 50; ++n) {
    const Vector x = banana_point(rng);
    const LocalGeometry geom = local_geometry(banana, x, kDefaultHardness);
    const MetricDerivatives d = metric_derivatives(banana, geom);
    for (Index i = 0; i < 2; ++i) {
      const Matrix fd = fd::partial(
          [&](const Vector& y) { return build_metric(banana.hessian(y)).G; }, x, i);
      t.see(rel_err(d.partials[static_cast<std::size_t>(i)], fd));
    }
    const Vector fd_logdet = fd::gradient(
        [&](const Vector& y) { return 0.5 * build_metric(banana.hessian(y)).log_det; }, x,
        1e-8);  // small eigenvalues move fast along x; keep the stencil inside one regime
    t.see((d.grad_half_logdet - fd_logdet).norm() / std::max(1.0, fd_logdet.norm()));
  }
  return t.worst;
}

// -(1/mu) div_v(Phi_v mu) with mu(v) ~ exp(-v'Gv/2), by finite differences.
double fd_rho(const FlowCoefficients& c, const Vector& v) {
  const double div = fd::divergence(
      [&](const Vector& w) { return velocity_field(c, w); }, v);
  const Vector grad_log_mu = fd::gradient(
      [&](const Vector& w) { return -0.5 * w.dot(c.G * w); }, v);
  return -div - velocity_field(c, v).dot(grad_log_mu);
}

double rate_equivalence(std::uint64_t seed, bool fd_check) {
  const BananaTarget banana;
  Rng rng(seed);
  Tracker t;
  for (int n = 0; n < 100; ++n) {
    const Vector x = banana_point(rng);
    const LocalGeometry geom = local_geometry(banana, x, kDefaultHardness);
    const MetricDerivatives d = metric_derivatives(banana, geom);
    const Vector v = refresh_velocity(geom.metric, rng);
    for (FlowMode mode : {FlowMode::SplitLagrangian, FlowMode::CovarianceAdaptive}) {
      const FlowCoefficients c = flow_coefficients(geom, d, mode);
      const double a = rho_fixed_x(c, v);
      const double b = rho_fixed_v(geom.metric, d, geom.grad_log_pi, v, mode);
      if (fd_check)
        t.see(rel_err(fd_rho(c, v), a));
      else
        t.see(rel_err(a, b));
    }
  }
  return t.worst;
}

double rate_decomposition(std::uint64_t seed) {
  const BananaTarget banana;
  Rng rng(seed);
  Tracker t;
  for (int n = 0; n < 100; ++n) {
    const Vector x = banana_point(rng);
    const LocalGeometry geom = local_geometry(banana, x, kDefaultHardness);
    const MetricDerivatives d = metric_derivatives(banana, geom);
    const Vector v = refresh_velocity(geom.metric, rng);
    const double rho = rho_fixed_x(flow_coefficients(geom, d, FlowMode::SplitLagrangian), v);
    const double rho_L =
        rho_fixed_x(flow_coefficients(geom, d, FlowMode::CovarianceAdaptive), v);
    t.see(rel_err(rho, rho_L + v.dot(geom.grad_log_pi)));
  }
  return t.worst;
}

double reflection(std::uint64_t seed) {
  const BananaTarget banana;
  const AnisotropicGaussianTarget gauss(5, 100.0);
  Rng rng(seed);
  Tracker t;
  for (int n = 0; n < 1000; ++n) {
    const bool use_banana = n % 2 == 0;
    const TargetModel& target = use_banana ? static_cast<const TargetModel&>(banana) : gauss;
    Vector x = use_banana ? banana_point(rng) : rng.normal_vector(gauss.dim());
    const MetricState m = build_metric(target.hessian(x));
    const Vector g = target.gradient(x);
    const Vector v = refresh_velocity(m, rng);
    const Vector w = reflect(v, g, m);
    const double scale = std::max(1.0, std::abs(v.dot(g)));
    t.see(std::abs(w.dot(g) + v.dot(g)) / scale);
    t.see((reflect(w, g, m) - v).norm() / std::max(1.0, v.norm()));
    const double n0 = v.dot(m.G * v);
    t.see(std::abs(w.dot(m.G * w) - n0) / std::max(1.0, n0));
  }
  return t.worst;
}

struct BananaSegment {
  FlowCoefficients coeffs;
  Vector v0;
  double duration;
};

BananaSegment banana_segment(const BananaTarget& banana, Rng& rng, FlowMode mode) {
  const Vector x = banana_point(rng);
  const LocalGeometry geom = local_geometry(banana, x, kDefaultHardness);
  const MetricDerivatives d = metric_derivatives(banana, geom);
  return {flow_coefficients(geom, d, mode), refresh_velocity(geom.metric, rng),
          0.05 + 0.2 * rng.uniform()};
}

VelocitySegment flow_for(const FlowCoefficients& c, const Vector& v0,
                         double duration, double direction) {
  const RateEvaluator zero = [](const Vector&) { return RatePair{}; };
  IntegratorSettings s;
  s.steps_per_unit_time = 2000.0;
  return integrate_velocity_flow(c, v0, 1e300, duration, zero, direction, s);
}

double volume_factor(std::uint64_t seed) {
  const BananaTarget banana;
  Rng rng(seed);
  Tracker t;
  for (int n = 0; n < 20; ++n) {
    const auto seg = banana_segment(
        banana, rng, n % 2 ? FlowMode::SplitLagrangian : FlowMode::CovarianceAdaptive);
    const VelocitySegment out = flow_for(seg.coeffs, seg.v0, seg.duration, 1.0);
    const Matrix J = fd::jacobian5(
        [&](const Vector& v) { return flow_for(seg.coeffs, v, seg.duration, 1.0).v_end; },
        seg.v0, 1e-6);
    const double fd_log = std::log(std::abs(J.determinant()));
    t.see(std::abs(segment_volume_log(out) - fd_log));
  }
  return t.worst;
}

double psi_round_trip(std::uint64_t seed) {
  const BananaTarget banana;
  Rng rng(seed);
  Tracker t;
  for (int n = 0; n < 20; ++n) {
    const auto seg = banana_segment(banana, rng, FlowMode::CovarianceAdaptive);
    const VelocitySegment fwd = flow_for(seg.coeffs, seg.v0, seg.duration, 1.0);
    const VelocitySegment back = flow_for(seg.coeffs, fwd.v_end, seg.duration, -1.0);
    t.see(std::abs(segment_volume_log(fwd) + segment_volume_log(back)));
  }
  // Whole-path acceptance ratios of w and R(w) cancel.
  MetroParams p;
  p.window_T = 0.5;
  p.grid_step = 0.05;
  for (FlowMode mode : {FlowMode::SplitLagrangian, FlowMode::CovarianceAdaptive}) {
    p.mode = mode;
    for (int n = 0; n < 20; ++n) {
      const Vector x = banana_point(rng);
      const LocalGeometry g0 = local_geometry(banana, x, p.hardness);
      const PdmpState z0{x, refresh_velocity(g0.metric, rng),
                         n % 2 ? Phase::Velocity : Phase::Position};
      const ProposedPath w = propose_path(banana, z0, p, 1, rng);
      if (!w.valid) continue;
      const ProposedPath r = reverse_path(w);
      const LocalGeometry gT = local_geometry(banana, w.skeleton.terminal.x, p.hardness);
      const double mu0 = log_joint_density(g0, z0.v);
      const double muT = log_joint_density(gT, w.skeleton.terminal.v);
      const double a = acceptance_log_ratio(
          path_log_density(w, ProcessRole::Forward), path_log_density(w, ProcessRole::Reverse),
          mu0, muT, -w.accounting.log_jacobian, 1);
      const double b = acceptance_log_ratio(
          path_log_density(r, ProcessRole::Forward), path_log_density(r, ProcessRole::Reverse),
          muT, mu0, r.accounting.log_jacobian, -1);
      if (std::isfinite(a)) t.see(std::abs(a + b) / std::max(1.0, std::abs(a)));
    }
  }
  return t.worst;
}

double stationarity_smoke(std::uint64_t seed, double effort) {
  const AnisotropicGaussianTarget gauss(2, 1.0);
  const auto windows = static_cast<std::size_t>(std::max(1000.0, 20000.0 * effort));
  MetroParams p;
  p.window_T = 1.0;
  p.grid_step = 0.1;
  double worst = 0.0;
  for (int kind = 0; kind < 3; ++kind) {
    Rng rng(derive_seed(seed, 77, static_cast<std::uint64_t>(kind)));
    ChainOutput out;
    if (kind == 0)
      out = run_bps(gauss, BpsParams{1.0, 0.1, std::nullopt}, Budget::of_windows(windows), rng);
    else if (kind == 1)
      out = run_ca_bps(gauss, p, Budget::of_windows(windows), rng);
    else
      out = run_sl_pdmp(gauss, p, Budget::of_windows(windows), rng);
    if (kind == 1 && out.flips != 0) return INFINITY;
    const auto kept = collect_samples(out, 0.1);
    std::vector<double> first(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) first[i] = kept[i][0];
    worst = std::max(worst, ks_distance(first, standard_normal_cdf));
  }
  return worst;
}

}  // namespace

std::vector<SuiteResult> run_validation(const ValidationOptions& o) {
  std::vector<SuiteResult> out;
  out.push_back(timed("metric_partials", "dG/dx_i and grad(log det G)/2 match finite differences",
                      1e-4, [&] { return metric_partials(o.seed); }));
  out.push_back(timed("rate_forms", "fixed-x and fixed-v rho agree", 1e-9,
                      [&] { return rate_equivalence(o.seed + 1, false); }));
  out.push_back(timed("rate_divergence_fd", "rho matches -(1/mu) div(Phi mu) by FD",
                      1e-5, [&] { return rate_equivalence(o.seed + 2, true); }));
  out.push_back(timed("rate_decomposition", "rho = rho_L + v.grad log pi", 1e-10,
                      [&] { return rate_decomposition(o.seed + 3); }));
  out.push_back(timed("reflection", "flip of v.g, involution, G-norm", 1e-10,
                      [&] { return reflection(o.seed + 4); }));
  out.push_back(timed("volume_factor", "log psi matches FD Jacobian log-determinant", 1e-4,
                      [&] { return volume_factor(o.seed + 5); }));
  out.push_back(timed("psi_round_trip", "psi(w) psi(R(w)) = 1 and path log-ratios cancel", 1e-6,
                      [&] { return psi_round_trip(o.seed + 6); }));
  const double ks_tol = 0.04 / std::sqrt(std::max(0.05, o.effort));
  out.push_back(timed("stationarity_smoke", "2-d Gaussian first-marginal KS, zero CA flips",
                      ks_tol, [&] { return stationarity_smoke(o.seed + 7, o.effort); }));
  return out;
}

}  // namespace cabps
