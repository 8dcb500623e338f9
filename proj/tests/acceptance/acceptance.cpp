// Acceptance checks 1-9. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Pass criterion numbers as arguments to run a subset.

#include "cabps/bench_harness.hpp"
#include "cabps/config.hpp"
#include "cabps/dynamics.hpp"
#include "cabps/events_rates.hpp"
#include "cabps/experiment.hpp"
#include "cabps/metropolised_core.hpp"
#include "cabps/samplers.hpp"
#include "cabps/softabs_metric.hpp"
#include "cabps/target_models.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace cabps;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [violated]");
  }
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. SoftAbs metric partials against finite differences of build_metric.
Outcome metric_partials() {
  const auto t0 = std::chrono::steady_clock::now();
  BananaTarget t;
  oracle::Gen g(101);
  double worst = 0;
  for (int k = 0; k < 50; ++k) {
    const Vector x = g.banana_point();
    const LocalGeometry geom = local_geometry(t, x);
    const MetricDerivatives d = metric_derivatives(t, geom);
    for (Index i = 0; i < 2; ++i) {
      const Matrix fd = oracle::fd_matrix_partial(
          [&](const Vector& y) { return build_metric(t.hessian(y)).G; }, x, i);
      worst = std::max(worst, oracle::rel_err(d.partials[i], fd));
    }
  }
  Outcome o;
  o.require(worst < 1e-4, fmt("worst relative error %.2e < 1e-4", worst));
  const double s = seconds_since(t0);
  o.require(s < 30, fmt("%.1f s < 30 s", s));
  return o;
}

double rho_fd(const FlowCoefficients& c, const Vector& v) {
  const auto field = [&](const Vector& w) { return velocity_field(c, w); };
  return -(oracle::fd_jacobian(field, v).trace() - field(v).dot(c.G * v));
}

// 2. Fixed-x and fixed-v forms of rho and rho_L, and the divergence oracle.
Outcome rate_forms() {
  BananaTarget t;
  oracle::Gen g(202);
  double forms = 0, fd = 0;
  for (int k = 0; k < 100; ++k) {
    const Vector x = g.banana_point();
    const Vector v = g.normal_vector(2);
    const LocalGeometry geom = local_geometry(t, x);
    const MetricDerivatives d = metric_derivatives(t, geom);
    for (FlowMode m : {FlowMode::SplitLagrangian, FlowMode::CovarianceAdaptive}) {
      const FlowCoefficients c = flow_coefficients(geom, d, m);
      const double a = rho_fixed_v(geom.metric, d, geom.grad_log_pi, v, m);
      const double b = rho_fixed_x(c, v);
      const double r = rho_fd(c, v);
      forms = std::max(forms, std::abs(a - b) / std::max(1.0, std::abs(a)));
      fd = std::max({fd, std::abs(a - r) / std::max(1.0, std::abs(r)),
                     std::abs(b - r) / std::max(1.0, std::abs(r))});
    }
  }
  Outcome o;
  o.require(forms < 1e-9, fmt("forms agree to %.2e < 1e-9", forms));
  o.require(fd < 1e-5, fmt("finite-difference divergence %.2e < 1e-5", fd));
  return o;
}

// 3. rho = rho_L + v . grad log pi.
Outcome decomposition() {
  oracle::Gen g(303);
  BananaTarget b;
  AnisotropicGaussianTarget gs(20, 1e3);
  double worst = 0;
  for (int k = 0; k < 1000; ++k) {
    const bool banana = k % 2;
    const TargetModel& t = banana ? static_cast<const TargetModel&>(b) : gs;
    const Vector x = banana ? g.banana_point() : g.normal_vector(20);
    const Vector v = g.normal_vector(t.dim());
    const LocalGeometry geom = local_geometry(t, x);
    const MetricDerivatives d = metric_derivatives(t, geom);
    // The two sides come from different formulas so the check is not circular.
    const double sl = rho_fixed_x(flow_coefficients(geom, d, FlowMode::SplitLagrangian), v);
    const double ca = rho_fixed_v(geom.metric, d, geom.grad_log_pi, v,
                                  FlowMode::CovarianceAdaptive);
    worst = std::max(worst, std::abs(sl - (ca + v.dot(geom.grad_log_pi))) /
                                std::max(1.0, std::abs(sl)));
  }
  Outcome o;
  o.require(worst < 1e-10, fmt("worst residual %.2e < 1e-10", worst));
  return o;
}

// 4. Reflection contract.
Outcome reflection() {
  oracle::Gen g(404);
  BananaTarget b;
  AnisotropicGaussianTarget gs(20, 1e4);
  double flip = 0, invol = 0, norm = 0;
  int draws = 0;
  for (const TargetModel* t : {static_cast<const TargetModel*>(&b),
                               static_cast<const TargetModel*>(&gs)}) {
    for (int k = 0; k < 1000; ++k) {
      const Vector x = t == &b ? g.banana_point() : g.normal_vector(20);
      const LocalGeometry geom = local_geometry(*t, x);
      const Vector& w = geom.grad_log_pi;
      const Vector v = g.normal_vector(t->dim());
      const Vector r = reflect(v, w, geom.metric);
      const double s = std::max(1.0, std::abs(v.dot(w)));
      flip = std::max(flip, std::abs(r.dot(w) + v.dot(w)) / s);
      invol = std::max(invol, (reflect(r, w, geom.metric) - v).norm() /
                                  std::max(1.0, v.norm()));
      const double gv = v.dot(geom.metric.G * v);
      norm = std::max(norm, std::abs(r.dot(geom.metric.G * r) - gv) / std::max(1.0, gv));
      ++draws;
    }
  }
  Outcome o;
  o.require(flip < 1e-10, fmt("v.grad flips to %.2e", flip));
  o.require(invol < 1e-10, fmt("involution to %.2e", invol));
  o.require(norm < 1e-10, fmt("G-norm kept to %.2e", norm));
  o.require(draws == 2000, fmt("%.0f draws", draws));
  return o;
}

// 5. Volume factor against the flow-map Jacobian, and psi(w) psi(R(w)) = 1.
Outcome volume_factor() {
  BananaTarget t;
  oracle::Gen g(505);
  const RateEvaluator none = [](const Vector&) { return RatePair{}; };
  IntegratorSettings fine;
  fine.steps_per_unit_time = 2000;
  double jac = 0, psi = 0;
  int segments = 0;
  for (int k = 0; segments < 20; ++k) {
    const Vector x = g.banana_point();
    const LocalGeometry geom = local_geometry(t, x);
    const MetricDerivatives d = metric_derivatives(t, geom);
    const FlowCoefficients c =
        flow_coefficients(geom, d, k % 2 ? FlowMode::SplitLagrangian
                                         : FlowMode::CovarianceAdaptive);
    Rng rng(5000 + k);
    const Vector v0 = 0.3 * refresh_velocity(geom.metric, rng);
    const double tau = 0.1;
    const VelocitySegment s = integrate_velocity_flow(c, v0, 1e300, tau, none, 1.0, fine);
    if (!s.valid) continue;
    auto flow = [&](const Vector& v) {
      return integrate_velocity_flow(c, v, 1e300, tau, none, 1.0, fine).v_end;
    };
    const double fd = std::log(std::abs(oracle::fd_jacobian5(flow, v0, 1e-6).determinant()));
    jac = std::max(jac, std::abs(segment_volume_log(s) - fd));
    const VelocitySegment back =
        integrate_velocity_flow(c, s.v_end, 1e300, tau, none, -1.0, fine);
    psi = std::max(psi, std::abs(segment_volume_log(s) + segment_volume_log(back)));
    ++segments;
  }
  // Whole paths: log psi(w) + log psi(R(w)).
  MetroParams p;
  p.mode = FlowMode::SplitLagrangian;
  p.window_T = 0.5;
  p.grid_step = 0.05;
  Rng rng(55);
  for (int k = 0; k < 50; ++k) {
    const Vector x = g.banana_point();
    const PdmpState z0{x, refresh_velocity(local_geometry(t, x).metric, rng), Phase::Velocity};
    const ProposedPath w = propose_path(t, z0, p, 1, rng);
    if (!w.valid) continue;
    psi = std::max(psi, std::abs(w.accounting.log_jacobian +
                                 reverse_path(w).accounting.log_jacobian));
  }
  Outcome o;
  o.require(jac < 1e-4, fmt("log psi vs FD log|det J| %.2e < 1e-4 on %.0f segments", jac,
                            segments));
  o.require(psi < 1e-6, fmt("log psi(w) + log psi(R(w)) %.2e < 1e-6", psi));
  return o;
}

struct Moments {
  double ks, mean, var_err;
};

Moments moments(const ChainOutput& out) {
  const auto kept = collect_samples(out, 0.1);
  const Index d = kept.front().size();
  Vector mean = Vector::Zero(d), sq = Vector::Zero(d);
  std::vector<double> first;
  for (const auto& x : kept) {
    mean += x;
    first.push_back(x[0]);
  }
  mean /= static_cast<double>(kept.size());
  for (const auto& x : kept) sq += (x - mean).cwiseAbs2();
  sq /= static_cast<double>(kept.size());
  return {ks_distance(first, standard_normal_cdf), mean.cwiseAbs().maxCoeff(),
          (sq.array() - 1.0).abs().maxCoeff()};
}

// 6. Stationarity on the 2-d standard Gaussian.
Outcome stationarity() {
  const auto t0 = std::chrono::steady_clock::now();
  AnisotropicGaussianTarget t(2, 1.0);
  const Budget budget = Budget::of_windows(200000);
  MetroParams p;
  p.window_T = 1.0;
  p.grid_step = 0.1;
  Outcome o;
  for (const char* kind : {"bps", "ca_bps", "sl_pdmp"}) {
    Rng rng(derive_seed(606, std::string(kind).size()));
    const std::string k = kind;
    const ChainOutput out = k == "bps"       ? run_bps(t, BpsParams{}, budget, rng)
                            : k == "ca_bps" ? run_ca_bps(t, p, budget, rng)
                                            : run_sl_pdmp(t, p, budget, rng);
    const Moments m = moments(out);
    o.require(m.ks < 0.02 && m.mean < 0.03 && m.var_err < 0.05,
              k + fmt(" KS %.4f, |mean| %.4f, var err %.4f", m.ks, m.mean, m.var_err));
    if (k == "ca_bps")
      o.require(out.flips == 0, fmt("ca_bps flips %.0f", static_cast<double>(out.flips)));
  }
  AnisotropicGaussianTarget aniso(20, 1e4);
  Rng rng(607);
  const ChainOutput a = run_ca_bps(aniso, p, Budget::of_windows(5000), rng);
  o.require(a.flips == 0, fmt("ca_bps flips on d=20, delta=1e4: %.0f",
                              static_cast<double>(a.flips)));
  const double s = seconds_since(t0);
  o.require(s < 600, fmt("%.0f s < 600 s", s));
  return o;
}

// 7. First bounce time of BPS on the 1-d Gaussian from (0, 1).
Outcome bounce_law() {
  AnisotropicGaussianTarget t(1, 1.0);
  Rng rng(707);
  std::vector<double> times;
  for (int k = 0; k < 100000; ++k) {
    const auto tau = bps_next_bounce(t, Vector{{0.0}}, Vector{{1.0}},
                                     std::numeric_limits<double>::infinity(), 0.1, rng);
    times.push_back(tau ? *tau : std::numeric_limits<double>::infinity());
  }
  const double ks = ks_distance(times, [](double s) { return 1 - std::exp(-s * s / 2); });
  Outcome o;
  o.require(ks < 0.01, fmt("KS %.4f < 0.01 at n = 1e5", ks));
  return o;
}

// 8. Direction of the efficiency comparison (1/r at eps = 0, beta = 1).
Outcome reproduction() {
  const auto t0 = std::chrono::steady_clock::now();
  const unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  Outcome o;
  auto efficiency_at = [&](const ExperimentResult& r, double gap) {
    for (const auto& row : r.ratios)
      if (row.pairing == "matched" && row.beta == 1.0 && row.epsilon == 0.0 &&
          (gap == 0.0 || row.gap == gap))
        return row;
    return RatioRow{};
  };
  auto load = [](const std::string& name) {
    ExperimentConfig c = experiment_config_from(
        Config::load(std::string(CABPS_PRESET_DIR) + "/" + name));
    c.replicates = 20;
    c.budget = Budget::of_seconds(3.0);
    c.tune = false;
    c.record_wall_time = true;
    c.betas = {1.0};
    c.epsilons = {0.0};
    return c;
  };

  const ExperimentResult banana = run_experiment(load("banana.cfg"), jobs);
  const RatioRow b = efficiency_at(banana, 0.0);
  o.require(b.efficiency < 1.0,
            fmt("banana 1/r(0) = %.3g < 1 (KS bps %.4f, ca %.4f)", b.efficiency, b.ks_bps,
                b.ks_ca));

  const ExperimentResult gauss = run_experiment(load("gaussian.cfg"), jobs);
  for (const auto& row : gauss.ratios)
    if (row.pairing == "matched" && row.epsilon == 0.0)
      std::printf("  gaussian delta=%g: 1/r(0) = %.3g (KS bps %.4f, ca %.4f)\n", row.gap,
                  row.efficiency, row.ks_bps, row.ks_ca);
  const RatioRow g10 = efficiency_at(gauss, 10.0);
  const RatioRow g1e4 = efficiency_at(gauss, 1e4);
  o.require(g10.efficiency < 1.0, fmt("gaussian delta=10: 1/r(0) = %.3g < 1", g10.efficiency));
  o.require(g1e4.efficiency > 1.0,
            fmt("gaussian delta=1e4: 1/r(0) = %.3g > 1", g1e4.efficiency));
  const double s = seconds_since(t0);
  o.require(s < 7200, fmt("%.0f s < 7200 s", s));
  return o;
}

// 9. Path reversal, the cell clock and the acceptance round trip.
Outcome machinery() {
  Outcome o;
  BananaTarget t;
  oracle::Gen g(909);
  Rng rng(909);
  MetroParams p;
  p.window_T = 0.5;
  p.grid_step = 0.05;

  bool exact = true;
  double round_trip = 0;
  int trips = 0;
  for (FlowMode m : {FlowMode::SplitLagrangian, FlowMode::CovarianceAdaptive}) {
    p.mode = m;
    for (int k = 0; k < 100; ++k) {
      const Vector x = g.banana_point();
      const LocalGeometry g0 = local_geometry(t, x);
      const PdmpState z0{x, refresh_velocity(g0.metric, rng),
                         k % 2 ? Phase::Velocity : Phase::Position};
      const int dir = k % 3 ? 1 : -1;
      const ProposedPath w = propose_path(t, z0, p, dir, rng);
      const PathSkeleton rr = reverse_path(reverse_path(w.skeleton));
      exact = exact && rr.events == w.skeleton.events && rr.mirrored == w.skeleton.mirrored &&
              rr.direction == w.skeleton.direction && rr.initial.x == w.skeleton.initial.x &&
              rr.terminal.v == w.skeleton.terminal.v;
      if (!w.valid) continue;
      const ProposedPath r = reverse_path(w);
      const LocalGeometry gT = local_geometry(t, w.skeleton.terminal.x);
      const double mu0 = log_joint_density(g0, z0.v);
      const double muT = log_joint_density(gT, w.skeleton.terminal.v);
      auto psi = [](const ProposedPath& q, int d) {
        return d == 1 ? -q.accounting.log_jacobian : q.accounting.log_jacobian;
      };
      const double a = acceptance_log_ratio(path_log_density(w, ProcessRole::Forward),
                                            path_log_density(w, ProcessRole::Reverse), mu0,
                                            muT, psi(w, dir), dir);
      const double b = acceptance_log_ratio(path_log_density(r, ProcessRole::Forward),
                                            path_log_density(r, ProcessRole::Reverse), muT,
                                            mu0, psi(r, -dir), -dir);
      if (!std::isfinite(a)) continue;
      round_trip = std::max(round_trip, std::abs(a + b) / std::max(1.0, std::abs(a)));
      ++trips;
    }
  }
  o.require(exact, "R(R(w)) == w exactly");
  o.require(round_trip < 1e-8 && trips > 50,
            fmt("round-trip log-ratio sum %.2e < 1e-8 over %.0f paths", round_trip, trips));

  // Two competing constant rates 0.3 and 0.7 over T = 1: Poisson(1) counts.
  Rng clock_rng(9090);
  const int n = 100000;
  std::vector<int> hist(7, 0);
  for (int r = 0; r < n; ++r) {
    double elapsed = 0;
    int count = 0;
    for (;;) {
      double integral = 0;
      Index cells = 0;
      const auto ev = next_cell_event([](double) { return CellRates{0.3, 0.7}; },
                                      1.0 - elapsed, 0.1, clock_rng, integral, cells);
      if (!ev) break;
      elapsed += ev->time;
      ++count;
    }
    ++hist[std::min(count, 6)];
  }
  double chi2 = 0, tail = 1;
  for (int k = 0; k <= 6; ++k) {
    const double q = k < 6 ? std::exp(-1.0) / std::tgamma(k + 1.0) : tail;
    tail -= q;
    chi2 += std::pow(hist[k] - n * q, 2) / (n * q);
  }
  o.require(chi2 < 16.81, fmt("event-count chi-square %.2f < 16.81 (6 dof, p = 0.01)", chi2));
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"derivative correctness", metric_partials},
      {"rate-formula equivalence", rate_forms},
      {"rate decomposition", decomposition},
      {"reflection contract", reflection},
      {"volume factor", volume_factor},
      {"stationarity", stationarity},
      {"BPS event-time law", bounce_law},
      {"qualitative reproduction", reproduction},
      {"Metropolised machinery", machinery},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    all = all && o.pass;
    std::printf("criterion %d (%s): %s  [%.1f s] %s\n", id, criteria[i].first.c_str(),
                o.pass ? "PASS" : "FAIL", seconds_since(t0), o.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
