#include "cabps/samplers.hpp"

#include "cabps/events_rates.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace cabps {

namespace {

using Clock = std::chrono::steady_clock;
constexpr double kInf = std::numeric_limits<double>::infinity();

double elapsed(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool budget_exhausted(const Budget& b, std::size_t windows,
                      Clock::time_point start) {
  if (b.windows > 0 && windows >= b.windows) return true;
  if (b.seconds > 0.0 && elapsed(start) >= b.seconds) return true;
  return false;
}

double poly_eval(const std::vector<double>& p, double t) {
  double r = 0.0;
  for (auto it = p.rbegin(); it != p.rend(); ++it) r = r * t + *it;
  return r;
}

std::vector<double> poly_derivative(const std::vector<double>& p) {
  std::vector<double> d;
  for (std::size_t i = 1; i < p.size(); ++i) d.push_back(p[i] * double(i));
  return d;
}

// Max of p over [lo, hi] for degree <= 3.
double poly_max(const std::vector<double>& p, double lo, double hi) {
  double m = std::max(poly_eval(p, lo), poly_eval(p, hi));
  const auto d = poly_derivative(p);
  auto consider = [&](double t) {
    if (t > lo && t < hi) m = std::max(m, poly_eval(p, t));
  };
  if (d.size() == 2 && d[1] != 0.0) {
    consider(-d[0] / d[1]);
  } else if (d.size() == 3) {
    const double a = d[2], b = d[1], c = d[0];
    if (a == 0.0) {
      if (b != 0.0) consider(-c / b);
    } else {
      const double disc = b * b - 4.0 * a * c;
      if (disc >= 0.0) {
        const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
        if (q != 0.0) {
          consider(q / a);
          consider(c / q);
        } else {
          consider(0.0);
        }
      }
    }
  } else if (d.size() > 3) {
    throw ContractViolation("bps: rate polynomials above cubic unsupported");
  }
  return m;
}

// Exact inversion of integral_0^tau [a + b t]^+ dt = e.
double invert_linear(double a, double b, double e) {
  if (b > 0.0) {
    if (a >= 0.0) return 2.0 * e / (a + std::sqrt(a * a + 2.0 * b * e));
    return -a / b + std::sqrt(2.0 * e / b);
  }
  if (a <= 0.0) return kInf;
  if (b == 0.0) return e / a;
  const double disc = a * a + 2.0 * b * e;
  if (disc < 0.0) return kInf;
  return 2.0 * e / (a + std::sqrt(disc));
}

void record_metro_counts(ChainOutput& out, const MhStepResult& r) {
  out.bounces += r.bounces;
  out.flips += r.flips;
  ++out.refreshments;
  if (r.accepted)
    ++out.accepts;
  else
    ++out.rejects;
  if (r.invalid_proposal) ++out.invalid;
}

ChainOutput run_metropolised(const TargetModel& target,
                             const MetroParams& params, const Budget& budget,
                             Rng& rng, std::optional<Vector> x0) {
  require(params.window_T > 0.0, "sampler: window_T must be positive");
  require(params.grid_step > 0.0, "sampler: grid_step must be positive");
  ChainOutput out;
  std::ostringstream echo;
  echo << (params.mode == FlowMode::CovarianceAdaptive ? "ca_bps" : "sl_pdmp")
       << " window_T=" << params.window_T << " grid_step=" << params.grid_step
       << " hardness=" << params.hardness;
  out.config_echo = echo.str();
  if (budget.empty()) return out;

  MetroParams p = params;
  if (!p.fixed_metric) p.fixed_metric = fixed_metric_for(target, p.hardness);
  const auto start = Clock::now();
  PdmpState state{x0.value_or(Vector::Zero(target.dim())),
                  Vector::Zero(target.dim()), Phase::Position};
  require(state.x.size() == target.dim(), "sampler: x0 dimension mismatch");
  while (!budget_exhausted(budget, out.samples.size(), start)) {
    const MhStepResult r = mh_step(target, state, p, rng);
    record_metro_counts(out, r);
    state = r.state;
    out.samples.push_back(state.x);
  }
  out.wall_seconds = elapsed(start);
  return out;
}

}  // namespace

std::optional<double> bps_next_bounce(const TargetModel& target,
                                      const Vector& x, const Vector& v,
                                      double horizon, double grid_step,
                                      Rng& rng) {
  const auto poly = target.line_rate_polynomial(x, v);
  if (!poly)
    throw ContractViolation("bps: target '" + target.name() +
                            "' provides no line rate polynomial");
  const auto& p = *poly;
  if (p.size() <= 2) {
    const double a = p.empty() ? 0.0 : p[0];
    const double b = p.size() < 2 ? 0.0 : p[1];
    const double tau = invert_linear(a, b, rng.exponential());
    if (tau < horizon) return tau;
    return std::nullopt;
  }

  require(grid_step > 0.0, "bps: grid_step must be positive");
  for (Index k = 0;; ++k) {
    const double lo = static_cast<double>(k) * grid_step;
    if (lo >= horizon) return std::nullopt;
    const double hi = std::min(lo + grid_step, horizon);
    const double bound = poly_max(p, lo, hi);
    if (bound <= 0.0) continue;
    double t = lo;
    for (;;) {
      t += rng.exponential() / bound;
      if (t >= hi) break;
      if (rng.uniform() * bound < poly_eval(p, t)) return t;
    }
  }
}

ChainOutput run_bps(const TargetModel& target, const BpsParams& params,
                    const Budget& budget, Rng& rng, std::optional<Vector> x0) {
  require(params.window_T > 0.0, "bps: window_T must be positive");
  const double refresh = params.refresh_rate.value_or(1.0 / params.window_T);
  require(refresh >= 0.0, "bps: refresh_rate must be nonnegative");

  ChainOutput out;
  std::ostringstream echo;
  echo << "bps window_T=" << params.window_T
       << " grid_step=" << params.grid_step << " refresh_rate=" << refresh;
  out.config_echo = echo.str();
  if (budget.empty()) return out;

  const auto start = Clock::now();
  Vector x = x0.value_or(Vector::Zero(target.dim()));
  require(x.size() == target.dim(), "bps: x0 dimension mismatch");
  Vector v = rng.normal_vector(target.dim());
  double to_sample = params.window_T;
  double to_refresh = refresh > 0.0 ? rng.exponential() / refresh : kInf;

  while (!budget_exhausted(budget, out.samples.size(), start)) {
    const double horizon = std::min(to_sample, to_refresh);
    const auto bounce =
        bps_next_bounce(target, x, v, horizon, params.grid_step, rng);
    const double dt = bounce ? *bounce : horizon;
    x += dt * v;
    to_sample -= dt;
    to_refresh -= dt;
    if (bounce) {
      const Vector g = target.gradient(x);
      const double gg = g.squaredNorm();
      if (gg > 0.0) v -= (2.0 * v.dot(g) / gg) * g;
      ++out.bounces;
    } else if (to_refresh <= to_sample) {
      v = rng.normal_vector(target.dim());
      to_refresh = rng.exponential() / refresh;
      ++out.refreshments;
    }
    if (!bounce && to_sample <= 0.0) {
      out.samples.push_back(x);
      ++out.accepts;
      to_sample = params.window_T;
    }
  }
  out.wall_seconds = elapsed(start);
  return out;
}

ChainOutput run_sl_pdmp(const TargetModel& target, MetroParams params,
                        const Budget& budget, Rng& rng,
                        std::optional<Vector> x0) {
  params.mode = FlowMode::SplitLagrangian;
  return run_metropolised(target, params, budget, rng, std::move(x0));
}

ChainOutput run_ca_bps(const TargetModel& target, MetroParams params,
                       const Budget& budget, Rng& rng,
                       std::optional<Vector> x0) {
  params.mode = FlowMode::CovarianceAdaptive;
  return run_metropolised(target, params, budget, rng, std::move(x0));
}

std::vector<Vector> collect_samples(const ChainOutput& chain,
                                    double burn_in_fraction) {
  require(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0,
          "collect_samples: burn-in fraction must lie in [0, 1)");
  const std::size_t n = chain.samples.size();
  // ceil((1 - f) n) written as n - floor(f n) to avoid 0.9 * 10 > 9.
  const auto dropped = static_cast<std::size_t>(
      std::floor(burn_in_fraction * static_cast<double>(n)));
  const std::size_t k = n - std::min(dropped, n);
  return {chain.samples.end() - static_cast<std::ptrdiff_t>(k),
          chain.samples.end()};
}

}  // namespace cabps
