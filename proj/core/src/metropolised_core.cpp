#include "cabps/metropolised_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cabps {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double rate) { return rate > 0.0 ? std::log(rate) : kNegInf; }

// Rates of the direction-`dir` process in the position phase at (x, v).
// The SoftAbs metric is only built when the Hessian varies along v; otherwise
// dG/dv vanishes and rho_L is exactly zero.
CellRates position_rates(const TargetModel& target, const Vector& x,
                             const Vector& v, int dir,
                             const MetroParams& params) {
  const Vector grad = target.gradient(x);
  const double vg = v.dot(grad);
  CellRates r;
  if (params.mode == FlowMode::CovarianceAdaptive)
    r.bounce = positive_part(-dir * vg);

  double rho = 0.0;
  const Matrix dH = params.fixed_metric ? Matrix() : target.hessian_directional(x, v);
  if (dH.size() > 0 && !(dH.array() == 0.0).all()) {
    const MetricState metric = build_metric(target.hessian(x), params.hardness);
    const Matrix J = j_matrix(metric.eigenvalues, params.hardness);
    const Matrix dG = metric_partial(metric, J, dH);
    rho = rho_fixed_v(metric, dG, grad, v, FlowMode::CovarianceAdaptive);
  }
  if (params.mode == FlowMode::SplitLagrangian) rho += vg;
  r.flip = positive_part(-dir * rho);
  return r;
}

// Largest k with k * step < tau (k = 0 always included).
Index last_cell(double tau, double step) {
  Index k = std::max<Index>(0, static_cast<Index>(std::ceil(tau / step)) - 1);
  while (static_cast<double>(k + 1) * step < tau) ++k;
  while (k > 0 && static_cast<double>(k) * step >= tau) --k;
  return k;
}

struct CellReplay {
  double integral = 0.0;
  double log_event = 0.0;
};

// Density contribution of a position segment traversed from x_start along
// dir * v for tau, with cells anchored at the start.
CellReplay replay_position_cells(const TargetModel& target,
                                 const Vector& x_start, const Vector& v,
                                 double tau, int dir,
                                 std::optional<EventKind> end_event,
                                 const MetroParams& params,
                                 Index cells_hint = 0) {
  const double step = params.grid_step;
  const Index last = cells_hint > 0 ? cells_hint - 1 : last_cell(tau, step);
  CellReplay out;
  for (Index k = 0; k <= last; ++k) {
    const double c = static_cast<double>(k) * step;
    const double len = std::max(0.0, std::min(step, tau - c));
    const Vector xc = x_start + (dir * c) * v;
    const CellRates r = position_rates(target, xc, v, dir, params);
    out.integral += r.total() * len;
    if (k == last && end_event) out.log_event = safe_log(r.of(*end_event));
  }
  return out;
}

FlowCoefficients velocity_coefficients(const TargetModel& target,
                                       const Vector& x,
                                       const MetroParams& params) {
  const LocalGeometry geom = geometry_at(target, x, params);
  const MetricDerivatives derivs = metric_derivatives(target, geom);
  return flow_coefficients(geom, derivs, params.mode);
}

PathAccounting total_accounting(const std::vector<TraceSegment>& trace) {
  PathAccounting acc;
  for (const auto& s : trace) {
    acc.log_density_forward += -s.integral_forward + s.log_event_forward;
    acc.log_density_reverse += -s.integral_reverse + s.log_event_reverse;
    acc.log_jacobian += s.log_volume;
    if (s.end_event == EventKind::Bounce) ++acc.bounces;
    if (s.end_event == EventKind::Flip) ++acc.flips;
  }
  return acc;
}

}  // namespace

std::shared_ptr<const FixedMetric> fixed_metric_for(const TargetModel& target,
                                                    double hardness) {
  if (!target.constant_hessian()) return nullptr;
  auto fixed = std::make_shared<FixedMetric>();
  fixed->hessian = target.hessian(Vector::Zero(target.dim()));
  fixed->metric = build_metric(fixed->hessian, hardness);
  fixed->J = j_matrix(fixed->metric.eigenvalues, hardness);
  return fixed;
}

LocalGeometry geometry_at(const TargetModel& target, const Vector& x,
                          const MetroParams& params) {
  if (!params.fixed_metric) return local_geometry(target, x, params.hardness);
  LocalGeometry g;
  g.x = x;
  g.log_pi = target.log_density(x);
  g.grad_log_pi = target.gradient(x);
  g.hessian = params.fixed_metric->hessian;
  g.metric = params.fixed_metric->metric;
  g.J = params.fixed_metric->J;
  return g;
}

std::optional<CellEvent> next_cell_event(
    const std::function<CellRates(double)>& rates, double duration,
    double step, Rng& rng, double& integral, Index& cells) {
  for (Index k = 0;; ++k) {
    const double c = static_cast<double>(k) * step;
    const bool last = !(static_cast<double>(k + 1) * step < duration);
    const double len = last ? duration - c : step;
    const CellRates r = rates(c);
    const double lambda = r.total();
    if (!std::isfinite(lambda)) {
      integral = lambda;
      cells = k + 1;
      return std::nullopt;
    }
    if (lambda > 0.0) {
      const double s = rng.exponential() / lambda;
      if (s < len) {
        integral += lambda * s;
        cells = k + 1;
        const EventKind kind = rng.uniform() * lambda < r.bounce
                                   ? EventKind::Bounce
                                   : EventKind::Flip;
        return CellEvent{c + s, kind, r.of(kind)};
      }
    }
    integral += lambda * len;
    if (last) {
      cells = k + 1;
      return std::nullopt;
    }
  }
}

ProposedPath propose_path(const TargetModel& target, const PdmpState& z0,
                          const MetroParams& params, int direction, Rng& rng) {
  require(params.window_T > 0.0, "propose_path: window must be positive");
  require(params.grid_step > 0.0, "propose_path: grid step must be positive");
  require(direction == 1 || direction == -1,
          "propose_path: direction must be +1 or -1");
  require(z0.x.size() == target.dim() && z0.v.size() == target.dim(),
          "propose_path: state dimension mismatch");

  const double T = params.window_T;
  const double step = params.grid_step;
  const int dir = direction;

  ProposedPath path;
  path.skeleton.initial = z0;
  path.skeleton.window = T;
  path.skeleton.direction = dir;

  if (!z0.x.allFinite() || !z0.v.allFinite()) {
    path.valid = false;
    path.skeleton.terminal = z0;
    return path;
  }

  PdmpState z = z0;
  double t = 0.0;
  std::optional<EventKind> pending_begin;

  while (t < T) {
    const double rem = T - t;
    TraceSegment seg;
    seg.phase = z.phase;
    seg.t_begin = t;
    seg.begin = z;
    seg.begin_event = pending_begin;

    double tau = rem;
    std::optional<EventKind> event;

    if (z.phase == Phase::Position) {
      double integral = 0.0;
      Index cells = 0;
      const auto fired = next_cell_event(
          [&](double c) {
            return position_rates(target, z.x + (dir * c) * z.v, z.v, dir,
                                  params);
          },
          rem, step, rng, integral, cells);
      if (!std::isfinite(integral)) {
        path.valid = false;
        break;
      }
      if (fired) {
        tau = fired->time;
        event = fired->kind;
        seg.log_event_forward = std::log(fired->rate);
      }
      seg.forward_cells = cells;
      seg.integral_forward = integral;
      seg.end = PdmpState{z.x + (dir * tau) * z.v, z.v, Phase::Position};
    } else {
      const FlowCoefficients coeffs = velocity_coefficients(target, z.x, params);
      auto rho = [&coeffs](const Vector& v) { return rho_fixed_x(coeffs, v); };
      auto rates = [&rho, dir](const Vector& v) {
        const double r = rho(v);
        return RatePair{positive_part(dir * r), positive_part(-dir * r)};
      };
      const VelocitySegment vs =
          integrate_velocity_flow(coeffs, z.v, rng.exponential(), rem, rates,
                                  dir, params.ode, rho);
      if (!vs.valid) {
        path.valid = false;
        break;
      }
      seg.integral_forward = vs.integral_rate_forward;
      seg.integral_reverse = vs.integral_rate_reverse;
      seg.log_volume = segment_volume_log(vs);
      if (seg.begin_event)
        seg.log_event_reverse = safe_log(positive_part(-dir * rho(z.v)));
      if (vs.event_triggered && vs.duration < rem) {
        tau = vs.duration;
        event = EventKind::Flip;
        seg.log_event_forward = safe_log(positive_part(dir * rho(vs.v_end)));
      }
      seg.end = PdmpState{z.x, vs.v_end, Phase::Velocity};
    }

    seg.end_event = event;
    seg.t_end = event ? t + tau : T;
    t = seg.t_end;

    PdmpState next = seg.end;
    if (event == EventKind::Bounce) {
      try {
        const Vector grad = target.gradient(next.x);
        if (params.fixed_metric) {
          next.v = reflect(next.v, grad, params.fixed_metric->metric);
        } else {
          next.v = reflect(next.v, grad,
                           build_metric(target.hessian(next.x), params.hardness));
        }
      } catch (const NoReflection&) {
        // Measure-zero: the frozen bounce rate was positive but the gradient
        // vanishes at the event point.
        path.valid = false;
      }
    } else if (event == EventKind::Flip) {
      next.phase = flipped(next.phase);
    }
    if (event) path.skeleton.events.push_back({seg.t_end, *event});
    if (!next.x.allFinite() || !next.v.allFinite()) path.valid = false;
    path.trace.push_back(std::move(seg));
    if (!path.valid) break;
    z = std::move(next);
    pending_begin = event;
  }

  path.skeleton.terminal = z;
  if (!path.valid) return path;

  // Reverse densities of position segments: the opposite-time process
  // traverses each segment from its end, with cells anchored there.
  for (auto& seg : path.trace) {
    if (seg.phase != Phase::Position) continue;
    const CellReplay rev =
        replay_position_cells(target, seg.end.x, seg.end.v,
                              seg.t_end - seg.t_begin, -dir, seg.begin_event,
                              params);
    seg.integral_reverse = rev.integral;
    seg.log_event_reverse = rev.log_event;
  }
  path.accounting = total_accounting(path.trace);
  return path;
}

PathSkeleton reverse_path(const PathSkeleton& skeleton) {
  PathSkeleton r;
  r.initial = skeleton.terminal;
  r.terminal = skeleton.initial;
  r.window = skeleton.window;
  r.direction = -skeleton.direction;
  r.mirrored = !skeleton.mirrored;
  r.events.assign(skeleton.events.rbegin(), skeleton.events.rend());
  return r;
}

ProposedPath reverse_path(const ProposedPath& path) {
  ProposedPath r;
  r.valid = path.valid;
  r.skeleton = reverse_path(path.skeleton);
  const double T = path.skeleton.window;
  r.trace.reserve(path.trace.size());
  for (auto it = path.trace.rbegin(); it != path.trace.rend(); ++it) {
    TraceSegment s;
    s.phase = it->phase;
    s.t_begin = T - it->t_end;
    s.t_end = T - it->t_begin;
    s.begin = it->end;
    s.end = it->begin;
    s.begin_event = it->end_event;
    s.end_event = it->begin_event;
    s.integral_forward = it->integral_reverse;
    s.integral_reverse = it->integral_forward;
    s.log_event_forward = it->log_event_reverse;
    s.log_event_reverse = it->log_event_forward;
    s.log_volume = -it->log_volume;
    r.trace.push_back(std::move(s));
  }
  r.accounting = total_accounting(r.trace);
  return r;
}

double path_log_density(const ProposedPath& path, ProcessRole role) {
  return role == ProcessRole::Forward ? path.accounting.log_density_forward
                                      : path.accounting.log_density_reverse;
}

double replay_log_density(const TargetModel& target, const ProposedPath& path,
                          const MetroParams& params) {
  const int dir = path.skeleton.direction;
  double total = 0.0;
  for (const auto& seg : path.trace) {
    const double tau = seg.t_end - seg.t_begin;
    if (seg.phase == Phase::Position) {
      const CellReplay c = replay_position_cells(
          target, seg.begin.x, seg.begin.v, tau, dir, seg.end_event, params);
      total += -c.integral + c.log_event;
      continue;
    }
    if (tau <= 0.0) continue;
    const FlowCoefficients coeffs = velocity_coefficients(target, seg.begin.x, params);
    auto rho = [&coeffs](const Vector& v) { return rho_fixed_x(coeffs, v); };
    auto rates = [&rho, dir](const Vector& v) {
      const double r = rho(v);
      return RatePair{positive_part(dir * r), positive_part(-dir * r)};
    };
    const VelocitySegment vs = integrate_velocity_flow(
        coeffs, seg.begin.v, std::numeric_limits<double>::max(), tau, rates,
        dir, params.ode, rho);
    total += -vs.integral_rate_forward;
    if (seg.end_event)
      total += safe_log(positive_part(dir * rho(vs.v_end)));
  }
  return total;
}

double acceptance_log_ratio(double fwd_logp, double rev_logp,
                            double mu_log_start, double mu_log_end,
                            double log_psi, int direction) {
  if (fwd_logp == kNegInf || rev_logp == kNegInf) return kNegInf;
  const double base = mu_log_end + rev_logp - mu_log_start - fwd_logp;
  return direction == 1 ? base - log_psi : base + log_psi;
}

double log_joint_density(const LocalGeometry& geom, const Vector& v) {
  return geom.log_pi - 0.5 * v.dot(geom.metric.G * v) +
         0.5 * geom.metric.log_det;
}

MhStepResult mh_step(const TargetModel& target, const PdmpState& state,
                     const MetroParams& params, Rng& rng) {
  const LocalGeometry geom0 = geometry_at(target, state.x, params);
  PdmpState z0{state.x, refresh_velocity(geom0.metric, rng), state.phase};
  const int dir = rng.sign();

  MhStepResult out;
  out.state = z0;

  const ProposedPath path = propose_path(target, z0, params, dir, rng);
  out.bounces = path.accounting.bounces;
  out.flips = path.accounting.flips;
  const double log_u = std::log(rng.uniform());
  if (!path.valid) {
    out.invalid_proposal = true;
    out.log_ratio = kNegInf;
    return out;
  }

  const PdmpState& zT = path.skeleton.terminal;
  const LocalGeometry geomT = geometry_at(target, zT.x, params);
  const double log_psi = dir == 1 ? -path.accounting.log_jacobian
                                  : path.accounting.log_jacobian;
  out.log_ratio = acceptance_log_ratio(
      path_log_density(path, ProcessRole::Forward),
      path_log_density(path, ProcessRole::Reverse),
      log_joint_density(geom0, z0.v), log_joint_density(geomT, zT.v), log_psi,
      dir);
  if (std::isnan(out.log_ratio)) {
    out.invalid_proposal = true;
    return out;
  }
  if (log_u < out.log_ratio) {
    out.accepted = true;
    out.state = zT;
  }
  return out;
}

}  // namespace cabps
