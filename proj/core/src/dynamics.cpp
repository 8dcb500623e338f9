#include "cabps/dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

namespace cabps {

namespace {

std::atomic<bool> g_flip_divergence{false};

constexpr double kCrossingTolerance = 1e-10;
constexpr double kLocalTimescale = 0.05;
constexpr double kMaxShrink = 1e-3;

struct Augmented {
  Vector v;
  double fwd = 0.0;
  double rev = 0.0;
  double div = 0.0;
};

struct Derivative {
  Vector dv;
  double fwd, rev, div;
};

bool finite(const Augmented& s) {
  return s.v.allFinite() && std::isfinite(s.fwd) && std::isfinite(s.rev) &&
         std::isfinite(s.div);
}

class Stepper {
 public:
  Stepper(const FlowCoefficients& c, const RateEvaluator& r, double dir)
      : coeffs_(c), rate_(r), dir_(dir) {}

  Derivative eval(const Vector& v) const {
    const RatePair rp = rate_(v);
    return {dir_ * velocity_field(coeffs_, v), rp.forward, rp.reverse,
            dir_ * velocity_divergence(coeffs_, v)};
  }

  Augmented step(const Augmented& s, double h) const {
    const Derivative k1 = eval(s.v);
    const Derivative k2 = eval(s.v + 0.5 * h * k1.dv);
    const Derivative k3 = eval(s.v + 0.5 * h * k2.dv);
    const Derivative k4 = eval(s.v + h * k3.dv);
    Augmented out;
    out.v = s.v + (h / 6.0) * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
    out.fwd = s.fwd + (h / 6.0) * (k1.fwd + 2.0 * k2.fwd + 2.0 * k3.fwd + k4.fwd);
    out.rev = s.rev + (h / 6.0) * (k1.rev + 2.0 * k2.rev + 2.0 * k3.rev + k4.rev);
    out.div = s.div + (h / 6.0) * (k1.div + 2.0 * k2.div + 2.0 * k3.div + k4.div);
    return out;
  }

 private:
  const FlowCoefficients& coeffs_;
  const RateEvaluator& rate_;
  double dir_;
};

}  // namespace

namespace testing {
void set_flip_divergence_sign(bool flip) { g_flip_divergence = flip; }
}  // namespace testing

FlowCoefficients flow_coefficients(const LocalGeometry& geom,
                                   const MetricDerivatives& derivs,
                                   FlowMode mode) {
  FlowCoefficients c;
  c.mode = mode;
  c.gamma = derivs.gamma;
  c.G = geom.metric.G;
  c.G_inv = geom.metric.G_inv;
  c.trace_gamma = derivs.trace_gamma;
  c.grad_log_pi = geom.grad_log_pi;
  Vector grad_phi = derivs.grad_half_logdet;
  if (mode == FlowMode::SplitLagrangian) grad_phi -= geom.grad_log_pi;
  c.drift = geom.metric.G_inv * grad_phi;
  return c;
}

Vector position_flow(const Vector& x, const Vector& v, double t) {
  require(x.size() == v.size(), "position_flow: length mismatch");
  return x + v * t;
}

Vector velocity_field(const FlowCoefficients& coeffs, const Vector& v) {
  const Index d = coeffs.dim();
  Vector out = -coeffs.drift;
  if (coeffs.gamma.dim() == 0) return out;
  for (Index a = 0; a < d; ++a) out[a] -= v.dot(coeffs.gamma.slice(a) * v);
  return out;
}

double velocity_divergence(const FlowCoefficients& coeffs, const Vector& v) {
  const double div = -2.0 * coeffs.trace_gamma.dot(v);
  return g_flip_divergence.load(std::memory_order_relaxed) ? -div : div;
}

VelocitySegment integrate_velocity_flow(
    const FlowCoefficients& coeffs, const Vector& v0, double threshold,
    double t_max, const RateEvaluator& rate, double direction,
    const IntegratorSettings& settings,
    const std::function<double(const Vector&)>& signed_rate,
    bool keep_checkpoints) {
  require(threshold > 0.0, "integrate_velocity_flow: threshold must be > 0");
  require(t_max > 0.0, "integrate_velocity_flow: t_max must be > 0");
  require(settings.steps_per_unit_time > 0.0 && settings.t_max_velocity > 0.0,
          "integrate_velocity_flow: invalid integrator settings");
  const Index d = v0.size();
  require(coeffs.gamma.dim() == d && coeffs.drift.size() == d && coeffs.G.rows() == d &&
              coeffs.trace_gamma.size() == d,
          "integrate_velocity_flow: coefficient dimensions do not match v0");

  const Stepper stepper(coeffs, rate, direction);
  const double cap = std::min(t_max, settings.t_max_velocity);
  const double h_nominal = std::min(cap, 1.0 / settings.steps_per_unit_time);

  VelocitySegment seg;
  seg.v0 = v0;
  Augmented state{v0};
  double t = 0.0;
  if (keep_checkpoints) {
    seg.checkpoint_times.push_back(0.0);
    seg.checkpoints.push_back(v0);
  }

  auto finish = [&](bool event) {
    seg.duration = t;
    seg.v_end = state.v;
    seg.event_triggered = event;
    seg.integral_rate_forward = state.fwd;
    seg.integral_rate_reverse = state.rev;
    seg.integral_divergence = state.div;
    return seg;
  };

  // Steps shrink where v changes by 100% in less than kLocalTimescale
  // (quadratic fields can blow up in finite time), by at most kMaxShrink.
  const double v0_norm = v0.norm();
  double s_prev = signed_rate ? signed_rate(state.v) : 0.0;
  while (t < t_max) {
    double h = h_nominal;
    const double speed = velocity_field(coeffs, state.v).norm();
    if (speed > 0.0) {
      const double timescale = std::max(state.v.norm(), v0_norm) / speed;
      h *= std::clamp(timescale / kLocalTimescale, kMaxShrink, 1.0);
    }
    h = std::min(h, t_max - t);
    if (t_max - (t + h) < 1e-12 * t_max) h = t_max - t;
    Augmented next = stepper.step(state, h);
    if (!finite(next)) {
      seg.valid = false;
      return finish(false);
    }

    // Split at a sign change of the rate argument so each piece is smooth.
    if (signed_rate) {
      const double s_next = signed_rate(next.v);
      if ((s_prev > 0.0 && s_next < 0.0) || (s_prev < 0.0 && s_next > 0.0)) {
        double lo = 0.0, hi = h;
        for (int it = 0; it < 200 && hi - lo > kCrossingTolerance * h; ++it) {
          const double mid = 0.5 * (lo + hi);
          const double s_mid = signed_rate(stepper.step(state, mid).v);
          if ((s_mid > 0.0) == (s_prev > 0.0) && s_mid != 0.0)
            lo = mid;
          else
            hi = mid;
        }
        if (hi < h) {
          h = hi;
          next = stepper.step(state, h);
          if (!finite(next)) {
            seg.valid = false;
            return finish(false);
          }
        }
      }
    }

    if (next.fwd >= threshold) {
      double lo = 0.0, hi = h;
      const double target = threshold;
      for (int it = 0; it < 200; ++it) {
        if (hi - lo <= kCrossingTolerance * std::max(t + hi, 1e-300)) break;
        const double mid = 0.5 * (lo + hi);
        if (stepper.step(state, mid).fwd < target)
          lo = mid;
        else
          hi = mid;
      }
      state = stepper.step(state, hi);
      t += hi;
      if (!finite(state)) {
        seg.valid = false;
        return finish(false);
      }
      if (keep_checkpoints) {
        seg.checkpoint_times.push_back(t);
        seg.checkpoints.push_back(state.v);
      }
      return finish(true);
    }

    state = std::move(next);
    t += h;
    if (signed_rate) s_prev = signed_rate(state.v);
    if (keep_checkpoints) {
      seg.checkpoint_times.push_back(t);
      seg.checkpoints.push_back(state.v);
    }
  }
  t = t_max;
  return finish(false);
}

double segment_volume_log(const VelocitySegment& seg) {
  return seg.integral_divergence;
}

}  // namespace cabps
