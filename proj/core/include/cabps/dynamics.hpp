#pragma once

#include "cabps/softabs_metric.hpp"
#include "cabps/types.hpp"

#include <functional>
#include <vector>

namespace cabps {

/// x-independent coefficients of the velocity flow at a fixed position.
///
/// The field is Phi_v(v) = -Gamma^a_{bc} v^b v^c - drift, where
/// drift = G^{-1} grad(phi) with phi = -log pi + 0.5 log det G (SL mode) or
/// phi = 0.5 log det G (CA mode).
struct FlowCoefficients {
  FlowMode mode = FlowMode::CovarianceAdaptive;
  ChristoffelTensor gamma;
  Vector drift;
  Matrix G;
  Matrix G_inv;
  Vector trace_gamma;
  Vector grad_log_pi;

  Index dim() const { return drift.size(); }
};

FlowCoefficients flow_coefficients(const LocalGeometry& geom,
                                   const MetricDerivatives& derivs,
                                   FlowMode mode);

/// x + v t.
Vector position_flow(const Vector& x, const Vector& v, double t);

Vector velocity_field(const FlowCoefficients& coeffs, const Vector& v);

/// div_v Phi_v = -2 tr(Gamma) . v.
double velocity_divergence(const FlowCoefficients& coeffs, const Vector& v);

/// Proposal-process and return-process event rates at a velocity.
struct RatePair {
  double forward = 0.0;
  double reverse = 0.0;
};
using RateEvaluator = std::function<RatePair(const Vector& v)>;

struct IntegratorSettings {
  double steps_per_unit_time = 200.0;
  /// Nominal step is min(t_max, t_max_velocity, 1 / steps_per_unit_time).
  double t_max_velocity = 1.0;
};

/// Result of integrating v' = direction * Phi_v from v0 until the forward
/// rate integral reaches the threshold or t_max elapses.
struct VelocitySegment {
  Vector v0;
  double duration = 0.0;
  Vector v_end;
  bool event_triggered = false;
  /// False when the integration produced non-finite values; callers treat the
  /// proposal as rejected.
  bool valid = true;
  double integral_rate_forward = 0.0;
  double integral_rate_reverse = 0.0;
  /// Integral of div of the integrated field (direction * Phi_v).
  double integral_divergence = 0.0;
  std::vector<double> checkpoint_times;
  std::vector<Vector> checkpoints;
};

/// Classical RK4 on the augmented state (v, forward integral, reverse
/// integral, divergence integral). Steps in which the forward rate's sign
/// argument changes are split at the kink so the rate integrals keep fourth
/// order accuracy. A threshold crossing inside a step is located by bisection
/// on the sub-step length and the step is re-integrated to the crossing.
///
/// The rate evaluator must return non-negative rates; `signed_rate`, when
/// given, returns the smooth quantity whose positive/negative parts the rates
/// are, and is used only to locate kinks.
VelocitySegment integrate_velocity_flow(
    const FlowCoefficients& coeffs, const Vector& v0, double threshold,
    double t_max, const RateEvaluator& rate, double direction = 1.0,
    const IntegratorSettings& settings = {},
    const std::function<double(const Vector&)>& signed_rate = {},
    bool keep_checkpoints = false);

/// log psi of the segment, the log-Jacobian of v0 -> v(tau).
double segment_volume_log(const VelocitySegment& seg);

namespace testing {
/// Mutation hook: when set, velocity_divergence returns the opposite sign.
/// Used to check that the validation suite notices a wrong volume factor.
void set_flip_divergence_sign(bool flip);
}  // namespace testing

}  // namespace cabps
