#pragma once

#include "cabps/dynamics.hpp"
#include "cabps/rng.hpp"
#include "cabps/softabs_metric.hpp"
#include "cabps/types.hpp"

namespace cabps {

inline double positive_part(double x) { return x > 0.0 ? x : 0.0; }

/// [-v . grad log pi]^+.
double bps_rate(const Vector& grad, const Vector& v);

/// Zero in the velocity phase.
double bps_rate(const Vector& grad, const Vector& v, Phase phase);

/// rho from the fixed-v form:
///   0.5 tr(G^{-1} dG/dv) - 0.5 v^T (dG/dv) v [+ v . grad log pi in SL mode].
/// `dG_v` is the directional derivative of G along v.
double rho_fixed_v(const MetricState& metric, const Matrix& dG_v,
                   const Vector& grad_log_pi, const Vector& v, FlowMode mode);

double rho_fixed_v(const MetricState& metric, const MetricDerivatives& derivs,
                   const Vector& grad_log_pi, const Vector& v, FlowMode mode);

/// rho from the fixed-x form: 2 tr(Gamma) . v + Phi_v^T G v.
double rho_fixed_x(const FlowCoefficients& coeffs, const Vector& v);

struct RatePack {
  double bps_rate = 0.0;
  double rho = 0.0;    // SL scalar
  double rho_L = 0.0;  // CA scalar
  Phase phase = Phase::Position;
};

RatePack rate_pack(const MetricState& metric, const Matrix& dG_v,
                   const Vector& grad_log_pi, const Vector& v, Phase phase);

/// Thrown by reflect when the gradient vanishes.
class NoReflection : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Bounce v - 2 (v.w) / (w^T G^{-1} w) G^{-1} w with w = grad log pi.
/// Flips v.w, is an involution and preserves v^T G v.
Vector reflect(const Vector& v, const Vector& grad, const MetricState& metric);

/// Draw from Normal(0, G^{-1}).
Vector refresh_velocity(const MetricState& metric, Rng& rng);

}  // namespace cabps
