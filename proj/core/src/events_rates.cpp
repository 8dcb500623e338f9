#include "cabps/events_rates.hpp"

namespace cabps {

double bps_rate(const Vector& grad, const Vector& v) {
  require(grad.size() == v.size(), "bps_rate: length mismatch");
  return positive_part(-v.dot(grad));
}

double bps_rate(const Vector& grad, const Vector& v, Phase phase) {
  return phase == Phase::Velocity ? 0.0 : bps_rate(grad, v);
}

double rho_fixed_v(const MetricState& metric, const Matrix& dG_v,
                   const Vector& grad_log_pi, const Vector& v, FlowMode mode) {
  require(v.size() == metric.dim() && dG_v.rows() == metric.dim(),
          "rho_fixed_v: dimension mismatch");
  const double rho_L = 0.5 * metric.G_inv.cwiseProduct(dG_v).sum() -
                       0.5 * v.dot(dG_v * v);
  if (mode == FlowMode::CovarianceAdaptive) return rho_L;
  return rho_L + v.dot(grad_log_pi);
}

double rho_fixed_v(const MetricState& metric, const MetricDerivatives& derivs,
                   const Vector& grad_log_pi, const Vector& v, FlowMode mode) {
  return rho_fixed_v(metric, directional_metric_derivative(derivs.partials, v),
                     grad_log_pi, v, mode);
}

double rho_fixed_x(const FlowCoefficients& coeffs, const Vector& v) {
  const Vector phi = velocity_field(coeffs, v);
  return 2.0 * coeffs.trace_gamma.dot(v) + phi.dot(coeffs.G * v);
}

RatePack rate_pack(const MetricState& metric, const Matrix& dG_v,
                   const Vector& grad_log_pi, const Vector& v, Phase phase) {
  RatePack r;
  r.phase = phase;
  r.bps_rate = bps_rate(grad_log_pi, v, phase);
  r.rho_L = rho_fixed_v(metric, dG_v, grad_log_pi, v,
                        FlowMode::CovarianceAdaptive);
  r.rho = r.rho_L + v.dot(grad_log_pi);
  return r;
}

Vector reflect(const Vector& v, const Vector& grad, const MetricState& metric) {
  require(v.size() == grad.size() && v.size() == metric.dim(),
          "reflect: dimension mismatch");
  if (grad.norm() <= 1e-13)
    throw NoReflection("reflect: gradient vanishes, cannot bounce");
  const Vector w = metric.G_inv * grad;
  const double denom = grad.dot(w);
  return v - (2.0 * v.dot(grad) / denom) * w;
}

Vector refresh_velocity(const MetricState& metric, Rng& rng) {
  return metric.velocity_factor * rng.normal_vector(metric.dim());
}

}  // namespace cabps
