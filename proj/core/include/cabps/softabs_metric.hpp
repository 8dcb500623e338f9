#pragma once

#include "cabps/target_models.hpp"
#include "cabps/types.hpp"

#include <span>
#include <vector>

namespace cabps {

constexpr double kDefaultHardness = 1e3;

/// SoftAbs eigenvalue map f(lambda) = lambda coth(hardness lambda), with
/// f(0) = 1 / hardness.
double softabs_scalar(double lambda, double hardness);

/// f'(lambda), the diagonal of the divided-difference matrix.
double softabs_derivative(double lambda, double hardness);

/// G = Q Diag(f(lambda)) Q^T for the Hessian H = Q Diag(lambda) Q^T.
struct MetricState {
  double hardness = kDefaultHardness;
  Matrix eigenvectors;  // Q, orthogonal
  Vector eigenvalues;   // raw lambda_i, ascending
  Vector softened;      // f(lambda_i) > 0
  Matrix G;
  Matrix G_inv;
  /// L with L L^T = G^{-1}; L z ~ Normal(0, G^{-1}) for z ~ Normal(0, I).
  Matrix velocity_factor;
  double log_det = 0.0;

  Index dim() const { return G.rows(); }
};

MetricState build_metric(const Matrix& H, double hardness = kDefaultHardness);

/// Divided differences of f over the eigenvalues (Daleckii-Krein matrix).
Matrix j_matrix(const Vector& eigs, double hardness);

/// dG/dx_i = Q (J o (Q^T dH_i Q)) Q^T.
Matrix metric_partial(const MetricState& state, const Matrix& J,
                      const Matrix& dH_i);

/// Gamma^a_{bc}, stored densely and symmetric in (b, c).
class ChristoffelTensor {
 public:
  ChristoffelTensor() = default;
  explicit ChristoffelTensor(Index d)
      : d_(d), data_(static_cast<std::size_t>(d * d * d), 0.0) {}

  Index dim() const { return d_; }
  double operator()(Index a, Index b, Index c) const {
    return data_[offset(a, b, c)];
  }
  double& operator()(Index a, Index b, Index c) { return data_[offset(a, b, c)]; }

  /// The d x d block Gamma^a_{..}.
  Eigen::Map<const Matrix> slice(Index a) const {
    return Eigen::Map<const Matrix>(data_.data() + offset(a, 0, 0), d_, d_);
  }

  bool is_zero() const;

 private:
  std::size_t offset(Index a, Index b, Index c) const {
    return static_cast<std::size_t>((a * d_ + b) * d_ + c);
  }
  Index d_ = 0;
  std::vector<double> data_;
};

struct MetricDerivatives {
  std::vector<Matrix> partials;  // dG/dx_i
  ChristoffelTensor gamma;
  Vector trace_gamma;       // (tr Gamma)_j = Gamma^i_{ij}
  Vector grad_half_logdet;  // 0.5 tr(G^{-1} dG/dx_k)
};

/// Christoffel symbols of the second kind together with the two contractions
/// used by the flows. trace_gamma and grad_half_logdet are computed along
/// independent paths; they agree by Jacobi's formula.
MetricDerivatives christoffel(const MetricState& state,
                              std::vector<Matrix> partials);

/// sum_k v_k dG/dx_k.
Matrix directional_metric_derivative(std::span<const Matrix> partials,
                                     const Vector& v);

/// Everything about the target and metric at a single position.
struct LocalGeometry {
  Vector x;
  double log_pi = 0.0;
  Vector grad_log_pi;
  Matrix hessian;
  MetricState metric;
  Matrix J;
};

LocalGeometry local_geometry(const TargetModel& target, const Vector& x,
                             double hardness = kDefaultHardness);

/// All coordinate partials of G plus Christoffel symbols at geom.x.
MetricDerivatives metric_derivatives(const TargetModel& target,
                                     const LocalGeometry& geom);

/// dG/dv using only the Hessian derivative along v.
Matrix directional_metric_derivative(const TargetModel& target,
                                     const LocalGeometry& geom,
                                     const Vector& v);

}  // namespace cabps
