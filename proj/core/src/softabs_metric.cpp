#include "cabps/softabs_metric.hpp"

#include <algorithm>
#include <cmath>

namespace cabps {

namespace {

constexpr double kZeroEigenvalue = 1e-10;
constexpr double kEqualEigenvalues = 1e-8;
// Below this |hardness * lambda| the closed forms lose digits to
// cancellation and the Taylor series of u coth(u) takes over.
constexpr double kSeriesCutoff = 1e-2;

bool is_zero_eig(double lambda) { return std::abs(lambda) < kZeroEigenvalue; }

bool nearly_equal(double a, double b) {
  return std::abs(a - b) <
         kEqualEigenvalues * std::max({1.0, std::abs(a), std::abs(b)});
}

// (g(u) - g(w)) / (u - w) for g(u) = u coth(u), small u and w.
double small_divided_difference(double u, double w) {
  double p5 = 0.0;
  for (int k = 0; k <= 5; ++k) p5 += std::pow(u, k) * std::pow(w, 5 - k);
  return (u + w) / 3.0 - (u + w) * (u * u + w * w) / 45.0 +
         2.0 * p5 / 945.0;
}

}  // namespace

double softabs_scalar(double lambda, double hardness) {
  if (is_zero_eig(lambda)) return 1.0 / hardness;
  return lambda / std::tanh(hardness * lambda);
}

double softabs_derivative(double lambda, double hardness) {
  if (is_zero_eig(lambda)) return 0.0;
  const double u = hardness * lambda;
  if (std::abs(u) < kSeriesCutoff) {
    const double u2 = u * u;
    return u * (2.0 / 3.0 - u2 * (4.0 / 45.0 - u2 * 4.0 / 315.0));
  }
  const double s = std::sinh(u);
  if (!std::isfinite(s)) return std::copysign(1.0, u);
  return 1.0 / std::tanh(u) - u / (s * s);
}

MetricState build_metric(const Matrix& H, double hardness) {
  require(H.rows() == H.cols(), "build_metric: Hessian must be square");
  require(hardness > 0.0, "build_metric: hardness must be positive");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(H);
  if (eig.info() != Eigen::Success)
    throw NumericalError("build_metric: eigendecomposition failed");

  MetricState s;
  s.hardness = hardness;
  s.eigenvectors = eig.eigenvectors();
  s.eigenvalues = eig.eigenvalues();
  const Index d = H.rows();
  s.softened.resize(d);
  for (Index i = 0; i < d; ++i)
    s.softened[i] = softabs_scalar(s.eigenvalues[i], hardness);

  const Matrix& Q = s.eigenvectors;
  s.G = Q * s.softened.asDiagonal() * Q.transpose();
  s.G_inv = Q * s.softened.cwiseInverse().asDiagonal() * Q.transpose();
  s.velocity_factor = Q * s.softened.cwiseInverse().cwiseSqrt().asDiagonal();
  s.log_det = s.softened.array().log().sum();
  return s;
}

Matrix j_matrix(const Vector& eigs, double hardness) {
  const Index d = eigs.size();
  Matrix J(d, d);
  for (Index i = 0; i < d; ++i) {
    for (Index j = i; j < d; ++j) {
      const double li = eigs[i];
      const double lj = eigs[j];
      double value;
      if (i == j || nearly_equal(li, lj)) {
        value = softabs_derivative(0.5 * (li + lj), hardness);
      } else if (std::abs(hardness * li) < kSeriesCutoff &&
                 std::abs(hardness * lj) < kSeriesCutoff && !is_zero_eig(li) &&
                 !is_zero_eig(lj)) {
        value = small_divided_difference(hardness * li, hardness * lj);
      } else {
        value = (softabs_scalar(li, hardness) - softabs_scalar(lj, hardness)) /
                (li - lj);
      }
      J(i, j) = J(j, i) = value;
    }
  }
  return J;
}

Matrix metric_partial(const MetricState& state, const Matrix& J,
                      const Matrix& dH_i) {
  const Matrix& Q = state.eigenvectors;
  const Matrix M = Q.transpose() * dH_i * Q;
  Matrix out = Q * J.cwiseProduct(M) * Q.transpose();
  // Symmetrize away round-off.
  return 0.5 * (out + out.transpose());
}

bool ChristoffelTensor::is_zero() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double x) { return x == 0.0; });
}

MetricDerivatives christoffel(const MetricState& state,
                              std::vector<Matrix> partials) {
  const Index d = state.dim();
  require(static_cast<Index>(partials.size()) == d,
          "christoffel: expected one metric partial per coordinate");
  for (const auto& p : partials)
    require(p.rows() == d && p.cols() == d,
            "christoffel: metric partial has the wrong shape");

  MetricDerivatives out;
  out.gamma = ChristoffelTensor(d);

  // First kind: Gamma_{m,bc} = 0.5 (G_{cm,b} + G_{bm,c} - G_{bc,m}).
  Vector first(d);
  for (Index b = 0; b < d; ++b) {
    for (Index c = b; c < d; ++c) {
      for (Index m = 0; m < d; ++m)
        first[m] = 0.5 * (partials[b](c, m) + partials[c](b, m) -
                          partials[m](b, c));
      const Vector second = state.G_inv * first;
      for (Index a = 0; a < d; ++a) {
        out.gamma(a, b, c) = second[a];
        out.gamma(a, c, b) = second[a];
      }
    }
  }

  out.trace_gamma = Vector::Zero(d);
  for (Index j = 0; j < d; ++j)
    for (Index i = 0; i < d; ++i) out.trace_gamma[j] += out.gamma(i, i, j);

  out.grad_half_logdet.resize(d);
  for (Index k = 0; k < d; ++k)
    out.grad_half_logdet[k] =
        0.5 * state.G_inv.cwiseProduct(partials[k]).sum();

  out.partials = std::move(partials);
  return out;
}

Matrix directional_metric_derivative(std::span<const Matrix> partials,
                                     const Vector& v) {
  require(static_cast<Index>(partials.size()) == v.size(),
          "directional_metric_derivative: length mismatch");
  const Index d = v.size();
  Matrix out = Matrix::Zero(d, d);
  for (Index k = 0; k < d; ++k) out += v[k] * partials[static_cast<std::size_t>(k)];
  return out;
}

LocalGeometry local_geometry(const TargetModel& target, const Vector& x,
                             double hardness) {
  LocalGeometry g;
  g.x = x;
  g.log_pi = target.log_density(x);
  g.grad_log_pi = target.gradient(x);
  g.hessian = target.hessian(x);
  g.metric = build_metric(g.hessian, hardness);
  g.J = j_matrix(g.metric.eigenvalues, hardness);
  return g;
}

MetricDerivatives metric_derivatives(const TargetModel& target,
                                     const LocalGeometry& geom) {
  const Index d = target.dim();
  std::vector<Matrix> partials;
  partials.reserve(static_cast<std::size_t>(d));
  for (Index i = 0; i < d; ++i)
    partials.push_back(
        metric_partial(geom.metric, geom.J, target.hessian_partial(geom.x, i)));
  return christoffel(geom.metric, std::move(partials));
}

Matrix directional_metric_derivative(const TargetModel& target,
                                     const LocalGeometry& geom,
                                     const Vector& v) {
  return metric_partial(geom.metric, geom.J,
                        target.hessian_directional(geom.x, v));
}

}  // namespace cabps
