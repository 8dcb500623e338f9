#include "cabps/target_models.hpp"

#include <cmath>
#include <numbers>

namespace cabps {

namespace {

using Poly = std::vector<double>;

Poly poly_mul(const Poly& p, const Poly& q) {
  Poly r(p.size() + q.size() - 1, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j) r[i + j] += p[i] * q[j];
  return r;
}

Poly poly_add(const Poly& p, const Poly& q) {
  Poly r(std::max(p.size(), q.size()), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) r[i] += p[i];
  for (std::size_t i = 0; i < q.size(); ++i) r[i] += q[i];
  return r;
}

Poly poly_scale(Poly p, double s) {
  for (double& c : p) c *= s;
  return p;
}

}  // namespace

double standard_normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

// ---------------------------------------------------------------------------
// TargetModel

void TargetModel::check_point(const Vector& x) const {
  if (x.size() != dim())
    throw ContractViolation(name() + ": expected a point of dimension " +
                            std::to_string(dim()) + ", got " +
                            std::to_string(x.size()));
}

double TargetModel::log_density(const Vector& x) const {
  check_point(x);
  return do_log_density(x);
}

Vector TargetModel::gradient(const Vector& x) const {
  check_point(x);
  return do_gradient(x);
}

Matrix TargetModel::hessian(const Vector& x) const {
  check_point(x);
  return do_hessian(x);
}

Matrix TargetModel::hessian_partial(const Vector& x, Index i) const {
  check_point(x);
  if (i < 0 || i >= dim())
    throw ContractViolation(name() + ": coordinate index " + std::to_string(i) +
                            " out of range");
  return do_hessian_partial(x, i);
}

Matrix TargetModel::hessian_directional(const Vector& x,
                                        const Vector& v) const {
  check_point(x);
  check_point(v);
  return do_hessian_directional(x, v);
}

Matrix TargetModel::do_hessian_directional(const Vector& x,
                                           const Vector& v) const {
  Matrix out = Matrix::Zero(dim(), dim());
  for (Index i = 0; i < dim(); ++i)
    if (v[i] != 0.0) out += v[i] * do_hessian_partial(x, i);
  return out;
}

double TargetModel::marginal_cdf_first_coord(double) const {
  throw ContractViolation(name() +
                          ": no analytic first-coordinate marginal CDF");
}

std::optional<std::vector<double>> TargetModel::line_rate_polynomial(
    const Vector&, const Vector&) const {
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Banana

BananaTarget::BananaTarget(double a, double b) : a_(a), b_(b) {
  require(a > 0.0 && b > 0.0, "banana: a and b must be positive");
}

double BananaTarget::do_log_density(const Vector& x) const {
  const double r = x[1] - x[0] * x[0];
  const double s = 1.0 - x[0];
  return -b_ * r * r - a_ * s * s;
}

Vector BananaTarget::do_gradient(const Vector& x) const {
  const double r = x[1] - x[0] * x[0];
  Vector g(2);
  g[0] = 4.0 * b_ * x[0] * r + 2.0 * a_ * (1.0 - x[0]);
  g[1] = -2.0 * b_ * r;
  return g;
}

Matrix BananaTarget::do_hessian(const Vector& x) const {
  Matrix h(2, 2);
  h(0, 0) = 4.0 * b_ * (x[1] - 3.0 * x[0] * x[0]) - 2.0 * a_;
  h(0, 1) = h(1, 0) = 4.0 * b_ * x[0];
  h(1, 1) = -2.0 * b_;
  return h;
}

Matrix BananaTarget::do_hessian_partial(const Vector& x, Index i) const {
  Matrix h = Matrix::Zero(2, 2);
  if (i == 0) {
    h(0, 0) = -24.0 * b_ * x[0];
    h(0, 1) = h(1, 0) = 4.0 * b_;
  } else {
    h(0, 0) = 4.0 * b_;
  }
  return h;
}

Matrix BananaTarget::do_hessian_directional(const Vector& x,
                                            const Vector& v) const {
  Matrix h(2, 2);
  h(0, 0) = -24.0 * b_ * x[0] * v[0] + 4.0 * b_ * v[1];
  h(0, 1) = h(1, 0) = 4.0 * b_ * v[0];
  h(1, 1) = 0.0;
  return h;
}

double BananaTarget::marginal_cdf_first_coord(double t) const {
  const double sigma = std::sqrt(1.0 / (2.0 * a_));
  return standard_normal_cdf((t - 1.0) / sigma);
}

std::optional<std::vector<double>> BananaTarget::line_rate_polynomial(
    const Vector& x, const Vector& v) const {
  check_point(x);
  check_point(v);
  // y(t) = x + v t; r(t) = y2 - y1^2.
  const Poly y1{x[0], v[0]};
  const Poly r = poly_add(Poly{x[1], v[1]}, poly_scale(poly_mul(y1, y1), -1.0));
  const Poly g1 = poly_add(poly_scale(poly_mul(y1, r), 4.0 * b_),
                           Poly{2.0 * a_ * (1.0 - x[0]), -2.0 * a_ * v[0]});
  const Poly g2 = poly_scale(r, -2.0 * b_);
  return poly_add(poly_scale(g1, -v[0]), poly_scale(g2, -v[1]));
}

// ---------------------------------------------------------------------------
// Anisotropic Gaussian

AnisotropicGaussianTarget::AnisotropicGaussianTarget(Index dim, double delta)
    : dim_(dim), delta_(delta), precision_(Vector::Constant(dim, delta)) {
  require(dim > 0, "gaussian: dimension must be positive");
  require(delta > 0.0, "gaussian: delta must be positive");
  precision_[0] = 1.0;
}

double AnisotropicGaussianTarget::do_log_density(const Vector& x) const {
  return -0.5 * x.dot(precision_.cwiseProduct(x));
}

Vector AnisotropicGaussianTarget::do_gradient(const Vector& x) const {
  return -precision_.cwiseProduct(x);
}

Matrix AnisotropicGaussianTarget::do_hessian(const Vector&) const {
  return Matrix((-precision_).asDiagonal());
}

Matrix AnisotropicGaussianTarget::do_hessian_partial(const Vector&,
                                                     Index) const {
  return Matrix::Zero(dim_, dim_);
}

Matrix AnisotropicGaussianTarget::do_hessian_directional(const Vector&,
                                                         const Vector&) const {
  return Matrix::Zero(dim_, dim_);
}

double AnisotropicGaussianTarget::marginal_cdf_first_coord(double t) const {
  return standard_normal_cdf(t);
}

std::optional<std::vector<double>>
AnisotropicGaussianTarget::line_rate_polynomial(const Vector& x,
                                                const Vector& v) const {
  check_point(x);
  check_point(v);
  const Vector pv = precision_.cwiseProduct(v);
  return std::vector<double>{pv.dot(x), pv.dot(v)};
}

// ---------------------------------------------------------------------------
// Gaussian mixture

GaussianMixtureTarget::GaussianMixtureTarget(
    std::vector<MixtureComponent> components) {
  require(!components.empty(), "mixture: needs at least one component");
  dim_ = components.front().mean.size();
  double total = 0.0;
  for (const auto& c : components) {
    require(c.weight > 0.0, "mixture: weights must be positive");
    require(c.mean.size() == dim_ && c.covariance.rows() == dim_ &&
                c.covariance.cols() == dim_,
            "mixture: inconsistent component dimensions");
    total += c.weight;
  }
  require(std::abs(total - 1.0) < 1e-12, "mixture: weights must sum to 1");
  for (const auto& c : components) {
    Eigen::LLT<Matrix> llt(c.covariance);
    if (llt.info() != Eigen::Success)
      throw ContractViolation("mixture: covariance is not positive definite");
    const Matrix L = llt.matrixL();
    const double log_det = 2.0 * L.diagonal().array().log().sum();
    comps_.push_back(Component{
        std::log(c.weight), c.mean,
        llt.solve(Matrix::Identity(dim_, dim_)),
        -0.5 * log_det - 0.5 * static_cast<double>(dim_) *
                             std::log(2.0 * std::numbers::pi)});
  }
}

GaussianMixtureTarget GaussianMixtureTarget::two_mode_example() {
  Matrix c1(2, 2), c2(2, 2);
  c1 << 1.0, 0.8, 0.8, 1.0;
  c2 << 1.0, -0.8, -0.8, 1.0;
  Vector m1(2), m2(2);
  m1 << -2.0, 0.0;
  m2 << 2.0, 0.0;
  return GaussianMixtureTarget({{0.5, m1, c1}, {0.5, m2, c2}});
}

Vector GaussianMixtureTarget::log_terms(const Vector& x) const {
  Vector out(static_cast<Index>(comps_.size()));
  for (std::size_t k = 0; k < comps_.size(); ++k) {
    const Vector d = x - comps_[k].mean;
    out[static_cast<Index>(k)] = comps_[k].log_weight + comps_[k].log_norm -
                                 0.5 * d.dot(comps_[k].precision * d);
  }
  return out;
}

Vector GaussianMixtureTarget::responsibilities(const Vector& x) const {
  const Vector lt = log_terms(x);
  const Vector e = (lt.array() - lt.maxCoeff()).exp();
  return e / e.sum();
}

double GaussianMixtureTarget::do_log_density(const Vector& x) const {
  const Vector lt = log_terms(x);
  const double m = lt.maxCoeff();
  return m + std::log((lt.array() - m).exp().sum());
}

Vector GaussianMixtureTarget::do_gradient(const Vector& x) const {
  const Vector r = responsibilities(x);
  Vector g = Vector::Zero(dim_);
  for (std::size_t k = 0; k < comps_.size(); ++k)
    g -= r[static_cast<Index>(k)] * (comps_[k].precision * (x - comps_[k].mean));
  return g;
}

Matrix GaussianMixtureTarget::do_hessian(const Vector& x) const {
  const Vector r = responsibilities(x);
  Vector g = Vector::Zero(dim_);
  Matrix h = Matrix::Zero(dim_, dim_);
  for (std::size_t k = 0; k < comps_.size(); ++k) {
    const double rk = r[static_cast<Index>(k)];
    const Vector gk = -(comps_[k].precision * (x - comps_[k].mean));
    g += rk * gk;
    h += rk * (gk * gk.transpose() - comps_[k].precision);
  }
  return h - g * g.transpose();
}

Matrix GaussianMixtureTarget::do_hessian_partial(const Vector& x,
                                                 Index i) const {
  const Vector r = responsibilities(x);
  const std::size_t n = comps_.size();
  std::vector<Vector> gk(n);
  Vector g = Vector::Zero(dim_);
  for (std::size_t k = 0; k < n; ++k) {
    gk[k] = -(comps_[k].precision * (x - comps_[k].mean));
    g += r[static_cast<Index>(k)] * gk[k];
  }
  const Vector h_col = do_hessian(x).col(i);
  Matrix out = Matrix::Zero(dim_, dim_);
  for (std::size_t k = 0; k < n; ++k) {
    const double rk = r[static_cast<Index>(k)];
    const double drk = rk * (gk[k][i] - g[i]);
    const Vector dgk = -comps_[k].precision.col(i);
    out += drk * (gk[k] * gk[k].transpose() - comps_[k].precision);
    out += rk * (dgk * gk[k].transpose() + gk[k] * dgk.transpose());
  }
  out -= h_col * g.transpose() + g * h_col.transpose();
  return out;
}

// ---------------------------------------------------------------------------

std::shared_ptr<const TargetModel> make_target(const std::string& name,
                                               Index dim, double a, double b,
                                               double delta) {
  if (name == "banana") return std::make_shared<BananaTarget>(a, b);
  if (name == "gaussian")
    return std::make_shared<AnisotropicGaussianTarget>(dim, delta);
  if (name == "mixture")
    return std::make_shared<GaussianMixtureTarget>(
        GaussianMixtureTarget::two_mode_example());
  throw ContractViolation("unknown target '" + name + "'");
}

}  // namespace cabps
