#pragma once

#include "cabps/types.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace cabps {

/// Unnormalized target density with analytic derivatives of log(pi) up to
/// third order.
///
/// The public methods validate dimensions and forward to the protected
/// evaluators, which assume well-formed input. Implementations are pure, so a
/// single instance can be shared between worker threads.
class TargetModel {
 public:
  virtual ~TargetModel() = default;

  virtual std::string name() const = 0;
  virtual Index dim() const = 0;

  double log_density(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  Matrix hessian(const Vector& x) const;
  /// d(Hessian)/dx_i.
  Matrix hessian_partial(const Vector& x, Index i) const;
  /// sum_i v_i d(Hessian)/dx_i, the Hessian derivative along v.
  Matrix hessian_directional(const Vector& x, const Vector& v) const;

  virtual bool has_marginal_cdf() const { return false; }
  /// Exact CDF of the first-coordinate marginal.
  virtual double marginal_cdf_first_coord(double t) const;

  /// Ascending coefficients of t -> -v.grad log pi(x + v t) when that map is a
  /// polynomial (used for exact BPS event simulation).
  virtual std::optional<std::vector<double>> line_rate_polynomial(
      const Vector& x, const Vector& v) const;

  /// True when the Hessian does not depend on x.
  virtual bool constant_hessian() const { return false; }

 protected:
  virtual double do_log_density(const Vector& x) const = 0;
  virtual Vector do_gradient(const Vector& x) const = 0;
  virtual Matrix do_hessian(const Vector& x) const = 0;
  virtual Matrix do_hessian_partial(const Vector& x, Index i) const = 0;
  virtual Matrix do_hessian_directional(const Vector& x, const Vector& v) const;

  void check_point(const Vector& x) const;
};

/// log pi(x1, x2) = -b (x2 - x1^2)^2 - a (1 - x1)^2.
class BananaTarget final : public TargetModel {
 public:
  explicit BananaTarget(double a = 1.0 / 20.0, double b = 5000.0);

  std::string name() const override { return "banana"; }
  Index dim() const override { return 2; }
  double a() const { return a_; }
  double b() const { return b_; }

  bool has_marginal_cdf() const override { return true; }
  /// Integrating x2 out leaves exp(-a (1 - x1)^2): Normal(1, 1 / (2a)).
  double marginal_cdf_first_coord(double t) const override;

  std::optional<std::vector<double>> line_rate_polynomial(
      const Vector& x, const Vector& v) const override;

 protected:
  double do_log_density(const Vector& x) const override;
  Vector do_gradient(const Vector& x) const override;
  Matrix do_hessian(const Vector& x) const override;
  Matrix do_hessian_partial(const Vector& x, Index i) const override;
  Matrix do_hessian_directional(const Vector& x,
                                const Vector& v) const override;

 private:
  double a_;
  double b_;
};

/// Zero-mean Gaussian with covariance Diag(1, 1/delta, ..., 1/delta).
class AnisotropicGaussianTarget final : public TargetModel {
 public:
  AnisotropicGaussianTarget(Index dim = 20, double delta = 1.0);

  std::string name() const override { return "gaussian"; }
  Index dim() const override { return dim_; }
  double delta() const { return delta_; }
  const Vector& precision_diagonal() const { return precision_; }

  bool has_marginal_cdf() const override { return true; }
  double marginal_cdf_first_coord(double t) const override;

  std::optional<std::vector<double>> line_rate_polynomial(
      const Vector& x, const Vector& v) const override;

  bool constant_hessian() const override { return true; }

 protected:
  double do_log_density(const Vector& x) const override;
  Vector do_gradient(const Vector& x) const override;
  Matrix do_hessian(const Vector& x) const override;
  Matrix do_hessian_partial(const Vector& x, Index i) const override;
  Matrix do_hessian_directional(const Vector& x,
                                const Vector& v) const override;

 private:
  Index dim_;
  double delta_;
  Vector precision_;
};

struct MixtureComponent {
  double weight;
  Vector mean;
  Matrix covariance;
};

/// Finite Gaussian mixture. Only used to visualise the metric.
class GaussianMixtureTarget final : public TargetModel {
 public:
  explicit GaussianMixtureTarget(std::vector<MixtureComponent> components);

  /// Two 2-d components with opposite correlation.
  static GaussianMixtureTarget two_mode_example();

  std::string name() const override { return "mixture"; }
  Index dim() const override { return dim_; }

 protected:
  double do_log_density(const Vector& x) const override;
  Vector do_gradient(const Vector& x) const override;
  Matrix do_hessian(const Vector& x) const override;
  Matrix do_hessian_partial(const Vector& x, Index i) const override;

 private:
  struct Component {
    double log_weight;
    Vector mean;
    Matrix precision;
    double log_norm;
  };
  // Log of weighted component densities, and their softmax.
  Vector log_terms(const Vector& x) const;
  Vector responsibilities(const Vector& x) const;

  Index dim_;
  std::vector<Component> comps_;
};

double standard_normal_cdf(double z);

/// Builds a target from a name and parameters ("banana", "gaussian",
/// "mixture").
std::shared_ptr<const TargetModel> make_target(const std::string& name,
                                               Index dim, double a, double b,
                                               double delta);

}  // namespace cabps
