#include "cabps/target_models.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace cabps;

namespace {

std::vector<std::shared_ptr<const TargetModel>> all_targets() {
  return {std::make_shared<BananaTarget>(),
          std::make_shared<BananaTarget>(0.5, 3.0),
          std::make_shared<AnisotropicGaussianTarget>(4, 100.0),
          std::make_shared<GaussianMixtureTarget>(
              GaussianMixtureTarget::two_mode_example())};
}

Vector random_point(const TargetModel& t, oracle::Gen& g) {
  if (t.name() == "banana") return g.banana_point();
  return g.uniform_vector(t.dim(), -2.0, 2.0);
}

}  // namespace

TEST(Banana, LogDensityAtMode) {
  BananaTarget t;
  EXPECT_DOUBLE_EQ(t.log_density(Vector{{1.0, 1.0}}), 0.0);
  EXPECT_TRUE(t.gradient(Vector{{1.0, 1.0}}).isZero(0.0));
}

TEST(Banana, HandComputedValues) {
  BananaTarget t(0.05, 5000);
  const Vector x{{0.0, 1.0}};
  // -5000 (1 - 0)^2 - 0.05 (1 - 0)^2
  EXPECT_NEAR(t.log_density(x), -5000.05, 1e-9);
  const Vector g = t.gradient(x);
  EXPECT_NEAR(g[0], 0.1, 1e-12);
  EXPECT_NEAR(g[1], -10000.0, 1e-9);
}

TEST(Banana, MarginalCdfExamples) {
  BananaTarget t;
  EXPECT_NEAR(t.marginal_cdf_first_coord(1.0), 0.5, 1e-14);
  EXPECT_NEAR(t.marginal_cdf_first_coord(1.0 + std::sqrt(10.0)),
              0.841344746068542948, 1e-12);
}

TEST(Banana, MarginalCdfMatchesQuadrature) {
  // Midpoint rule in x2 across the ridge for every x1 on a fine grid.
  const double a = 0.05, b = 5000.0;
  const double lo = 1.0 - 10 * std::sqrt(10.0), hi = 1.0 + 10 * std::sqrt(10.0);
  const int n1 = 40000;
  const double h1 = (hi - lo) / n1;
  std::vector<double> cum(n1 + 1, 0.0);
  for (int i = 0; i < n1; ++i) {
    const double x1 = lo + (i + 0.5) * h1;
    const double w = 6.0 / std::sqrt(2 * b);
    const int n2 = 60;
    const double h2 = 2 * w / n2;
    double inner = 0.0;
    for (int j = 0; j < n2; ++j) {
      const double x2 = x1 * x1 - w + (j + 0.5) * h2;
      inner += std::exp(-b * std::pow(x2 - x1 * x1, 2) -
                        a * std::pow(1 - x1, 2)) * h2;
    }
    cum[i + 1] = cum[i] + inner * h1;
  }
  BananaTarget t(a, b);
  for (int k = 1; k <= 20; ++k) {
    const double x = -8.0 + k * 0.95;
    const int idx = static_cast<int>(std::lround((x - lo) / h1));
    const double q = cum[idx] / cum[n1];
    EXPECT_NEAR(t.marginal_cdf_first_coord(lo + idx * h1), q, 1e-4) << x;
  }
}

TEST(Gaussian, MarginalAndStructure) {
  AnisotropicGaussianTarget t(20, 1e3);
  EXPECT_NEAR(t.marginal_cdf_first_coord(0.0), 0.5, 1e-15);
  EXPECT_EQ(t.precision_diagonal()[0], 1.0);
  EXPECT_EQ(t.precision_diagonal()[5], 1e3);
  EXPECT_TRUE(t.constant_hessian());
  oracle::Gen g(3);
  for (int k = 0; k < 20; ++k) {
    const Vector x = g.normal_vector(20);
    for (Index i = 0; i < 20; ++i)
      EXPECT_TRUE(t.hessian_partial(x, i).isZero(0.0));
  }
}

TEST(Targets, MixtureHasNoMarginal) {
  auto m = GaussianMixtureTarget::two_mode_example();
  EXPECT_FALSE(m.has_marginal_cdf());
  EXPECT_THROW(m.marginal_cdf_first_coord(0.0), ContractViolation);
}

TEST(Targets, DimensionAndIndexChecks) {
  BananaTarget t;
  EXPECT_THROW(t.log_density(Vector::Zero(3)), ContractViolation);
  EXPECT_THROW(t.hessian_partial(Vector::Zero(2), 2), ContractViolation);
  EXPECT_THROW(make_target("rosenbrock", 2, 1, 1, 1), ContractViolation);
  EXPECT_EQ(make_target("gaussian", 7, 0, 0, 10)->dim(), 7);
}

TEST(Targets, DerivativesAgreeWithFiniteDifferences) {
  oracle::Gen g(11);
  for (const auto& t : all_targets()) {
    for (int k = 0; k < 100; ++k) {
      const Vector x = random_point(*t, g);
      const Vector grad = t->gradient(x);
      const Vector fd_grad = oracle::fd_gradient(
          [&](const Vector& y) { return t->log_density(y); }, x);
      EXPECT_LT(oracle::rel_err(grad, fd_grad, 1.0), 1e-5) << t->name();

      const Matrix H = t->hessian(x);
      const Matrix fd_H = oracle::fd_jacobian(
          [&](const Vector& y) { return t->gradient(y); }, x);
      EXPECT_LT(oracle::rel_err(H, fd_H, 1.0), 1e-4) << t->name();

      for (Index i = 0; i < t->dim(); ++i) {
        const Matrix fd_dH = oracle::fd_matrix_partial(
            [&](const Vector& y) { return t->hessian(y); }, x, i);
        EXPECT_LT(oracle::rel_err(t->hessian_partial(x, i), fd_dH, 1.0), 1e-3)
            << t->name() << " i=" << i;
      }
    }
  }
}

TEST(Targets, DirectionalHessianIsContraction) {
  oracle::Gen g(5);
  for (const auto& t : all_targets()) {
    for (int k = 0; k < 20; ++k) {
      const Vector x = random_point(*t, g);
      const Vector v = g.normal_vector(t->dim());
      Matrix sum = Matrix::Zero(t->dim(), t->dim());
      for (Index i = 0; i < t->dim(); ++i) sum += v[i] * t->hessian_partial(x, i);
      EXPECT_LT((t->hessian_directional(x, v) - sum).norm(),
                1e-10 * std::max(1.0, sum.norm()));
    }
  }
}

TEST(Targets, LineRatePolynomialMatchesRate) {
  oracle::Gen g(9);
  const std::vector<std::shared_ptr<const TargetModel>> ts{
      std::make_shared<BananaTarget>(),
      std::make_shared<AnisotropicGaussianTarget>(5, 10.0)};
  for (const auto& t : ts) {
    for (int k = 0; k < 20; ++k) {
      const Vector x = random_point(*t, g);
      const Vector v = g.normal_vector(t->dim());
      const auto p = t->line_rate_polynomial(x, v);
      ASSERT_TRUE(p.has_value());
      for (double s : {0.0, 0.1, 0.7, 2.0}) {
        double val = 0.0;
        for (std::size_t j = p->size(); j-- > 0;) val = val * s + (*p)[j];
        const double direct = -v.dot(t->gradient(x + s * v));
        EXPECT_NEAR(val, direct, 1e-8 * std::max(1.0, std::abs(direct)));
      }
    }
  }
}
