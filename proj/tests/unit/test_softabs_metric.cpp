#include "cabps/softabs_metric.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace cabps;

TEST(SoftAbsScalar, Examples) {
  EXPECT_DOUBLE_EQ(softabs_scalar(0.0, 2.0), 0.5);
  EXPECT_NEAR(softabs_scalar(5.0, 10.0), 5.0, 1e-12);
  // 3 coth(3), evaluated at 30 digits.
  EXPECT_NEAR(softabs_scalar(-3.0, 1.0), 3.01490946994106751, 1e-13);
}

TEST(SoftAbsScalar, EvenAndBoundedBelow) {
  oracle::Gen g(1);
  for (int k = 0; k < 1000; ++k) {
    const double lam = g.uniform(-50, 50) * std::pow(10.0, g.integer(-12, 0));
    const double h = std::pow(10.0, g.uniform(-1, 6));
    const double f = softabs_scalar(lam, h);
    EXPECT_EQ(f, softabs_scalar(-lam, h));
    EXPECT_GE(f, std::max(std::abs(lam), 1.0 / h) - 1e-12);
  }
}

TEST(BuildMetric, Examples) {
  const MetricState a = build_metric(Matrix(Vector{{-1.0, -10.0}}.asDiagonal()), 1e3);
  EXPECT_LT((a.G - Matrix(Vector{{1.0, 10.0}}.asDiagonal())).norm(), 1e-10);

  const MetricState b = build_metric(Matrix::Zero(2, 2), 2.0);
  EXPECT_LT((b.G - 0.5 * Matrix::Identity(2, 2)).norm(), 1e-15);

  Matrix H(2, 2);
  H << 0, 1, 1, 0;
  const MetricState c = build_metric(H, 1e3);
  EXPECT_LT((c.G - Matrix::Identity(2, 2)).norm(), 1e-9);
}

TEST(BuildMetric, StateInvariantsOnRandomMatrices) {
  oracle::Gen g(2);
  for (int k = 0; k < 200; ++k) {
    const Index d = g.integer(1, 6);
    const Matrix H = g.symmetric(d, std::pow(10.0, g.uniform(-3, 3)));
    const double h = std::pow(10.0, g.uniform(0, 6));
    const MetricState m = build_metric(H, h);
    const Matrix& Q = m.eigenvectors;
    EXPECT_LT((Q.transpose() * Q - Matrix::Identity(d, d)).norm(), 1e-10);
    EXPECT_LT((Q * m.softened.asDiagonal() * Q.transpose() - m.G).norm(),
              1e-10 * std::max(1.0, m.G.norm()));
    EXPECT_LT((m.G * m.G_inv - Matrix::Identity(d, d)).norm(), 1e-8);
    EXPECT_LT((m.velocity_factor * m.velocity_factor.transpose() - m.G_inv).norm(),
              1e-8 * std::max(1.0, m.G_inv.norm()));
    double logdet = 0;
    for (Index i = 0; i < d; ++i) {
      EXPECT_GE(m.softened[i],
                std::max(std::abs(m.eigenvalues[i]), 1.0 / h) - 1e-12);
      logdet += std::log(m.softened[i]);
    }
    EXPECT_NEAR(m.log_det, logdet, 1e-10 * std::max(1.0, std::abs(logdet)));
  }
}

TEST(BuildMetric, ContinuousNearDegenerateEigenvalues) {
  oracle::Gen g(4);
  const Matrix H = 2.0 * Matrix::Identity(3, 3);
  const MetricState base = build_metric(H, 10.0);
  for (int k = 0; k < 50; ++k) {
    const Matrix P = g.symmetric(3, 1e-9);
    const MetricState m = build_metric(H + P, 10.0);
    EXPECT_LE((m.G - base.G).norm(), 1e-6);
  }
}

TEST(JMatrix, Examples) {
  EXPECT_TRUE(j_matrix(Vector::Zero(3), 5.0).isZero(0.0));
  // coth(1) - 1/sinh(1)^2, evaluated at 30 digits.
  const Matrix J = j_matrix(Vector{{1.0, 1.0}}, 1.0);
  EXPECT_NEAR(J(0, 1), 0.58897362453302084, 1e-12);
  EXPECT_NEAR(J(0, 0), J(0, 1), 1e-12);
  EXPECT_NEAR(j_matrix(Vector{{2.0, -2.0}}, 1e3)(0, 1), 0.0, 1e-12);
}

TEST(JMatrix, DividedDifferencesSymmetric) {
  oracle::Gen g(6);
  for (int k = 0; k < 50; ++k) {
    Vector e = g.uniform_vector(4, -5, 5);
    std::sort(e.data(), e.data() + 4);
    const Matrix J = j_matrix(e, 3.0);
    EXPECT_LT((J - J.transpose()).norm(), 1e-14);
    for (Index i = 0; i < 4; ++i)
      for (Index j = 0; j < 4; ++j)
        if (std::abs(e[i] - e[j]) > 1e-3)
          EXPECT_NEAR(J(i, j),
                      (softabs_scalar(e[i], 3) - softabs_scalar(e[j], 3)) /
                          (e[i] - e[j]),
                      1e-12);
  }
}

TEST(MetricPartial, ZeroDirectionAndConstantHessian) {
  const MetricState m = build_metric(Matrix(Vector{{1.0, 3.0}}.asDiagonal()), 1e3);
  const Matrix J = j_matrix(m.eigenvalues, m.hardness);
  EXPECT_TRUE(metric_partial(m, J, Matrix::Zero(2, 2)).isZero(0.0));

  AnisotropicGaussianTarget t(3, 10.0);
  const LocalGeometry geom = local_geometry(t, Vector::Ones(3));
  for (const Matrix& P : metric_derivatives(t, geom).partials)
    EXPECT_TRUE(P.isZero(0.0));
}

TEST(MetricPartial, MatchesFiniteDifferencesOnBanana) {
  BananaTarget t;
  auto G_at = [&](const Vector& y) { return build_metric(t.hessian(y)).G; };
  auto check = [&](const Vector& x) {
    const LocalGeometry geom = local_geometry(t, x);
    const MetricDerivatives d = metric_derivatives(t, geom);
    for (Index i = 0; i < 2; ++i) {
      const Matrix fd = oracle::fd_matrix_partial(G_at, x, i);
      EXPECT_LT(oracle::rel_err(d.partials[i], fd), 1e-4) << x.transpose();
      EXPECT_LT((d.partials[i] - d.partials[i].transpose()).norm(), 1e-12);
    }
  };
  check(Vector{{0.3, 0.2}});
  oracle::Gen g(7);
  for (int k = 0; k < 50; ++k) check(g.banana_point());
}

TEST(Christoffel, ZeroPartialsGiveZero) {
  const MetricState m = build_metric(Matrix::Identity(3, 3), 1e3);
  const MetricDerivatives d =
      christoffel(m, std::vector<Matrix>(3, Matrix::Zero(3, 3)));
  EXPECT_TRUE(d.gamma.is_zero());
  EXPECT_TRUE(d.trace_gamma.isZero(0.0));
  EXPECT_TRUE(d.grad_half_logdet.isZero(0.0));
}

TEST(Christoffel, IndexFormulaAndContractions) {
  BananaTarget t;
  oracle::Gen g(8);
  for (int k = 0; k < 100; ++k) {
    const Vector x = g.banana_point();
    const LocalGeometry geom = local_geometry(t, x);
    const MetricDerivatives d = metric_derivatives(t, geom);
    const Matrix& Gi = geom.metric.G_inv;
    const auto& P = d.partials;
    for (Index a = 0; a < 2; ++a)
      for (Index b = 0; b < 2; ++b)
        for (Index c = 0; c < 2; ++c) {
          EXPECT_EQ(d.gamma(a, b, c), d.gamma(a, c, b));
          double ref = 0;
          for (Index e = 0; e < 2; ++e)
            ref += 0.5 * Gi(a, e) * (P[b](c, e) + P[c](b, e) - P[e](b, c));
          EXPECT_NEAR(d.gamma(a, b, c), ref, 1e-9 * std::max(1.0, std::abs(ref)));
        }
    EXPECT_LT((d.trace_gamma - d.grad_half_logdet).norm(),
              1e-9 * std::max(1.0, d.trace_gamma.norm()));
  }
}

TEST(Christoffel, GradHalfLogdetMatchesFiniteDifference) {
  BananaTarget t;
  oracle::Gen g(10);
  for (int k = 0; k < 20; ++k) {
    const Vector x = g.banana_point();
    const MetricDerivatives d = metric_derivatives(t, local_geometry(t, x));
    // A small step keeps the quotient away from the softened-eigenvalue kink.
    const Vector fd = oracle::fd_gradient(
        [&](const Vector& y) { return 0.5 * build_metric(t.hessian(y)).log_det; },
        x, 1e-8);
    EXPECT_LT(oracle::rel_err(d.grad_half_logdet, fd, 1.0), 1e-4);
  }
}

TEST(DirectionalDerivative, BasisZeroAndLinearity) {
  BananaTarget t;
  const LocalGeometry geom = local_geometry(t, Vector{{0.3, 0.2}});
  const MetricDerivatives d = metric_derivatives(t, geom);
  EXPECT_TRUE(directional_metric_derivative(d.partials, Vector::Zero(2)).isZero(0.0));
  EXPECT_LT((directional_metric_derivative(d.partials, Vector{{0.0, 1.0}}) -
             d.partials[1]).norm(), 1e-15);
  oracle::Gen g(12);
  for (int k = 0; k < 50; ++k) {
    const Vector v = g.normal_vector(2), w = g.normal_vector(2);
    const Matrix lhs = directional_metric_derivative(d.partials, v + w);
    const Matrix rhs = directional_metric_derivative(d.partials, v) +
                       directional_metric_derivative(d.partials, w);
    EXPECT_LT((lhs - rhs).norm(), 1e-12 * std::max(1.0, lhs.norm()));
    // The Hessian-directional path agrees with contracting all partials.
    EXPECT_LT(oracle::rel_err(directional_metric_derivative(t, geom, v),
                              directional_metric_derivative(d.partials, v)),
              1e-10);
  }
}
