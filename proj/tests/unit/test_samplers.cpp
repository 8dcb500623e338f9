#include "cabps/bench_harness.hpp"
#include "cabps/samplers.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace cabps;

namespace {

std::vector<double> first_coords(const std::vector<Vector>& xs) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(x[0]);
  return out;
}

void expect_standard_gaussian(const ChainOutput& out, double ks_tol,
                              double mean_tol, double var_tol) {
  const auto kept = collect_samples(out, 0.1);
  ASSERT_FALSE(kept.empty());
  Vector mean = Vector::Zero(kept[0].size());
  for (const auto& x : kept) mean += x;
  mean /= static_cast<double>(kept.size());
  Vector var = Vector::Zero(mean.size());
  for (const auto& x : kept) var += (x - mean).cwiseAbs2();
  var /= static_cast<double>(kept.size());
  EXPECT_LT(mean.cwiseAbs().maxCoeff(), mean_tol);
  EXPECT_LT((var.array() - 1.0).abs().maxCoeff(), var_tol);
  EXPECT_LT(ks_distance(first_coords(kept), standard_normal_cdf), ks_tol);
}

}  // namespace

TEST(Bps, FirstBounceLawOn1dGaussian) {
  AnisotropicGaussianTarget t(1, 1.0);
  Rng rng(1);
  std::vector<double> times;
  for (int k = 0; k < 20000; ++k) {
    const auto tau = bps_next_bounce(t, Vector{{0.0}}, Vector{{1.0}}, 1e9, 0.1, rng);
    ASSERT_TRUE(tau.has_value());
    times.push_back(*tau);
  }
  EXPECT_LT(ks_distance(times, [](double s) { return 1 - std::exp(-s * s / 2); }),
            0.015);
}

TEST(Bps, ThinningMatchesBananaRateLaw) {
  // Survival of the thinned clock against exp(-integral of the rate).
  BananaTarget t(0.5, 3.0);
  const Vector x{{0.2, -0.4}}, v{{0.6, 0.3}};
  const auto p = *t.line_rate_polynomial(x, v);
  auto survival = [&](double s) {
    double acc = 0;
    const int n = 4000;
    for (int i = 0; i < n; ++i) {
      const double u = (i + 0.5) * s / n;
      double val = 0;
      for (std::size_t j = p.size(); j-- > 0;) val = val * u + p[j];
      acc += std::max(0.0, val) * s / n;
    }
    return std::exp(-acc);
  };
  Rng rng(2);
  std::vector<double> times;
  for (int k = 0; k < 20000; ++k) {
    const auto tau = bps_next_bounce(t, x, v, 50.0, 0.1, rng);
    ASSERT_TRUE(tau.has_value());
    times.push_back(*tau);
  }
  EXPECT_LT(ks_distance(times, [&](double s) { return 1 - survival(s); }), 0.015);
}

TEST(Bps, HorizonAndMissingPolynomial) {
  AnisotropicGaussianTarget t(1, 1.0);
  Rng rng(3);
  // Moving downhill: the rate is zero until the mode is crossed.
  EXPECT_FALSE(bps_next_bounce(t, Vector{{-5.0}}, Vector{{1.0}}, 1.0, 0.1, rng));
  auto mix = GaussianMixtureTarget::two_mode_example();
  EXPECT_THROW(bps_next_bounce(mix, Vector::Zero(2), Vector::Ones(2), 1, 0.1, rng),
               ContractViolation);
}

TEST(Bps, GaussianStationarity) {
  AnisotropicGaussianTarget t(2, 1.0);
  Rng rng(4);
  const ChainOutput out = run_bps(t, BpsParams{}, Budget::of_windows(50000), rng);
  EXPECT_EQ(out.windows(), 50000u);
  EXPECT_GT(out.bounces, 0u);
  EXPECT_GT(out.refreshments, 0u);
  expect_standard_gaussian(out, 0.02, 0.03, 0.05);
}

TEST(Bps, NoRefreshKeepsSpeed) {
  AnisotropicGaussianTarget t(2, 1.0);
  Rng rng(5);
  BpsParams p;
  p.window_T = 0.5;
  p.refresh_rate = 0.0;
  const ChainOutput out = run_bps(t, p, Budget::of_windows(200), rng);
  EXPECT_EQ(out.refreshments, 0u);
  EXPECT_GT(out.bounces, 0u);

  // The same dynamics stepped by hand: bounces are isometries.
  const MetricState euclid = build_metric(-Matrix::Identity(2, 2), 1e12);
  Vector x{{0.5, -0.2}}, v{{0.3, 1.1}};
  const double speed = v.norm();
  for (int k = 0; k < 1000; ++k) {
    const auto tau = bps_next_bounce(t, x, v, 1e9, 0.1, rng);
    ASSERT_TRUE(tau.has_value());
    x += *tau * v;
    v = reflect(v, t.gradient(x), euclid);
  }
  EXPECT_NEAR(v.norm(), speed, 1e-10);
}

TEST(Samplers, EmptyBudgetGivesEmptyChain) {
  BananaTarget t;
  Rng rng(6);
  EXPECT_TRUE(run_bps(t, BpsParams{}, Budget{}, rng).samples.empty());
  EXPECT_TRUE(run_sl_pdmp(t, MetroParams{}, Budget{}, rng).samples.empty());
  EXPECT_TRUE(run_ca_bps(t, MetroParams{}, Budget{}, rng).samples.empty());
}

TEST(Samplers, CaBpsOnGaussianHasNoFlips) {
  AnisotropicGaussianTarget t(2, 1.0);
  Rng rng(7);
  MetroParams p;
  p.window_T = 1.0;
  p.grid_step = 0.1;
  const ChainOutput out = run_ca_bps(t, p, Budget::of_windows(30000), rng);
  EXPECT_EQ(out.flips, 0u);
  EXPECT_EQ(out.accepts + out.rejects, out.windows());
  EXPECT_EQ(out.events(), out.bounces + out.flips);
  expect_standard_gaussian(out, 0.02, 0.03, 0.05);

  AnisotropicGaussianTarget aniso(5, 1e4);
  Rng rng2(8);
  EXPECT_EQ(run_ca_bps(aniso, p, Budget::of_windows(500), rng2).flips, 0u);
}

TEST(Samplers, SlPdmpOnGaussianFlipsAndIsStationary) {
  AnisotropicGaussianTarget t(2, 1.0);
  Rng rng(9);
  MetroParams p;
  const ChainOutput out = run_sl_pdmp(t, p, Budget::of_windows(4000), rng);
  EXPECT_GT(out.flips, 0u);
  EXPECT_EQ(out.accepts + out.rejects, out.windows());
  expect_standard_gaussian(out, 0.05, 0.08, 0.12);
}

TEST(Samplers, CaBpsOnBananaHasBothEventKinds) {
  BananaTarget t;
  Rng rng(10);
  MetroParams p;
  p.window_T = 0.5;
  p.grid_step = 0.02;
  const ChainOutput out = run_ca_bps(t, p, Budget::of_windows(400), rng,
                                     Vector{{1.0, 1.0}});
  EXPECT_GT(out.bounces, 0u);
  EXPECT_GT(out.flips, 0u);
  EXPECT_EQ(out.refreshments, out.windows());
}

TEST(Samplers, SeedDeterminism) {
  BananaTarget t;
  MetroParams p;
  p.window_T = 0.3;
  auto sl = [&] {
    Rng rng(11);
    return run_sl_pdmp(t, p, Budget::of_windows(50), rng);
  };
  auto bps = [&] {
    Rng rng(11);
    return run_bps(t, BpsParams{}, Budget::of_windows(200), rng);
  };
  const ChainOutput a = sl(), b = sl(), c = bps(), d = bps();
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_EQ(a.flips, b.flips);
  EXPECT_EQ(c.samples, d.samples);
  EXPECT_EQ(c.bounces, d.bounces);
}

TEST(Samplers, WallClockBudgetRespected) {
  BananaTarget t;
  Rng rng(12);
  const ChainOutput out = run_ca_bps(t, MetroParams{}, Budget::of_seconds(0.3), rng);
  EXPECT_GT(out.windows(), 0u);
  EXPECT_LE(out.wall_seconds, 0.3 * 1.2);
}

TEST(CollectSamples, Fractions) {
  ChainOutput c;
  for (int i = 0; i < 10; ++i) c.samples.push_back(Vector::Constant(1, i));
  EXPECT_EQ(collect_samples(c, 0.0).size(), 10u);
  const auto half = collect_samples(c, 0.5);
  ASSERT_EQ(half.size(), 5u);
  EXPECT_EQ(half.front()[0], 5.0);
  oracle::Gen g(13);
  for (int k = 0; k < 200; ++k) {
    ChainOutput ch;
    const int n = g.integer(0, 50);
    ch.samples.assign(n, Vector::Zero(1));
    const double f = g.uniform(0.0, 0.99);
    EXPECT_EQ(collect_samples(ch, f).size(),
              static_cast<std::size_t>(std::ceil((1 - f) * n - 1e-9)));
  }
  EXPECT_TRUE(collect_samples(ChainOutput{}, 0.3).empty());
  EXPECT_THROW(collect_samples(c, 1.0), ContractViolation);
  EXPECT_THROW(collect_samples(c, -0.1), ContractViolation);
}
