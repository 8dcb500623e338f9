#pragma once

#include <functional>
#include <span>
#include <vector>

namespace cabps {

/// sup_x |F(x) - F_n(x)| evaluated exactly at the jump points of F_n.
double ks_distance(std::span<const double> samples,
                   const std::function<double(double)>& cdf);

double median(std::vector<double> values);

struct BrentResult {
  double argmin = 0.0;
  double min = 0.0;
  int evaluations = 0;
};

/// Brent minimisation (golden section + parabolic interpolation) on
/// [lo, hi] using exactly `iterations` evaluations of f. Throws
/// NumericalError if f returns a non-finite value.
BrentResult brent_minimize(const std::function<double(double)>& f, double lo,
                           double hi, int iterations);

struct TuneBrackets {
  double window_lo = 1e-3;
  double window_hi = 1e1;
  double step_lo = 1e-4;
  double step_hi = 1e0;
};

struct TuneEvaluation {
  double window_T = 0.0;
  double grid_step = 0.0;
  double objective = 0.0;
};

struct TuneResult {
  double window_T = 0.0;
  double grid_step = 0.0;
  double objective = 0.0;
  std::vector<TuneEvaluation> trace;
};

/// Outer Brent over log T, inner Brent over log grid step. The objective is
/// evaluated at (T, step); the best pair seen anywhere is returned.
/// `on_evaluation`, if set, sees every evaluation as it happens so callers
/// can persist partial progress.
TuneResult nested_tune(
    const std::function<double(double window_T, double grid_step)>& objective,
    const TuneBrackets& brackets, int outer_iterations, int inner_iterations,
    const std::function<void(const TuneEvaluation&)>& on_evaluation = {});

/// (B + k_ca beta eps) / (A + k_bps eps): cost of CA-BPS relative to BPS.
double efficiency_ratio(double A, double B, double k_bps, double k_ca,
                        double beta, double epsilon);

}  // namespace cabps
