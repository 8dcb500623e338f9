#include "cabps/bench_harness.hpp"

#include "cabps/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cabps {

double ks_distance(std::span<const double> samples,
                   const std::function<double(double)>& cdf) {
  require(!samples.empty(), "ks_distance: empty sample set");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double F = cdf(sorted[i]);
    d = std::max(d, std::abs(F - static_cast<double>(i + 1) / n));
    d = std::max(d, std::abs(F - static_cast<double>(i) / n));
  }
  return d;
}

double median(std::vector<double> values) {
  require(!values.empty(), "median: empty input");
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

BrentResult brent_minimize(const std::function<double(double)>& f, double lo,
                           double hi, int iterations) {
  require(lo < hi, "brent_minimize: need lo < hi");
  require(iterations >= 1, "brent_minimize: need at least one evaluation");
  constexpr double golden = 0.3819660112501051;
  const double eps = std::sqrt(std::numeric_limits<double>::epsilon());

  BrentResult out;
  auto eval = [&](double x) {
    const double y = f(x);
    ++out.evaluations;
    if (!std::isfinite(y))
      throw NumericalError("brent_minimize: objective is not finite at x = " +
                           std::to_string(x));
    return y;
  };

  double a = lo, b = hi;
  double x = a + golden * (b - a);
  double w = x, v = x;
  double fx = eval(x);
  double fw = fx, fv = fx;
  double d = 0.0, e = 0.0;

  while (out.evaluations < iterations) {
    const double m = 0.5 * (a + b);
    const double tol = eps * std::abs(x) + 1e-12;
    const double tol2 = 2.0 * tol;

    bool golden_step = true;
    if (std::abs(e) > tol) {
      double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      const double e_prev = e;
      e = d;
      if (std::abs(p) < std::abs(0.5 * q * e_prev) && p > q * (a - x) &&
          p < q * (b - x)) {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = x < m ? tol : -tol;
        golden_step = false;
      }
    }
    if (golden_step) {
      e = (x < m ? b : a) - x;
      d = golden * e;
    }
    const double u = std::abs(d) >= tol ? x + d : x + (d > 0.0 ? tol : -tol);
    const double fu = eval(u);

    if (fu <= fx) {
      (u < x ? b : a) = x;
      v = w, fv = fw;
      w = x, fw = fx;
      x = u, fx = fu;
    } else {
      (u < x ? a : b) = u;
      if (fu <= fw || w == x) {
        v = w, fv = fw;
        w = u, fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u, fv = fu;
      }
    }
  }
  out.argmin = x;
  out.min = fx;
  return out;
}

TuneResult nested_tune(
    const std::function<double(double, double)>& objective,
    const TuneBrackets& brackets, int outer_iterations, int inner_iterations,
    const std::function<void(const TuneEvaluation&)>& on_evaluation) {
  require(brackets.window_lo > 0.0 && brackets.window_lo < brackets.window_hi,
          "nested_tune: invalid window bracket");
  require(brackets.step_lo > 0.0 && brackets.step_lo < brackets.step_hi,
          "nested_tune: invalid grid-step bracket");

  TuneResult best;
  best.objective = std::numeric_limits<double>::infinity();

  auto outer = [&](double log_T) {
    const double T = std::exp(log_T);
    auto inner = [&](double log_step) {
      const double step = std::exp(log_step);
      const TuneEvaluation ev{T, step, objective(T, step)};
      best.trace.push_back(ev);
      if (on_evaluation) on_evaluation(ev);
      if (ev.objective < best.objective) {
        best.window_T = T;
        best.grid_step = step;
        best.objective = ev.objective;
      }
      return ev.objective;
    };
    return brent_minimize(inner, std::log(brackets.step_lo),
                          std::log(brackets.step_hi), inner_iterations)
        .min;
  };
  brent_minimize(outer, std::log(brackets.window_lo),
                 std::log(brackets.window_hi), outer_iterations);
  return best;
}

double efficiency_ratio(double A, double B, double k_bps, double k_ca,
                        double beta, double epsilon) {
  require(A > 0.0, "efficiency_ratio: A must be positive");
  require(k_bps >= 0.0 && k_ca >= 0.0, "efficiency_ratio: negative count");
  require(beta >= 0.0 && epsilon >= 0.0,
          "efficiency_ratio: beta and epsilon must be nonnegative");
  const double denom = A + k_bps * epsilon;
  if (denom == 0.0) throw std::domain_error("efficiency_ratio: zero denominator");
  return (B + k_ca * beta * epsilon) / denom;
}

}  // namespace cabps
