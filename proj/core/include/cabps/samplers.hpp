#pragma once

#include "cabps/metropolised_core.hpp"
#include "cabps/rng.hpp"
#include "cabps/target_models.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cabps {

/// Stop after `seconds` of wall time or after `windows` recorded samples,
/// whichever comes first. A zero field means "no limit on that axis"; a
/// budget with both fields zero produces an empty chain.
struct Budget {
  double seconds = 0.0;
  std::size_t windows = 0;

  static Budget of_seconds(double s) { return {s, 0}; }
  static Budget of_windows(std::size_t n) { return {0.0, n}; }
  bool empty() const { return seconds <= 0.0 && windows == 0; }
};

struct ChainOutput {
  std::vector<Vector> samples;
  std::size_t bounces = 0;
  std::size_t flips = 0;
  std::size_t refreshments = 0;
  std::size_t accepts = 0;
  std::size_t rejects = 0;
  /// Rejections caused by proposals that could not be completed.
  std::size_t invalid = 0;
  double wall_seconds = 0.0;
  std::string config_echo;

  std::size_t events() const { return bounces + flips; }
  std::size_t windows() const { return samples.size(); }
};

struct BpsParams {
  /// Spacing of recorded samples along the trajectory.
  double window_T = 1.0;
  /// Cell length used when thinning against polynomial rate bounds.
  double grid_step = 0.1;
  /// Poisson refreshment rate; defaults to 1 / window_T.
  std::optional<double> refresh_rate;
};

/// Time to the next bounce of Euclidean BPS from (x, v), or nullopt if none
/// occurs before `horizon`. The target must provide a line rate polynomial.
std::optional<double> bps_next_bounce(const TargetModel& target,
                                      const Vector& x, const Vector& v,
                                      double horizon, double grid_step,
                                      Rng& rng);

ChainOutput run_bps(const TargetModel& target, const BpsParams& params,
                    const Budget& budget, Rng& rng,
                    std::optional<Vector> x0 = std::nullopt);

/// Metropolised chains; params.mode is overridden by the sampler kind.
ChainOutput run_sl_pdmp(const TargetModel& target, MetroParams params,
                        const Budget& budget, Rng& rng,
                        std::optional<Vector> x0 = std::nullopt);

ChainOutput run_ca_bps(const TargetModel& target, MetroParams params,
                       const Budget& budget, Rng& rng,
                       std::optional<Vector> x0 = std::nullopt);

/// Drops the leading burn_in_fraction of the chain; keeps ceil((1 - f) n).
std::vector<Vector> collect_samples(const ChainOutput& chain,
                                    double burn_in_fraction);

}  // namespace cabps
