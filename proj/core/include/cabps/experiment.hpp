#pragma once

#include "cabps/bench_harness.hpp"
#include "cabps/config.hpp"
#include "cabps/dynamics.hpp"
#include "cabps/samplers.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace cabps {

struct SamplerSpec {
  std::string kind;  // bps | sl_pdmp | ca_bps
  /// One value, or one per gap in the target's delta grid.
  std::vector<double> window_T{1.0};
  std::vector<double> grid_step{0.1};
  std::optional<double> refresh_rate;
  double burn_in = 0.1;

  double window_for(std::size_t gap_index) const;
  double step_for(std::size_t gap_index) const;
};

struct TargetSpec {
  std::string name = "banana";
  Index dim = 20;
  double a = 1.0 / 20.0;
  double b = 5000.0;
  /// Spectral gaps for the Gaussian; a single entry otherwise.
  std::vector<double> deltas{1.0};
};

struct ExperimentConfig {
  TargetSpec target;
  std::vector<SamplerSpec> samplers;
  std::size_t replicates = 100;
  Budget budget = Budget::of_seconds(10.0);
  bool tune = false;
  std::uint64_t seed = 1;

  int tune_outer = 10;
  int tune_inner = 10;
  std::size_t tune_replicates = 100;
  Budget tune_budget = Budget::of_seconds(10.0);
  TuneBrackets brackets;

  std::vector<double> betas{1.0, 2.0, 10.0, 100.0};
  std::vector<double> epsilons{0.0, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0};

  double hardness = 1e3;
  IntegratorSettings ode;
  bool record_wall_time = true;

  void validate() const;
};

/// Reads an ExperimentConfig; throws ConfigError with the offending key.
ExperimentConfig experiment_config_from(const Config& cfg);

struct ResultRow {
  std::string target;
  std::string sampler;
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  double ks = 0.0;
  std::size_t bounces = 0;
  std::size_t flips = 0;
  std::size_t windows = 0;
  std::size_t accepts = 0;
  double wall_s = 0.0;
  double window_T = 0.0;
  double grid_step = 0.0;
  bool failed = false;
  std::string error;
};

struct SamplerSummary {
  std::string target;
  double gap = 0.0;
  std::string sampler;
  double window_T = 0.0;
  double grid_step = 0.0;
  double median_ks = 0.0;
  double median_events = 0.0;
  double median_wall_s = 0.0;
  double median_windows = 0.0;
  std::size_t failures = 0;
};

/// One point of an r(eps) curve. `pairing` is "matched" (time and events of
/// CA-BPS rescaled by (ks_ca / ks_bps)^2, a Monte Carlo error ~ time^-1/2
/// heuristic) or "raw". `efficiency` is 1 / ratio: above 1 favours CA-BPS.
struct RatioRow {
  std::string target;
  double gap = 0.0;
  std::string pairing;
  double beta = 0.0;
  double epsilon = 0.0;
  double ratio = 0.0;
  double efficiency = 0.0;
  double A = 0.0;
  double B = 0.0;
  double k_bps = 0.0;
  double k_ca = 0.0;
  double ks_bps = 0.0;
  double ks_ca = 0.0;
};

struct TunedSetting {
  std::string target;
  double gap = 0.0;
  std::string sampler;
  TuneResult result;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::vector<SamplerSummary> summaries;
  std::vector<RatioRow> ratios;
  std::vector<TunedSetting> tuned;
};

struct ExperimentHooks {
  std::function<void(const std::string&)> log;
  std::function<void(const TunedSetting&, const TuneEvaluation&)> on_tune_evaluation;
};

std::string target_id(const TargetSpec& spec, double gap);

/// One chain; KS of the first coordinate after burn-in against the target's
/// analytic marginal. Failures are recorded in the row, not thrown.
ResultRow run_replicate(const TargetModel& target, const std::string& target_name,
                        const SamplerSpec& spec, double window_T,
                        double grid_step, const ExperimentConfig& cfg,
                        const Budget& budget, std::size_t replicate,
                        std::uint64_t seed);

/// Median KS over `replicates` chains with common seeds.
double tuning_objective(const TargetModel& target, const SamplerSpec& spec,
                        double window_T, double grid_step,
                        const ExperimentConfig& cfg, std::size_t gap_index,
                        unsigned jobs);

/// Gap encoded in a Gaussian target id; 0 for other targets.
double gap_from_target_id(const std::string& id);

/// Medians per (target, sampler) in order of first appearance, and r(eps)
/// rows for every target that has both a bps and a ca_bps sampler.
void summarise(const std::vector<double>& betas,
               const std::vector<double>& epsilons, ExperimentResult& result);

/// Parses a results.csv written by write_results_csv.
std::vector<ResultRow> read_results_csv(std::istream& in);

ExperimentResult run_experiment(const ExperimentConfig& cfg, unsigned jobs,
                                const ExperimentHooks& hooks = {},
                                bool only_tune = false);

/// Runs fn(0..n-1) over `jobs` threads; fn must not throw.
void parallel_for(std::size_t n, unsigned jobs,
                  const std::function<void(std::size_t)>& fn);

/// Decimal with 17 significant digits ("nan", "inf" for non-finite).
std::string format_number(double x);

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);
void write_summary_csv(std::ostream& out, const std::vector<RatioRow>& rows);
void write_medians_csv(std::ostream& out, const std::vector<SamplerSummary>& rows);
void write_tuning_csv(std::ostream& out, const std::vector<TunedSetting>& tuned);

}  // namespace cabps
