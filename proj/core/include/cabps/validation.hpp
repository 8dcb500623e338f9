#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cabps {

struct SuiteResult {
  std::string name;
  std::string invariant;
  bool passed = false;
  /// Worst observed discrepancy and the tolerance it was held to.
  double worst = 0.0;
  double tolerance = 0.0;
  double seconds = 0.0;
  std::string detail;
};

struct ValidationOptions {
  std::uint64_t seed = 7;
  /// Scales the sample sizes of the Monte Carlo smoke tests.
  double effort = 1.0;
};

/// Cross-module oracle suites: derivative and divergence oracles,
/// reflection invariants, volume-factor round trips and stationarity smoke
/// tests.
std::vector<SuiteResult> run_validation(const ValidationOptions& options = {});

}  // namespace cabps
