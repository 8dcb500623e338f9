#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace cabps {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Which of the two split flows is active.
enum class Phase { Position, Velocity };

/// SL-PDMP keeps -log(pi) in the velocity-flow potential; CA-BPS moves it
/// into bounce events.
enum class FlowMode { SplitLagrangian, CovarianceAdaptive };

enum class EventKind { Bounce, Flip };

struct PdmpState {
  Vector x;
  Vector v;
  Phase phase = Phase::Position;
};

inline Phase flipped(Phase p) {
  return p == Phase::Position ? Phase::Velocity : Phase::Position;
}

inline const char* to_string(FlowMode m) {
  return m == FlowMode::SplitLagrangian ? "sl" : "ca";
}

inline const char* to_string(EventKind k) {
  return k == EventKind::Bounce ? "bounce" : "flip";
}

/// A caller broke a documented precondition (dimension mismatch, bad index,
/// unsupported target).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine failed (eigendecomposition, non-finite objective).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ContractViolation(what);
}

}  // namespace cabps
