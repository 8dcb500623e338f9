#pragma once

#include "cabps/dynamics.hpp"
#include "cabps/events_rates.hpp"
#include "cabps/rng.hpp"
#include "cabps/softabs_metric.hpp"
#include "cabps/target_models.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace cabps {

/// Hessian-derived quantities of a constant-Hessian target, computed once
/// and shared by every window of a chain.
struct FixedMetric {
  Matrix hessian;
  MetricState metric;
  Matrix J;
};

/// nullptr unless target.constant_hessian().
std::shared_ptr<const FixedMetric> fixed_metric_for(const TargetModel& target,
                                                    double hardness);

struct MetroParams {
  FlowMode mode = FlowMode::CovarianceAdaptive;
  /// Window length T of one proposal; velocity is refreshed at every window.
  double window_T = 1.0;
  /// Cell length of the piecewise-constant rate approximation on position
  /// segments.
  double grid_step = 0.1;
  double hardness = kDefaultHardness;
  IntegratorSettings ode;
  /// Optional cache for constant-Hessian targets (see fixed_metric_for).
  std::shared_ptr<const FixedMetric> fixed_metric;
};

/// local_geometry, served from params.fixed_metric when present.
LocalGeometry geometry_at(const TargetModel& target, const Vector& x,
                          const MetroParams& params);

struct SkeletonEvent {
  double time = 0.0;
  EventKind kind = EventKind::Bounce;

  bool operator==(const SkeletonEvent&) const = default;
};

/// Coordinates of a path in path space: start state, window, typed event
/// times and the time direction in which it was generated.
///
/// Event times are stored as generated; a reversed skeleton keeps them and
/// sets `mirrored`, so reversal is an exact involution. Use time(i).
struct PathSkeleton {
  PdmpState initial;
  double window = 0.0;
  std::vector<SkeletonEvent> events;
  int direction = 1;
  bool mirrored = false;
  PdmpState terminal;

  double time(std::size_t i) const {
    return mirrored ? window - events[i].time : events[i].time;
  }
};

/// Rates of the competing event kinds, frozen at a cell start.
struct CellRates {
  double bounce = 0.0;
  double flip = 0.0;
  double total() const { return bounce + flip; }
  double of(EventKind k) const { return k == EventKind::Bounce ? bounce : flip; }
};

struct CellEvent {
  double time = 0.0;
  EventKind kind = EventKind::Bounce;
  double rate = 0.0;  // rate of `kind` in the cell where it fired
};

/// Piecewise-constant clock: cells [k step, (k+1) step) anchored at 0, rates
/// from `rates(cell_start)`, competing exponential clocks per cell. Returns
/// the first event before `duration`, adding the integrated total rate up to
/// the event (or to `duration`) to `integral` and the number of cells used
/// to `cells`.
std::optional<CellEvent> next_cell_event(
    const std::function<CellRates(double cell_start)>& rates, double duration,
    double step, Rng& rng, double& integral, Index& cells);

/// One deterministic stretch of a path between consecutive events (or the
/// window boundaries), together with its density bookkeeping.
///
/// "forward" quantities belong to the process that generated the path (in
/// the path's direction); "reverse" quantities belong to the opposite-time
/// process traversing the same states backwards, which is what the
/// reversed path needs.
struct TraceSegment {
  Phase phase = Phase::Position;
  double t_begin = 0.0;
  double t_end = 0.0;
  PdmpState begin;  // state right after the event at t_begin
  PdmpState end;    // state right before the event at t_end
  std::optional<EventKind> begin_event;
  std::optional<EventKind> end_event;
  /// Number of rate cells the forward process used (position segments).
  Index forward_cells = 0;

  double integral_forward = 0.0;
  double integral_reverse = 0.0;
  /// log of the forward rate of end_event (0 when there is none).
  double log_event_forward = 0.0;
  /// log of the reverse rate of begin_event (0 when there is none).
  double log_event_reverse = 0.0;
  /// Integral of div of the flow actually followed (velocity segments).
  double log_volume = 0.0;
};

struct PathAccounting {
  double log_density_forward = 0.0;
  double log_density_reverse = 0.0;
  /// log |det| of the z0 -> zT map at fixed event times.
  double log_jacobian = 0.0;
  std::size_t bounces = 0;
  std::size_t flips = 0;
};

struct ProposedPath {
  PathSkeleton skeleton;
  std::vector<TraceSegment> trace;
  PathAccounting accounting;
  bool valid = true;
};

/// Simulates an approximate-rate path of length params.window_T from z0 in
/// the given time direction and fills in both forward and reverse densities.
ProposedPath propose_path(const TargetModel& target, const PdmpState& z0,
                          const MetroParams& params, int direction, Rng& rng);

/// R: reverse the skeleton (times mirrored, order reversed, kinds kept).
PathSkeleton reverse_path(const PathSkeleton& skeleton);

/// The reversed path with its densities: forward and reverse swap roles.
ProposedPath reverse_path(const ProposedPath& path);

enum class ProcessRole { Forward, Reverse };

/// log of the path density under the generating process (Forward) or the
/// opposite-time process evaluated on the reversed path (Reverse).
double path_log_density(const ProposedPath& path, ProcessRole role);

/// Recomputes the forward log-density of a path from its trace by replaying
/// the rate cells. Matches the accumulated value; exposed for verification.
double replay_log_density(const TargetModel& target, const ProposedPath& path,
                          const MetroParams& params);

/// log of the Metropolis-Hastings acceptance ratio.
/// For direction = +1, log_psi is log psi(R(w)) and enters with a minus sign;
/// for direction = -1, log_psi is log psi(w^r) and enters with a plus sign.
double acceptance_log_ratio(double fwd_logp, double rev_logp,
                            double mu_log_start, double mu_log_end,
                            double log_psi, int direction);

/// log mu(x, v) = log pi(x) - v^T G v / 2 + log det G / 2 (constant dropped).
double log_joint_density(const LocalGeometry& geom, const Vector& v);

struct MhStepResult {
  PdmpState state;
  bool accepted = false;
  bool invalid_proposal = false;
  std::size_t bounces = 0;
  std::size_t flips = 0;
  double log_ratio = 0.0;
};

/// One window: refresh v ~ Normal(0, G(x)^{-1}), draw a direction, propose
/// and accept or reject. The flow phase is carried over between windows.
MhStepResult mh_step(const TargetModel& target, const PdmpState& state,
                     const MetroParams& params, Rng& rng);

}  // namespace cabps
