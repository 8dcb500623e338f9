#pragma once

#include "cabps/experiment.hpp"
#include "cabps/target_models.hpp"

#include <array>
#include <ostream>
#include <string>
#include <vector>

namespace cabps::plot {

/// Level curve v'Gv = 1 of Normal(0, G^{-1}) at x.
struct MetricEllipse {
  Vector center;
  double major = 0.0;  // semi-axis lengths
  double minor = 0.0;
  double angle = 0.0;  // radians, major axis from the x1 axis, in (-pi/2, pi/2]
};

MetricEllipse metric_ellipse(const TargetModel& target, const Vector& x,
                             double hardness);

struct Region {
  double x_min = -3, x_max = 4, y_min = -2, y_max = 10;
};

/// Writes metric.svg, metric_contours.dat and metric_ellipses.dat into
/// out_dir. Returns the ellipses drawn.
std::vector<MetricEllipse> plot_metric(const TargetModel& target,
                                       const Region& region, int grid,
                                       double hardness, const std::string& out_dir);

/// r(eps) efficiency curves per beta for each target and, when several
/// Gaussian gaps are present, efficiency at eps = 0 against the gap.
/// Returns the files written.
std::vector<std::string> plot_results(const std::vector<RatioRow>& rows,
                                      const std::string& out_dir,
                                      std::ostream& warn);

}  // namespace cabps::plot
