#pragma once

#include <string>
#include <utility>
#include <vector>

namespace cabps::plot {

/// Minimal SVG canvas in pixel coordinates.
class Svg {
 public:
  Svg(double width, double height);

  void line(double x1, double y1, double x2, double y2,
            const std::string& stroke, double width = 1.0,
            const std::string& dash = "");
  void polyline(const std::vector<std::pair<double, double>>& pts,
                const std::string& stroke, double width = 1.5);
  void ellipse(double cx, double cy, double rx, double ry, double angle_deg,
               const std::string& stroke);
  void rect(double x, double y, double w, double h, const std::string& stroke);
  void text(double x, double y, const std::string& s, double size = 12.0,
            const std::string& anchor = "start");

  std::string str() const;
  void save(const std::string& path) const;

 private:
  double width_, height_;
  std::string body_;
};

/// Maps data coordinates to a plotting rectangle, optionally in log10.
struct Axis {
  double lo = 0.0, hi = 1.0;
  bool log = false;
  double px_lo = 0.0, px_hi = 1.0;
  double map(double v) const;
};

/// Axis-box line chart with a legend and optional horizontal reference.
struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

void line_chart(const std::string& path, const std::string& title,
                const std::string& xlabel, const std::string& ylabel,
                const std::vector<Series>& series, bool log_x, bool log_y,
                double reference_y);

}  // namespace cabps::plot
