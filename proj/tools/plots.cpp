#include "plots.hpp"

#include "svg.hpp"

#include "cabps/softabs_metric.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>

namespace cabps::plot {

namespace {

struct Segment {
  double x1, y1, x2, y2;
};

// Marching squares on a regular grid of values f[i][j] at (xs[i], ys[j]).
std::vector<Segment> contour(const std::vector<double>& xs,
                             const std::vector<double>& ys,
                             const std::vector<std::vector<double>>& f,
                             double level) {
  std::vector<Segment> out;
  auto lerp = [level](double a, double b, double fa, double fb) {
    return a + (level - fa) / (fb - fa) * (b - a);
  };
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
      const double f00 = f[i][j], f10 = f[i + 1][j], f11 = f[i + 1][j + 1],
                   f01 = f[i][j + 1];
      std::vector<std::pair<double, double>> pts;
      auto edge = [&](double xa, double ya, double fa, double xb, double yb, double fb) {
        if ((fa < level) != (fb < level))
          pts.emplace_back(lerp(xa, xb, fa, fb), lerp(ya, yb, fa, fb));
      };
      const double x0 = xs[i], x1 = xs[i + 1], y0 = ys[j], y1 = ys[j + 1];
      edge(x0, y0, f00, x1, y0, f10);
      edge(x1, y0, f10, x1, y1, f11);
      edge(x1, y1, f11, x0, y1, f01);
      edge(x0, y1, f01, x0, y0, f00);
      for (std::size_t k = 0; k + 1 < pts.size(); k += 2)
        out.push_back({pts[k].first, pts[k].second, pts[k + 1].first, pts[k + 1].second});
    }
  }
  return out;
}

std::string slug(const std::string& s) {
  std::string out;
  for (char c : s) out += std::isalnum(static_cast<unsigned char>(c)) || c == '.' ? c : '_';
  return out;
}

}  // namespace

MetricEllipse metric_ellipse(const TargetModel& target, const Vector& x,
                             double hardness) {
  require(target.dim() == 2, "plot-metric: target must be 2-dimensional");
  const MetricState m = build_metric(target.hessian(x), hardness);
  // The smallest metric eigenvalue gives the longest axis of {v : v'Gv = 1}.
  const Index lo = m.softened[0] <= m.softened[1] ? 0 : 1;
  MetricEllipse e;
  e.center = x;
  e.major = 1.0 / std::sqrt(m.softened[lo]);
  e.minor = 1.0 / std::sqrt(m.softened[1 - lo]);
  const Vector dir = m.eigenvectors.col(lo);
  e.angle = std::atan2(dir[1], dir[0]);
  if (e.angle > std::numbers::pi / 2) e.angle -= std::numbers::pi;
  if (e.angle <= -std::numbers::pi / 2) e.angle += std::numbers::pi;
  return e;
}

std::vector<MetricEllipse> plot_metric(const TargetModel& target,
                                       const Region& region, int grid,
                                       double hardness, const std::string& out_dir) {
  require(target.dim() == 2, "plot-metric: target must be 2-dimensional");
  require(grid >= 1, "plot-metric: grid must be positive");
  require(region.x_min < region.x_max && region.y_min < region.y_max,
          "plot-metric: empty region");
  std::filesystem::create_directories(out_dir);

  const double W = 600, H = 600, pad = 40;
  const Axis ax{region.x_min, region.x_max, false, pad, W - pad};
  const Axis ay{region.y_min, region.y_max, false, H - pad, pad};
  Svg svg(W, H);
  svg.rect(pad, pad, W - 2 * pad, H - 2 * pad, "black");
  svg.text(W / 2, 24, "metric ellipses over density contours: " + target.name(), 14, "middle");

  // Density contours.
  const int n = 160;
  std::vector<double> xs(n), ys(n);
  for (int i = 0; i < n; ++i) {
    xs[i] = region.x_min + (region.x_max - region.x_min) * i / (n - 1.0);
    ys[i] = region.y_min + (region.y_max - region.y_min) * i / (n - 1.0);
  }
  std::vector<std::vector<double>> f(n, std::vector<double>(n));
  double top = -INFINITY;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Vector p(2);
      p << xs[i], ys[j];
      f[i][j] = target.log_density(p);
      top = std::max(top, f[i][j]);
    }
  std::ofstream cdat(out_dir + "/metric_contours.dat");
  cdat << "# level x1 y1 x2 y2 (blank line between segments)\n";
  for (double drop : {0.5, 2.0, 4.5, 8.0, 12.5}) {
    const double level = top - drop;
    for (const auto& s : contour(xs, ys, f, level)) {
      svg.line(ax.map(s.x1), ay.map(s.y1), ax.map(s.x2), ay.map(s.y2), "#999999", 1.0);
      cdat << level << ' ' << s.x1 << ' ' << s.y1 << '\n'
           << level << ' ' << s.x2 << ' ' << s.y2 << "\n\n";
    }
  }

  // Ellipses at grid points, one common scale so sizes are comparable.
  std::vector<MetricEllipse> ellipses;
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j) {
      Vector p(2);
      p << region.x_min + (region.x_max - region.x_min) * (i + 0.5) / grid,
          region.y_min + (region.y_max - region.y_min) * (j + 0.5) / grid;
      ellipses.push_back(metric_ellipse(target, p, hardness));
    }
  double longest = 0.0;
  for (const auto& e : ellipses) longest = std::max(longest, e.major);
  const double cell_px = std::min(W - 2 * pad, H - 2 * pad) / grid;
  const double scale = longest > 0 ? 0.45 * cell_px / longest : 1.0;
  std::ofstream edat(out_dir + "/metric_ellipses.dat");
  edat << "# x y major minor angle_rad\n";
  for (const auto& e : ellipses) {
    // Ellipses are drawn in velocity units around each grid point; the data
    // angle is converted to screen space (y axis points down).
    const double a = -e.angle * 180.0 / std::numbers::pi;
    svg.ellipse(ax.map(e.center[0]), ay.map(e.center[1]), std::max(0.5, e.major * scale),
                std::max(0.5, e.minor * scale), a, "#1f77b4");
    edat << e.center[0] << ' ' << e.center[1] << ' ' << e.major << ' ' << e.minor << ' '
         << e.angle << '\n';
  }
  svg.save(out_dir + "/metric.svg");
  return ellipses;
}

std::vector<std::string> plot_results(const std::vector<RatioRow>& rows,
                                      const std::string& out_dir,
                                      std::ostream& warn) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> written;
  if (rows.empty()) {
    warn << "warning: no efficiency-ratio rows (empty beta grid or missing bps/ca_bps pair); "
            "no ratio plot written\n";
    return written;
  }

  std::vector<std::string> targets;
  for (const auto& r : rows)
    if (std::find(targets.begin(), targets.end(), r.target) == targets.end())
      targets.push_back(r.target);

  for (const auto& t : targets) {
    std::map<double, Series> by_beta;
    for (const auto& r : rows) {
      if (r.target != t || r.pairing != "matched") continue;
      auto& s = by_beta[r.beta];
      char buf[48];
      std::snprintf(buf, sizeof buf, "beta = %g", r.beta);
      s.label = buf;
      // eps = 0 sits at the left edge of a log axis: draw it at the smallest
      // positive eps / 10.
      s.points.emplace_back(r.epsilon, r.efficiency);
    }
    double min_pos = INFINITY;
    for (const auto& [b, s] : by_beta)
      for (const auto& p : s.points)
        if (p.first > 0) min_pos = std::min(min_pos, p.first);
    std::vector<Series> series;
    const std::string base = out_dir + "/ratio_" + slug(t);
    std::ofstream dat(base + ".dat");
    dat << "# beta epsilon efficiency (matched pairing; efficiency = 1/r, >1 favours CA-BPS)\n";
    for (auto& [b, s] : by_beta) {
      for (auto& p : s.points) {
        dat << b << ' ' << p.first << ' ' << p.second << '\n';
        if (p.first == 0.0) p.first = std::isfinite(min_pos) ? min_pos / 10 : 1e-9;
      }
      dat << "\n\n";
      series.push_back(s);
    }
    line_chart(base + ".svg", "Efficiency of CA-BPS relative to BPS: " + t,
               "per-event cost epsilon (s)", "1/r", series, true, true, 1.0);
    written.push_back(base + ".svg");
  }

  std::set<double> gaps;
  for (const auto& r : rows)
    if (r.gap > 0) gaps.insert(r.gap);
  if (gaps.size() > 1) {
    std::map<double, Series> by_beta;
    for (const auto& r : rows) {
      if (r.gap <= 0 || r.pairing != "matched" || r.epsilon != 0.0) continue;
      auto& s = by_beta[r.beta];
      char buf[48];
      std::snprintf(buf, sizeof buf, "beta = %g", r.beta);
      s.label = buf;
      s.points.emplace_back(r.gap, r.efficiency);
    }
    std::vector<Series> series;
    std::ofstream dat(out_dir + "/efficiency_vs_delta.dat");
    dat << "# beta delta efficiency_at_eps0\n";
    for (auto& [b, s] : by_beta) {
      std::sort(s.points.begin(), s.points.end());
      for (const auto& p : s.points) dat << b << ' ' << p.first << ' ' << p.second << '\n';
      dat << "\n\n";
      series.push_back(s);
    }
    line_chart(out_dir + "/efficiency_vs_delta.svg",
               "Efficiency of CA-BPS relative to BPS (eps = 0)", "spectral gap delta",
               "1/r(0)", series, true, true, 1.0);
    written.push_back(out_dir + "/efficiency_vs_delta.svg");
  }
  return written;
}

}  // namespace cabps::plot
