#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace cabps::plot {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

}  // namespace

Svg::Svg(double width, double height) : width_(width), height_(height) {}

void Svg::line(double x1, double y1, double x2, double y2,
               const std::string& stroke, double width, const std::string& dash) {
  body_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) +
           "\" y2=\"" + num(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" +
           num(width) + "\"" +
           (dash.empty() ? "" : " stroke-dasharray=\"" + dash + "\"") + "/>\n";
}

void Svg::polyline(const std::vector<std::pair<double, double>>& pts,
                   const std::string& stroke, double width) {
  if (pts.empty()) return;
  body_ += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" +
           num(width) + "\" points=\"";
  for (const auto& [x, y] : pts) body_ += num(x) + "," + num(y) + " ";
  body_ += "\"/>\n";
}

void Svg::ellipse(double cx, double cy, double rx, double ry, double angle_deg,
                  const std::string& stroke) {
  body_ += "<ellipse cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" rx=\"" +
           num(rx) + "\" ry=\"" + num(ry) + "\" transform=\"rotate(" +
           num(angle_deg) + " " + num(cx) + " " + num(cy) +
           ")\" fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"1\"/>\n";
}

void Svg::rect(double x, double y, double w, double h, const std::string& stroke) {
  body_ += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) +
           "\" height=\"" + num(h) + "\" fill=\"none\" stroke=\"" + stroke + "\"/>\n";
}

void Svg::text(double x, double y, const std::string& s, double size,
               const std::string& anchor) {
  body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" +
           num(size) + "\" font-family=\"sans-serif\" text-anchor=\"" + anchor +
           "\">" + escape(s) + "</text>\n";
}

std::string Svg::str() const {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width_) +
         "\" height=\"" + num(height_) + "\" viewBox=\"0 0 " + num(width_) + " " +
         num(height_) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" +
         body_ + "</svg>\n";
}

void Svg::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << str();
}

double Axis::map(double v) const {
  const double a = log ? std::log10(lo) : lo;
  const double b = log ? std::log10(hi) : hi;
  const double t = ((log ? std::log10(v) : v) - a) / (b - a);
  return px_lo + t * (px_hi - px_lo);
}

void line_chart(const std::string& path, const std::string& title,
                const std::string& xlabel, const std::string& ylabel,
                const std::vector<Series>& series, bool log_x, bool log_y,
                double reference_y) {
  const double W = 640, H = 440, L = 70, R = 150, T = 40, B = 50;
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
  double ylo = xlo, yhi = -xlo;
  auto usable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!log_x || x > 0) && (!log_y || y > 0);
  };
  for (const auto& s : series)
    for (const auto& [x, y] : s.points)
      if (usable(x, y)) {
        xlo = std::min(xlo, x), xhi = std::max(xhi, x);
        ylo = std::min(ylo, y), yhi = std::max(yhi, y);
      }
  if (std::isfinite(reference_y)) ylo = std::min(ylo, reference_y), yhi = std::max(yhi, reference_y);
  if (!std::isfinite(xlo)) xlo = log_x ? 1e-3 : 0.0, xhi = log_x ? 1.0 : 1.0;
  if (!std::isfinite(ylo)) ylo = log_y ? 0.1 : 0.0, yhi = log_y ? 10.0 : 1.0;
  if (xlo == xhi) xlo = log_x ? xlo / 2 : xlo - 1, xhi = log_x ? xhi * 2 : xhi + 1;
  if (ylo == yhi) ylo = log_y ? ylo / 2 : ylo - 1, yhi = log_y ? yhi * 2 : yhi + 1;
  if (log_y) ylo /= 1.2, yhi *= 1.2;

  const Axis ax{xlo, xhi, log_x, L, W - R};
  const Axis ay{ylo, yhi, log_y, H - B, T};
  Svg svg(W, H);
  svg.rect(L, T, W - R - L, H - B - T, "black");
  svg.text(W / 2 - R / 2 + L / 2, 24, title, 14, "middle");
  svg.text((L + W - R) / 2, H - 12, xlabel, 12, "middle");
  svg.text(16, (T + H - B) / 2, ylabel, 12, "middle");
  for (int i = 0; i <= 4; ++i) {
    const double fx = i / 4.0;
    const double xv = log_x ? std::pow(10.0, std::log10(xlo) + fx * (std::log10(xhi) - std::log10(xlo)))
                            : xlo + fx * (xhi - xlo);
    const double yv = log_y ? std::pow(10.0, std::log10(ylo) + fx * (std::log10(yhi) - std::log10(ylo)))
                            : ylo + fx * (yhi - ylo);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", xv);
    svg.text(ax.map(xv), H - B + 16, buf, 10, "middle");
    std::snprintf(buf, sizeof buf, "%.3g", yv);
    svg.text(L - 6, ay.map(yv) + 4, buf, 10, "end");
  }
  if (std::isfinite(reference_y))
    svg.line(L, ay.map(reference_y), W - R, ay.map(reference_y), "#444444", 1.0, "6,4");
  for (std::size_t i = 0; i < series.size(); ++i) {
    const std::string color = kPalette[i % std::size(kPalette)];
    std::vector<std::pair<double, double>> pts;
    for (const auto& [x, y] : series[i].points)
      if (usable(x, y)) pts.emplace_back(ax.map(x), ay.map(y));
    svg.polyline(pts, color);
    const double ly = T + 16 + 18 * static_cast<double>(i);
    svg.line(W - R + 10, ly - 4, W - R + 30, ly - 4, color, 2.0);
    svg.text(W - R + 36, ly, series[i].label, 11);
  }
  svg.save(path);
}

}  // namespace cabps::plot
