#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "fdw/errors.hpp"
#include "fdw/io.hpp"

namespace fdw {

namespace {

constexpr double kWidth = 720, kHeight = 480;
constexpr double kLeft = 80, kRight = 170, kTop = 40, kBottom = 60;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Axis {
  bool log = false;
  double lo = 0.0, hi = 1.0;  // in transformed units
  double pixel_lo = 0.0, pixel_hi = 1.0;

  double transform(double v) const { return log ? std::log10(v) : v; }
  double pixel(double v) const { return pixel_lo + (transform(v) - lo) / (hi - lo) * (pixel_hi - pixel_lo); }

  std::vector<double> ticks() const {
    std::vector<double> out;
    if (log) {
      const int step = std::max(1, static_cast<int>(std::ceil((hi - lo) / 8.0)));
      for (int e = static_cast<int>(std::ceil(lo - 1e-9)); e <= hi + 1e-9; e += step) out.push_back(std::pow(10.0, e));
      return out;
    }
    const double raw = (hi - lo) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double unit = raw / mag < 1.5 ? mag : raw / mag < 3.5 ? 2 * mag : raw / mag < 7.5 ? 5 * mag : 10 * mag;
    for (double t = std::ceil(lo / unit - 1e-9) * unit; t <= hi + 1e-9 * unit; t += unit)
      out.push_back(std::abs(t) < 1e-12 * unit ? 0.0 : t);
    return out;
  }
};

Axis make_axis(bool log, double lo, double hi, double pixel_lo, double pixel_hi) {
  Axis a{log, lo, hi, pixel_lo, pixel_hi};
  if (log) {
    a.lo = std::log10(lo);
    a.hi = std::log10(hi);
  }
  if (a.hi - a.lo < 1e-300) {
    const double pad = a.lo == 0.0 ? 1.0 : 0.05 * std::abs(a.lo);
    a.lo -= pad;
    a.hi += pad;
  } else if (!log) {
    const double pad = 0.04 * (a.hi - a.lo);
    a.lo -= pad;
    a.hi += pad;
  }
  return a;
}

std::string header(const std::string& title) {
  std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
       "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text class=\"title\" x=\"" + num(kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
       escape(title) + "</text>\n";
  return s;
}

}  // namespace

std::string render_svg(const Plot& plot) {
  if (plot.series.empty()) throw UsageError("plot needs at least one series");
  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo, y_lo = x_lo, y_hi = -x_lo;
  for (const auto& s : plot.series) {
    if (s.x.empty()) throw UsageError("series '" + s.name + "' is empty");
    if (s.x.size() != s.y.size()) throw UsageError("series '" + s.name + "' has mismatched x and y");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) throw DomainError("series '" + s.name + "' is not finite");
      if ((plot.log_x && s.x[i] <= 0.0) || (plot.log_y && s.y[i] <= 0.0))
        throw DomainError("series '" + s.name + "' has nonpositive values on a log axis");
      x_lo = std::min(x_lo, s.x[i]);
      x_hi = std::max(x_hi, s.x[i]);
      y_lo = std::min(y_lo, s.y[i]);
      y_hi = std::max(y_hi, s.y[i]);
    }
  }
  const Axis ax = make_axis(plot.log_x, x_lo, x_hi, kLeft, kWidth - kRight);
  const Axis ay = make_axis(plot.log_y, y_lo, y_hi, kHeight - kBottom, kTop);

  std::string s = header(plot.title);
  const std::string x0 = num(kLeft), x1 = num(kWidth - kRight), y0 = num(kHeight - kBottom), y1 = num(kTop);
  s += "<g class=\"axes\" stroke=\"black\" fill=\"none\">\n";
  s += "<rect x=\"" + x0 + "\" y=\"" + y1 + "\" width=\"" + num(kWidth - kRight - kLeft) + "\" height=\"" +
       num(kHeight - kBottom - kTop) + "\"/>\n</g>\n";
  s += "<g class=\"ticks\">\n";
  for (double t : ax.ticks()) {
    const std::string px = num(ax.pixel(t));
    s += "<line x1=\"" + px + "\" y1=\"" + y0 + "\" x2=\"" + px + "\" y2=\"" + num(kHeight - kBottom + 5) +
         "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + px + "\" y=\"" + num(kHeight - kBottom + 18) + "\" text-anchor=\"middle\">" + label(t) +
         "</text>\n";
  }
  for (double t : ay.ticks()) {
    const std::string py = num(ay.pixel(t));
    s += "<line x1=\"" + num(kLeft - 5) + "\" y1=\"" + py + "\" x2=\"" + x0 + "\" y2=\"" + py +
         "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + num(kLeft - 8) + "\" y=\"" + num(ay.pixel(t) + 4) + "\" text-anchor=\"end\">" + label(t) +
         "</text>\n";
  }
  s += "</g>\n";
  s += "<text class=\"x-label\" x=\"" + num((kLeft + kWidth - kRight) / 2) + "\" y=\"" + num(kHeight - 18) +
       "\" text-anchor=\"middle\">" + escape(plot.x_label) + (plot.log_x ? " (log)" : "") + "</text>\n";
  s += "<text class=\"y-label\" transform=\"translate(18," + num((kTop + kHeight - kBottom) / 2) +
       ") rotate(-90)\" text-anchor=\"middle\">" + escape(plot.y_label) + (plot.log_y ? " (log)" : "") + "</text>\n";

  for (std::size_t k = 0; k < plot.series.size(); ++k) {
    const auto& ser = plot.series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    s += "<polyline class=\"series\" fill=\"none\" stroke-width=\"1.5\" stroke=\"" + std::string(color) +
         "\" points=\"";
    for (std::size_t i = 0; i < ser.x.size(); ++i)
      s += (i ? " " : "") + num(ax.pixel(ser.x[i])) + "," + num(ay.pixel(ser.y[i]));
    s += "\"><title>" + escape(ser.name) + "</title></polyline>\n";
  }
  if (plot.series.size() >= 2) {
    s += "<g class=\"legend\">\n";
    for (std::size_t k = 0; k < plot.series.size(); ++k) {
      const double y = kTop + 14 + 20.0 * static_cast<double>(k);
      s += "<line x1=\"" + num(kWidth - kRight + 12) + "\" y1=\"" + num(y) + "\" x2=\"" +
           num(kWidth - kRight + 36) + "\" y2=\"" + num(y) + "\" stroke-width=\"2\" stroke=\"" +
           kPalette[k % std::size(kPalette)] + "\"/>\n";
      s += "<text class=\"legend-entry\" x=\"" + num(kWidth - kRight + 42) + "\" y=\"" + num(y + 4) + "\">" +
           escape(plot.series[k].name) + "</text>\n";
    }
    s += "</g>\n";
  }
  s += "</svg>\n";
  return s;
}

std::string render_svg(const TriangleHeatmap& map) {
  const auto m = static_cast<std::size_t>(map.mesh);
  if (map.mesh < 1 || map.values.size() != (m + 1) * (m + 2) / 2)
    throw UsageError("heatmap needs (mesh+1)(mesh+2)/2 values");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : map.values) {
    if (!std::isfinite(v)) throw DomainError("heatmap values must be finite");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double scale = std::max(std::abs(lo), std::abs(hi));
  // blue for negative, red for positive, white at zero
  auto color = [&](double v) {
    const double s = scale > 0.0 ? v / scale : 0.0;
    const int fade = static_cast<int>(std::lround(255.0 * (1.0 - std::abs(s))));
    char buf[8];
    if (s >= 0.0)
      std::snprintf(buf, sizeof buf, "#ff%02x%02x", fade, fade);
    else
      std::snprintf(buf, sizeof buf, "#%02x%02xff", fade, fade);
    return std::string(buf);
  };

  const double side = std::min(kWidth - kLeft - kRight, kHeight - kTop - kBottom);
  const double cell = side / static_cast<double>(m + 1);
  const double bottom = kTop + side;
  std::string s = header(map.title);
  // x runs to the right, y upwards; cell (i, k) is x_i, y_k
  s += "<g class=\"cells\" shape-rendering=\"crispEdges\">\n";
  std::size_t idx = 0;
  for (std::size_t i = 0; i <= m; ++i)
    for (std::size_t k = 0; k <= i; ++k, ++idx)
      s += "<rect x=\"" + num(kLeft + cell * static_cast<double>(i)) + "\" y=\"" +
           num(bottom - cell * static_cast<double>(k + 1)) + "\" width=\"" + num(cell) + "\" height=\"" + num(cell) +
           "\" fill=\"" + color(map.values[idx]) + "\"/>\n";
  s += "</g>\n";
  // staircase above the diagonal, y > x
  s += "<path class=\"mask\" fill=\"#d9d9d9\" d=\"M" + num(kLeft) + "," + num(bottom - cell);
  for (std::size_t i = 0; i <= m; ++i) {
    const double x = kLeft + cell * static_cast<double>(i + 1);
    s += " L" + num(x - cell) + "," + num(bottom - cell * static_cast<double>(i + 1)) + " L" + num(x) + "," +
         num(bottom - cell * static_cast<double>(i + 1));
  }
  s += " L" + num(kLeft) + "," + num(kTop) + " Z\"/>\n";
  s += "<rect class=\"frame\" x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(side) +
       "\" height=\"" + num(side) + "\" fill=\"none\" stroke=\"black\"/>\n";
  s += "<text class=\"x-label\" x=\"" + num(kLeft + side / 2) + "\" y=\"" + num(bottom + 24) +
       "\" text-anchor=\"middle\">x</text>\n";
  s += "<text class=\"y-label\" x=\"" + num(kLeft - 14) + "\" y=\"" + num(kTop + side / 2) +
       "\" text-anchor=\"middle\">y</text>\n";
  s += "<g class=\"colorbar\">\n";
  for (int b = 0; b < 20; ++b) {
    const double v = scale * (1.0 - 2.0 * b / 19.0);
    s += "<rect x=\"" + num(kLeft + side + 30) + "\" y=\"" + num(kTop + b * side / 20) + "\" width=\"16\" height=\"" +
         num(side / 20 + 0.5) + "\" fill=\"" + color(v) + "\"/>\n";
  }
  s += "<text x=\"" + num(kLeft + side + 52) + "\" y=\"" + num(kTop + 10) + "\">" + label(scale) + "</text>\n";
  s += "<text x=\"" + num(kLeft + side + 52) + "\" y=\"" + num(kTop + side) + "\">" + label(-scale) + "</text>\n";
  s += "</g>\n</svg>\n";
  return s;
}

}  // namespace fdw
