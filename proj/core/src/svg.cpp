#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "xai/svg.hpp"

namespace xai::svg {
namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
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

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void settle() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi == lo) lo -= 0.5, hi += 0.5;
  }
  double scale(double v, double a, double b) const { return a + (v - lo) / (hi - lo) * (b - a); }
};

void open(std::ostream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
      << escape(title) << "</text>\n";
}

void axes(std::ostream& out, const Range& x, const Range& y, const std::string& x_label,
          const std::string& y_label) {
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  out << "<g stroke=\"black\" stroke-width=\"1\">\n"
      << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0
      << "\"/>\n<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\""
      << y1 << "\"/>\n</g>\n<g font-size=\"11\">\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = x.lo + (x.hi - x.lo) * k / 4.0;
    const double fy = y.lo + (y.hi - y.lo) * k / 4.0;
    out << "<text x=\"" << num(x.scale(fx, x0, x1)) << "\" y=\"" << y0 + 16
        << "\" text-anchor=\"middle\">" << tick(fx) << "</text>\n"
        << "<text x=\"" << x0 - 6 << "\" y=\"" << num(y.scale(fy, y0, y1) + 4)
        << "\" text-anchor=\"end\">" << tick(fy) << "</text>\n";
  }
  out << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 10
      << "\" text-anchor=\"middle\">" << escape(x_label) << "</text>\n"
      << "<text x=\"16\" y=\"" << (y0 + y1) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << (y0 + y1) / 2 << ")\">" << escape(y_label) << "</text>\n</g>\n";
}

}  // namespace

void line_plot(std::ostream& out, const std::string& title, const std::vector<Series>& series,
               const std::string& x_label, const std::string& y_label) {
  Range x, y;
  for (const auto& s : series) {
    for (double v : s.x) x.add(v);
    for (double v : s.y) y.add(v);
  }
  x.settle();
  y.settle();
  open(out, title);
  axes(out, x, y, x_label, y_label);
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  const double opacity = series.size() > 10 ? 0.3 : 1.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    out << "<polyline fill=\"none\" stroke=\"" << kPalette[i % 10] << "\" stroke-opacity=\""
        << opacity << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
      out << num(x.scale(s.x[k], x0, x1)) << ',' << num(y.scale(s.y[k], y0, y1)) << ' ';
    }
    out << "\"><title>" << escape(s.label) << "</title></polyline>\n";
  }
  out << "</svg>\n";
}

void bar_chart(std::ostream& out, const std::string& title, const std::vector<Bar>& bars) {
  Range v;
  v.add(0.0);
  for (const auto& b : bars) v.add(b.value);
  v.settle();
  open(out, title);
  const double left = 160.0, right = kWidth - kRight;
  const double top = kTop, bottom = kHeight - 20.0;
  const double slot = bars.empty() ? 0.0 : (bottom - top) / static_cast<double>(bars.size());
  const double zero = v.scale(0.0, left, right);
  out << "<g font-size=\"11\">\n";
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double end = v.scale(bars[i].value, left, right);
    const double y = top + slot * static_cast<double>(i);
    out << "<rect x=\"" << num(std::min(zero, end)) << "\" y=\"" << num(y + slot * 0.1)
        << "\" width=\"" << num(std::abs(end - zero)) << "\" height=\"" << num(slot * 0.8)
        << "\" fill=\"" << (bars[i].value < 0 ? kPalette[3] : kPalette[0]) << "\"/>\n"
        << "<text x=\"" << left - 6 << "\" y=\"" << num(y + slot * 0.5 + 4)
        << "\" text-anchor=\"end\">" << escape(bars[i].label) << "</text>\n";
  }
  out << "<line x1=\"" << num(zero) << "\" y1=\"" << top << "\" x2=\"" << num(zero)
      << "\" y2=\"" << bottom << "\" stroke=\"black\"/>\n</g>\n</svg>\n";
}

void heatmap(std::ostream& out, const std::string& title, const std::vector<double>& x,
             const std::vector<double>& y, const std::vector<std::vector<double>>& values) {
  Range xr, yr;
  for (double v : x) xr.add(v);
  for (double v : y) yr.add(v);
  xr.settle();
  yr.settle();
  double extent = 0.0;
  for (const auto& row : values) {
    for (double v : row) {
      if (std::isfinite(v)) extent = std::max(extent, std::abs(v));
    }
  }
  if (extent == 0.0) extent = 1.0;
  open(out, title);
  axes(out, xr, yr, "", "");
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  auto edge = [](const std::vector<double>& g, std::size_t i, bool upper) {
    if (g.size() < 2) return upper ? g[i] + 0.5 : g[i] - 0.5;
    if (upper) return i + 1 < g.size() ? (g[i] + g[i + 1]) / 2 : g[i];
    return i > 0 ? (g[i - 1] + g[i]) / 2 : g[i];
  };
  for (std::size_t j = 0; j < y.size() && j < values.size(); ++j) {
    for (std::size_t i = 0; i < x.size() && i < values[j].size(); ++i) {
      const double v = values[j][i];
      const double t = std::isfinite(v) ? std::clamp(v / extent, -1.0, 1.0) : 0.0;
      const int r = t < 0 ? static_cast<int>(255 * (1 + t)) : 255;
      const int b = t > 0 ? static_cast<int>(255 * (1 - t)) : 255;
      const int g = static_cast<int>(255 * (1 - std::abs(t)));
      const double ax = xr.scale(edge(x, i, false), x0, x1);
      const double bx = xr.scale(edge(x, i, true), x0, x1);
      const double ay = yr.scale(edge(y, j, true), y0, y1);
      const double by = yr.scale(edge(y, j, false), y0, y1);
      out << "<rect x=\"" << num(ax) << "\" y=\"" << num(ay) << "\" width=\""
          << num(std::max(0.0, bx - ax)) << "\" height=\"" << num(std::max(0.0, by - ay))
          << "\" fill=\"rgb(" << r << ',' << g << ',' << b << ")\"/>\n";
    }
  }
  out << "</svg>\n";
}

}  // namespace xai::svg
