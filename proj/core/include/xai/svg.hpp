#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace xai::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct Bar {
  std::string label;
  double value = 0.0;
};

// Standalone SVG documents; no fonts or scripts beyond basic <text>.
void line_plot(std::ostream& out, const std::string& title,
               const std::vector<Series>& series, const std::string& x_label,
               const std::string& y_label);
void bar_chart(std::ostream& out, const std::string& title,
               const std::vector<Bar>& bars);
// values[j][i] over x[i], y[j]; diverging colour scale centred on zero.
void heatmap(std::ostream& out, const std::string& title,
             const std::vector<double>& x, const std::vector<double>& y,
             const std::vector<std::vector<double>>& values);

}  // namespace xai::svg
