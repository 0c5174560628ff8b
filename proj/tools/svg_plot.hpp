#pragma once

#include <string>
#include <vector>

namespace ppmm::plot {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Minimal line chart: axes with min/max tick labels, one polyline per
/// series, and a text legend. Intended for quick inspection of result CSVs.
std::string render_line_chart(const std::vector<Series>& series,
                              const std::string& x_label,
                              const std::string& title);

}  // namespace ppmm::plot
