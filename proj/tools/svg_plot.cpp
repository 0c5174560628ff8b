#include "svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace ppmm::plot {

namespace {

const char* kPalette[] = {"#c0392b", "#2980b9", "#27ae60",
                          "#8e44ad", "#d68910", "#16a085"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

std::string render_line_chart(const std::vector<Series>& series,
                              const std::string& x_label,
                              const std::string& title) {
  if (series.empty()) throw std::invalid_argument("no series to plot");

  const double width = 760, height = 460;
  const double left = 70, right = 180, top = 40, bottom = 50;
  const double pw = width - left - right;
  const double ph = height - top - bottom;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size() || s.x.empty())
      throw std::invalid_argument("series '" + s.label + "' is empty or ragged");
    for (size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) ymax = ymin + 1.0;
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) +
         "\" height=\"" + fmt(height) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + fmt(left) + "\" y=\"24\" font-family=\"sans-serif\" "
         "font-size=\"15\">" + title + "</text>\n";

  // axes
  out += "<line x1=\"" + fmt(left) + "\" y1=\"" + fmt(top) + "\" x2=\"" +
         fmt(left) + "\" y2=\"" + fmt(top + ph) + "\" stroke=\"black\"/>\n";
  out += "<line x1=\"" + fmt(left) + "\" y1=\"" + fmt(top + ph) + "\" x2=\"" +
         fmt(left + pw) + "\" y2=\"" + fmt(top + ph) + "\" stroke=\"black\"/>\n";
  out += "<text x=\"" + fmt(left - 8) + "\" y=\"" + fmt(top + ph) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
         fmt(ymin + ypad) + "</text>\n";
  out += "<text x=\"" + fmt(left - 8) + "\" y=\"" + fmt(top + 10) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
         fmt(ymax - ypad) + "</text>\n";
  out += "<text x=\"" + fmt(left) + "\" y=\"" + fmt(height - 14) +
         "\" font-family=\"sans-serif\" font-size=\"11\">" + fmt(xmin) +
         "</text>\n";
  out += "<text x=\"" + fmt(left + pw) + "\" y=\"" + fmt(height - 14) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
         fmt(xmax) + "</text>\n";
  out += "<text x=\"" + fmt(left + pw / 2) + "\" y=\"" + fmt(height - 14) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
         x_label + "</text>\n";

  for (size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % 6];
    std::string pts;
    for (size_t i = 0; i < s.x.size(); ++i)
      pts += fmt(px(s.x[i])) + "," + fmt(py(s.y[i])) + " ";
    out += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    const double ly = top + 16.0 * double(k);
    out += "<line x1=\"" + fmt(left + pw + 12) + "\" y1=\"" + fmt(ly) +
           "\" x2=\"" + fmt(left + pw + 34) + "\" y2=\"" + fmt(ly) +
           "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + fmt(left + pw + 40) + "\" y=\"" + fmt(ly + 4) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + s.label +
           "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace ppmm::plot
