#pragma once

#include "boclab/cli/config.hpp"

#include <string>
#include <vector>

namespace boclab::cli {

struct Bars {
  std::string label;
  std::vector<double> lo, hi, height;
  std::string color;
};

struct Curve {
  std::string label;
  std::vector<double> x, y;  // non-finite points are skipped
  std::string color;
};

struct Marker {
  double x = 0.0;
  std::string label;
  std::string color;
};

struct PlotSpec {
  std::string title, x_label, y_label;
  std::vector<Bars> bars;
  std::vector<Curve> curves;
  std::vector<Marker> markers;
  int width = 640;
  int height = 420;
};

// Self-contained SVG. Output bytes depend only on the PlotSpec.
std::string render_svg(const PlotSpec& spec);

// Builds a plot from a render config (CSV paths, column names, markers).
// Throws InputError on an empty CSV or a missing column.
PlotSpec plot_from_config(const Json& config);

}  // namespace boclab::cli
