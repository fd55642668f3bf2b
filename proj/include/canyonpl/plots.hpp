#pragma once

// Static SVG figures for evaluation reports. Output depends only on the
// inputs, so rerunning a report reproduces the files byte for byte.

#include <span>
#include <string>
#include <vector>

#include "canyonpl/evaluation.hpp"

namespace canyonpl {

struct BoxSeries {
  std::string label;
  std::vector<double> values;
};

// Quartiles use linear interpolation; whiskers span min and max.
std::string render_box_plot(std::span<const BoxSeries> series, const std::string& title, const std::string& y_label);

struct ScatterPoint {
  double measured = 0.0;
  double predicted = 0.0;
};

// Measured vs predicted path loss, with the y = x reference line.
std::string render_scatter(std::span<const ScatterPoint> points, const std::string& title);

// Mean weight per feature with a min-max range bar.
std::string render_weight_bars(std::span<const FeatureWeight> weights, const std::string& title);

}  // namespace canyonpl
