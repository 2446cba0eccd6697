#pragma once

#include <string>
#include <vector>

// Minimal SVG charts for the report command.
namespace svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Line chart with markers, axis ticks and a legend.
std::string line_chart(const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<Series>& series);

struct Bar {
  double start = 0.0;  // normalized video time
  double end = 0.0;
  double score = 0.0;  // opacity in [0, 1]
};

struct Lane {
  std::string label;
  std::vector<Bar> bars;
};

/// One horizontal lane per row on a shared [0, 1] time axis; the first lane
/// is drawn as ground truth.
std::string span_lanes(const std::string& title, const std::vector<Lane>& lanes);

void write(const std::string& path, const std::string& content);

}  // namespace svg
