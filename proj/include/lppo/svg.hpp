#pragma once

#include <string>
#include <vector>

namespace lppo::svg {

struct Series {
  std::string label;
  std::vector<double> x, y;
  std::string color = "#1f77b4";
  bool dashed = false;
};

struct Panel {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
};

/// Standalone SVG with stacked panels: axes, tick labels, legend,
/// polyline per series.
std::string render_chart(const std::vector<Panel>& panels, int width = 900,
                         int panel_height = 300);

void write_chart(const std::string& path, const std::vector<Panel>& panels, int width = 900,
                 int panel_height = 300);

}  // namespace lppo::svg
