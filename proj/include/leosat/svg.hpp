#pragma once

#include <string>
#include <vector>

namespace leosat {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> spread;  // optional symmetric band, same length as y
};

struct PlotMarker {
  double x = 0;
  std::string label;
  bool dashed = false;
};

struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  std::vector<PlotMarker> markers;  // vertical lines
};

std::string render_svg(const LinePlot& plot);
void write_svg(const LinePlot& plot, const std::string& path);

}  // namespace leosat
