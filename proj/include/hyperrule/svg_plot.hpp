#pragma once

#include <string>
#include <vector>

namespace hyperrule {

struct PlotPoint {
  double x = 0.0;
  double y = 0.0;
  bool anomalous = false;
};

struct PlotRect {
  double x_lo = 0.0, x_hi = 0.0;
  double y_lo = 0.0, y_hi = 0.0;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotPoint> points;
  std::vector<PlotRect> rects;
};

// Standalone SVG document. Rectangles with zero width or height are drawn as
// a cross marker; each rectangle carries class="rule".
std::string render_svg(const PlotSpec& spec);

}  // namespace hyperrule
