#include "hyperrule/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace hyperrule {

namespace {

constexpr double kWidth = 640, kHeight = 480;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 60;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
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

struct Axis {
  double lo, hi, px_lo, px_hi;
  double map(double v) const { return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo); }
};

Axis make_axis(double lo, double hi, double px_lo, double px_hi) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad, px_lo, px_hi};
}

}  // namespace

std::string render_svg(const PlotSpec& spec) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  auto extend = [&](double x, double y) {
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  };
  for (const auto& p : spec.points) extend(p.x, p.y);
  for (const auto& r : spec.rects) {
    extend(r.x_lo, r.y_lo);
    extend(r.x_hi, r.y_hi);
  }
  if (!std::isfinite(xmin)) xmin = ymin = 0.0, xmax = ymax = 1.0;

  const Axis ax = make_axis(xmin, xmax, kLeft, kWidth - kRight);
  const Axis ay = make_axis(ymin, ymax, kHeight - kBottom, kTop);

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) + "\" height=\"" +
       fmt(kHeight) + "\" viewBox=\"0 0 " + fmt(kWidth) + " " + fmt(kHeight) + "\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + fmt(kWidth) + "\" height=\"" + fmt(kHeight) +
       "\" fill=\"white\"/>\n";
  s += "<text x=\"" + fmt(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"15\">" + escape(spec.title) + "</text>\n";

  // axes and ticks
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  s += "<g stroke=\"black\" stroke-width=\"1\">\n";
  s += "<line x1=\"" + fmt(x0) + "\" y1=\"" + fmt(y0) + "\" x2=\"" + fmt(x1) + "\" y2=\"" + fmt(y0) + "\"/>\n";
  s += "<line x1=\"" + fmt(x0) + "\" y1=\"" + fmt(y0) + "\" x2=\"" + fmt(x0) + "\" y2=\"" + fmt(y1) + "\"/>\n";
  s += "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i <= 5; ++i) {
    const double vx = ax.lo + (ax.hi - ax.lo) * i / 5.0;
    const double vy = ay.lo + (ay.hi - ay.lo) * i / 5.0;
    s += "<text x=\"" + fmt(ax.map(vx)) + "\" y=\"" + fmt(y0 + 16) + "\" text-anchor=\"middle\">" +
         tick(vx) + "</text>\n";
    s += "<text x=\"" + fmt(x0 - 6) + "\" y=\"" + fmt(ay.map(vy) + 4) + "\" text-anchor=\"end\">" +
         tick(vy) + "</text>\n";
  }
  s += "<text x=\"" + fmt((x0 + x1) / 2) + "\" y=\"" + fmt(kHeight - 18) +
       "\" text-anchor=\"middle\" font-size=\"13\">" + escape(spec.x_label) + "</text>\n";
  s += "<text x=\"18\" y=\"" + fmt((y0 + y1) / 2) + "\" text-anchor=\"middle\" font-size=\"13\" "
       "transform=\"rotate(-90 18 " + fmt((y0 + y1) / 2) + ")\">" + escape(spec.y_label) + "</text>\n";
  s += "</g>\n";

  s += "<g fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.2\">\n";
  for (const auto& r : spec.rects) {
    const double px = ax.map(r.x_lo), py = ay.map(r.y_hi);
    const double w = ax.map(r.x_hi) - px, h = ay.map(r.y_lo) - py;
    if (r.x_hi == r.x_lo || r.y_hi == r.y_lo) {
      const double cx = px + w / 2, cy = py + h / 2;
      s += "<path class=\"rule degenerate\" d=\"M" + fmt(cx - 4) + " " + fmt(cy - 4) + " L" +
           fmt(cx + 4) + " " + fmt(cy + 4) + " M" + fmt(cx - 4) + " " + fmt(cy + 4) + " L" +
           fmt(cx + 4) + " " + fmt(cy - 4) + "\"/>\n";
    } else {
      s += "<rect class=\"rule\" x=\"" + fmt(px) + "\" y=\"" + fmt(py) + "\" width=\"" + fmt(w) +
           "\" height=\"" + fmt(h) + "\"/>\n";
    }
  }
  s += "</g>\n<g>\n";
  for (const auto& p : spec.points) {
    const double cx = ax.map(p.x), cy = ay.map(p.y);
    if (p.anomalous) {
      s += "<rect class=\"anomalous\" x=\"" + fmt(cx - 2.5) + "\" y=\"" + fmt(cy - 2.5) +
           "\" width=\"5\" height=\"5\" fill=\"#d62728\"/>\n";
    } else {
      s += "<circle class=\"normal\" cx=\"" + fmt(cx) + "\" cy=\"" + fmt(cy) +
           "\" r=\"2.2\" fill=\"#2ca02c\"/>\n";
    }
  }
  s += "</g>\n</svg>\n";
  return s;
}

}  // namespace hyperrule
