#pragma once

// Synthetic test scene loosely shaped like the classic photographer image:
// bright graded sky, a distant building, a dark standing figure with a
// camera on a tripod, and a textured mid-grey lawn. Values lie in [0, 1].

#include "ovdd/field.hpp"

#include <algorithm>
#include <cmath>

namespace ovdd {

inline ScalarFieldd make_phantom(Index rows, Index cols) {
  const GridShape g(rows, cols);
  ScalarFieldd u(g.rows, g.cols);
  auto ellipse = [](double x, double y, double cx, double cy, double rx, double ry) {
    const double a = (x - cx) / rx, b = (y - cy) / ry;
    return a * a + b * b <= 1.0;
  };
  // Distance from (x, y) to the segment (x0, y0)-(x1, y1).
  auto segment = [](double x, double y, double x0, double y0, double x1, double y1) {
    const double dx = x1 - x0, dy = y1 - y0;
    const double t = std::clamp(((x - x0) * dx + (y - y0) * dy) / (dx * dx + dy * dy), 0.0, 1.0);
    return std::hypot(x - x0 - t * dx, y - y0 - t * dy);
  };

  for (Index j = 0; j < g.cols; ++j) {
    for (Index i = 0; i < g.rows; ++i) {
      // x runs down the image, y across, both in [0, 1).
      const double x = (double(i) + 0.5) / double(g.rows);
      const double y = (double(j) + 0.5) / double(g.cols);
      double v = 0.82 - 0.12 * x;  // sky
      if (x > 0.38 && x < 0.62 && y > 0.74 && y < 0.86) v = 0.68;  // building
      if (x > 0.30 && x < 0.40 && y > 0.78 && y < 0.80) v = 0.68;  // tower
      if (x >= 0.62) {
        v = 0.48 + 0.05 * std::sin(40.0 * y + 7.0 * x) * std::sin(23.0 * x);  // lawn
      }
      // Figure: head, coat, legs.
      if (ellipse(x, y, 0.20, 0.40, 0.06, 0.05)) v = 0.12;
      if (ellipse(x, y, 0.40, 0.40, 0.17, 0.11)) v = 0.06;
      if (segment(x, y, 0.52, 0.36, 0.92, 0.31) < 0.025) v = 0.08;
      if (segment(x, y, 0.52, 0.44, 0.92, 0.48) < 0.025) v = 0.08;
      // Camera and tripod.
      if (x > 0.26 && x < 0.33 && y > 0.50 && y < 0.60) v = 0.10;
      if (segment(x, y, 0.33, 0.56, 0.90, 0.50) < 0.008) v = 0.15;
      if (segment(x, y, 0.33, 0.56, 0.90, 0.64) < 0.008) v = 0.15;
      if (segment(x, y, 0.33, 0.56, 0.88, 0.57) < 0.008) v = 0.15;
      u(i, j) = std::clamp(v, 0.0, 1.0);
    }
  }
  return u;
}

}  // namespace ovdd
