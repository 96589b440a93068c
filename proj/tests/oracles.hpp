// Independent reference implementations used as test oracles.
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pilesort/grasp.hpp"
#include "pilesort/heightmap.hpp"

namespace oracle {

// Every (i0, i1) pair checked directly against the closed-grasp condition.
inline std::vector<pilesort::Grasp1D> closed_grasps_1d(const std::vector<float>& h, int d_min,
                                                       int d_max) {
  std::vector<pilesort::Grasp1D> out;
  const int n = static_cast<int>(h.size());
  for (int i0 = 0; i0 < n; ++i0) {
    for (int i1 = i0 + std::max(d_min, 2); i1 < n && i1 - i0 <= d_max; ++i1) {
      const float z = std::max(h[i0], h[i1]);
      bool ok = true;
      for (int i = i0 + 1; i < i1 && ok; ++i) ok = h[i] > z;
      if (!ok) continue;
      const float v = h[i0 + 1] - h[i0] + h[i1 - 1] - h[i1];
      out.push_back({i0, i1, z, v});
    }
  }
  return out;
}

inline bool grasp_less(const pilesort::Grasp1D& a, const pilesort::Grasp1D& b) {
  if (a.i0 != b.i0) return a.i0 < b.i0;
  if (a.i1 != b.i1) return a.i1 < b.i1;
  if (a.z != b.z) return a.z < b.z;
  return a.v < b.v;
}

inline std::vector<pilesort::Grasp1D> sorted(std::vector<pilesort::Grasp1D> g) {
  std::sort(g.begin(), g.end(), grasp_less);
  return g;
}

// Windowed max by direct scan, same clamped centered window as the library.
inline pilesort::Heightmap naive_max_filter(const pilesort::Heightmap& h, int kw, int kh) {
  pilesort::Heightmap out(h.width(), h.height(), h.resolution_mm());
  const int bx = (kw - 1) / 2, ax = kw / 2;
  const int by = (kh - 1) / 2, ay = kh / 2;
  for (int y = 0; y < h.height(); ++y) {
    for (int x = 0; x < h.width(); ++x) {
      float m = -INFINITY;
      for (int yy = std::max(0, y - by); yy <= std::min(h.height() - 1, y + ay); ++yy) {
        for (int xx = std::max(0, x - bx); xx <= std::min(h.width() - 1, x + ax); ++xx) {
          m = std::max(m, h(xx, yy));
        }
      }
      out(x, y) = m;
    }
  }
  return out;
}

// Re-derives the 1D grasp behind a rectangle in the rotated, max-filtered
// frame and checks the closed-grasp condition there.
struct RectCheck {
  bool ok = false;
  std::string why;
};

inline RectCheck check_rectangle(const pilesort::Heightmap& h, const pilesort::GripperGeometry& g,
                                 const pilesort::GraspRectangle& r,
                                 const pilesort::Heightmap& filtered) {
  using namespace pilesort;
  const double res = h.resolution_mm();
  const int ft = std::max(1, mm_to_px(g.finger_thickness, res));
  const int fw = std::max(1, mm_to_px(g.finger_width, res));
  const double kx = 0.5 * (ft / 2 - (ft - 1) / 2);
  const double ky = 0.5 * (fw / 2 - (fw - 1) / 2);
  const RotationFrame frame(h.width(), h.height(), r.angle);
  const Point2 p = frame.to_output(r.center_x / res, r.center_y / res);
  const int y = static_cast<int>(std::lround(p.y - 0.5 - ky));
  const double sum = 2.0 * (p.x - 0.5 - kx);
  const int d = static_cast<int>(std::lround(r.inner_span / res)) + ft;
  const int i0 = static_cast<int>(std::lround((sum - d) / 2.0));
  const int i1 = i0 + d;
  if (y < 0 || y >= filtered.height() || i0 < 0 || i1 >= filtered.width()) {
    return {false, "outside the rotated frame"};
  }
  const float z = std::max(filtered(i0, y), filtered(i1, y));
  if (z != static_cast<float>(r.z)) return {false, "z differs from the finger heights"};
  for (int i = i0 + 1; i < i1; ++i) {
    if (!(filtered(i, y) > z)) return {false, "interior cell not above z"};
  }
  if (i1 - i0 < 2) return {false, "no interior"};
  return {true, ""};
}

}  // namespace oracle
