#include "pilesort/heightmap.hpp"

#include <algorithm>
#include <functional>
#include <limits>

#include "pilesort/sliding_window.hpp"

namespace pilesort {

namespace {

int rotated_extent(double a, double b) {
  // Guards against cos(pi/2) ~ 6e-17 inflating the box by one cell.
  return static_cast<int>(std::ceil(a + b - 1e-9));
}

}  // namespace

RotationFrame::RotationFrame(int width, int height, double angle)
    : cos_a(std::cos(angle)), sin_a(std::sin(angle)) {
  if (angle == 0.0) {
    cos_a = 1.0;
    sin_a = 0.0;
  }
  const double ac = std::abs(cos_a);
  const double as = std::abs(sin_a);
  out_width = rotated_extent(width * ac, height * as);
  out_height = rotated_extent(width * as, height * ac);
  in_cx = 0.5 * width;
  in_cy = 0.5 * height;
  out_cx = 0.5 * out_width;
  out_cy = 0.5 * out_height;
}

Heightmap rotate_heightmap(const Heightmap& h, double angle) {
  const RotationFrame frame(h.width(), h.height(), angle);
  Heightmap out(frame.out_width, frame.out_height, h.resolution_mm());
  for (int y = 0; y < out.height(); ++y) {
    Point2 q = frame.to_input(0.5, y + 0.5);
    auto row = out.row(y);
    for (int x = 0; x < out.width(); ++x) {
      const int ix = static_cast<int>(std::floor(q.x));
      const int iy = static_cast<int>(std::floor(q.y));
      row[x] = h.at_or(ix, iy, 0.0f);
      q.x += frame.cos_a;
      q.y += frame.sin_a;
    }
  }
  return out;
}

Heightmap maximum_filter(const Heightmap& h, int kernel_w, int kernel_h) {
  if (kernel_w < 1 || kernel_h < 1) {
    throw std::invalid_argument("maximum_filter: kernel dimensions must be >= 1");
  }
  const int w = h.width();
  const int ht = h.height();
  Heightmap tmp(w, ht, h.resolution_mm());
  const int bx = (kernel_w - 1) / 2;
  const int ax = kernel_w / 2;
  for (int y = 0; y < ht; ++y) {
    sliding_extremum<float>(h.row(y), tmp.row(y), bx, ax, std::greater<float>{});
  }

  Heightmap out(w, ht, h.resolution_mm());
  const int by = (kernel_h - 1) / 2;
  const int ay = kernel_h / 2;
  std::vector<float> col_in(static_cast<std::size_t>(ht));
  std::vector<float> col_out(static_cast<std::size_t>(ht));
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < ht; ++y) col_in[y] = tmp(x, y);
    sliding_extremum<float>(std::span<const float>(col_in), col_out, by, ay,
                            std::greater<float>{});
    for (int y = 0; y < ht; ++y) out(x, y) = col_out[y];
  }
  return out;
}

Capture rasterize(const Scene& scene, const CaptureConfig& config) {
  Capture cap{Heightmap(config.width, config.height, config.resolution_mm),
              RgbMap(config.width, config.height, kBeltGray),
              UnknownMask(config.width, config.height, 0)};
  for (const auto& obj : scene.objects) {
    const auto top = static_cast<float>(obj.top());
    // A cell reports the highest surface anywhere inside it.
    for_each_touched_cell(obj, config.resolution_mm, config.width, config.height,
                          [&](int x, int y) {
                            if (top > cap.height(x, y)) {
                              cap.height(x, y) = top;
                              cap.rgb(x, y) = obj.color;
                            }
                          });
  }
  return cap;
}

Capture capture(const Scene& scene, double camera_x_mm,
                const CaptureConfig& config) {
  Capture cap = rasterize(scene, config);
  const Heightmap visible = cap.height;
  const double cam_h = config.camera_height_mm;
  const double res = config.resolution_mm;
  const int w = config.width;

  // Marches outward from the camera along one side of a row. The binding
  // occluder for a cell at distance d is the nearer cell with the smallest
  // (cam_h - h') / d'; the cell is hidden when its own slope is larger.
  auto march = [&](int y, int start, int stop, int step) {
    double best_slope = std::numeric_limits<double>::infinity();
    float occluder_h = 0.0f;
    for (int x = start; x != stop; x += step) {
      const double d = std::abs((x + 0.5) * res - camera_x_mm);
      if (d <= 0.0) continue;
      const float hc = visible(x, y);
      const double slope = (cam_h - hc) / d;
      if (best_slope < slope - 1e-12 &&
          occluder_h - hc > config.occlusion_depth_step_mm) {
        cap.height(x, y) = occluder_h;
        cap.rgb(x, y) = kBeltGray;
        cap.unknown(x, y) = 1;
      }
      if (slope < best_slope) {
        best_slope = slope;
        occluder_h = hc;
      }
    }
  };

  // First cell whose center lies strictly right of the camera.
  int split = static_cast<int>(std::floor(camera_x_mm / res - 0.5)) + 1;
  split = std::clamp(split, 0, w);
  for (int y = 0; y < config.height; ++y) {
    march(y, split, w, 1);
    march(y, split - 1, -1, -1);
  }
  return cap;
}

}  // namespace pilesort
