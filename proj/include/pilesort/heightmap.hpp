#pragma once

#include <cmath>

#include "pilesort/grid.hpp"
#include "pilesort/scene.hpp"

namespace pilesort {

/// Pixel-coordinate transform between a map and its rotated copy. Output
/// point p maps to input point c_in + R(angle) (p - c_out), so output rows
/// run along direction (cos angle, sin angle) of the input.
struct RotationFrame {
  double cos_a = 1.0;
  double sin_a = 0.0;
  double in_cx = 0.0;
  double in_cy = 0.0;
  double out_cx = 0.0;
  double out_cy = 0.0;
  int out_width = 0;
  int out_height = 0;

  RotationFrame() = default;
  RotationFrame(int width, int height, double angle);

  Point2 to_input(double ox, double oy) const {
    const double dx = ox - out_cx;
    const double dy = oy - out_cy;
    return {in_cx + cos_a * dx - sin_a * dy, in_cy + sin_a * dx + cos_a * dy};
  }
  Point2 to_output(double ix, double iy) const {
    const double dx = ix - in_cx;
    const double dy = iy - in_cy;
    return {out_cx + cos_a * dx + sin_a * dy, out_cy - sin_a * dx + cos_a * dy};
  }
};

/// Nearest-neighbor rotation onto the rotated bounding box; samples outside
/// the input read as belt level (0).
Heightmap rotate_heightmap(const Heightmap& h, double angle);

/// Max over the centered kernel_w x kernel_h window, clamped at borders.
/// Even kernels extend one extra cell towards +x / +y.
Heightmap maximum_filter(const Heightmap& h, int kernel_w, int kernel_h);

struct CaptureConfig {
  int width = 400;
  int height = 300;
  double resolution_mm = kDefaultResolutionMm;
  double camera_height_mm = 2000.0;
  /// Minimum occluder-to-cell height difference before a shadowed cell is
  /// flagged unknown.
  double occlusion_depth_step_mm = 20.0;
};

struct Capture {
  Heightmap height;
  RgbMap rgb;
  UnknownMask unknown;
};

/// Orthographic top-down capture with a per-row shadow model: a virtual
/// camera at (camera_x, camera_height) hides cells whose line of sight
/// (cell centers, along x) passes below a nearer surface. Hidden cells take
/// the binding occluder's height and are flagged in the unknown mask.
Capture capture(const Scene& scene, double camera_x_mm,
                const CaptureConfig& config = {});

/// Occlusion-free rasterization (heights and colors only).
Capture rasterize(const Scene& scene, const CaptureConfig& config);

}  // namespace pilesort
