#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <iosfwd>
#include <string>
#include <vector>

#include "pilesort/color.hpp"
#include "pilesort/grid.hpp"

namespace pilesort {

enum class Shape { Box, Disc };

struct Pose {
  double x = 0.0;  // mm, belt frame
  double y = 0.0;
  double rest_height = 0.0;  // mm, bottom face above belt
  double yaw = 0.0;          // radians
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// A flat-topped prism resting on the belt or on other objects.
struct SimObject {
  int id = 0;
  ColorClass cls = ColorClass::Red;
  Shape shape = Shape::Box;
  double size_x = 0.0;  // mm; disc diameter
  double size_y = 0.0;  // mm; ignored for discs
  double thickness = 0.0;
  double mass_kg = 0.0;
  Pose pose;
  Rgb color;

  double top() const { return pose.rest_height + thickness; }

  /// Point containment in the horizontal plane (mm).
  bool covers(double x, double y) const;

  /// Positive-area overlap with the axis-aligned box [x0, x1] x [y0, y1].
  bool touches_box(double x0, double y0, double x1, double y1) const;

  /// Footprint outline, counter-clockwise. Discs are approximated by a
  /// regular polygon with `disc_segments` vertices.
  std::vector<Point2> outline(int disc_segments = 32) const;

  /// Conservative axis-aligned bounds [min_x, min_y, max_x, max_y].
  std::array<double, 4> bounds() const;
};

struct Scene {
  std::vector<SimObject> objects;
  double belt_width_mm = 2000.0;
  double belt_height_mm = 1500.0;
  int next_id = 0;
};

/// Visits every cell of a (width x height) grid at `resolution_mm` whose
/// center lies inside the object's footprint.
template <class Fn>
void for_each_covered_cell(const SimObject& obj, double resolution_mm,
                           int width, int height, Fn&& fn) {
  const auto b = obj.bounds();
  int x0 = static_cast<int>(b[0] / resolution_mm - 0.5);
  int y0 = static_cast<int>(b[1] / resolution_mm - 0.5);
  int x1 = static_cast<int>(b[2] / resolution_mm + 0.5);
  int y1 = static_cast<int>(b[3] / resolution_mm + 0.5);
  x0 = x0 < 0 ? 0 : x0;
  y0 = y0 < 0 ? 0 : y0;
  x1 = x1 >= width ? width - 1 : x1;
  y1 = y1 >= height ? height - 1 : y1;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      if (obj.covers((x + 0.5) * resolution_mm, (y + 0.5) * resolution_mm)) {
        fn(x, y);
      }
    }
  }
}

/// Visits every cell whose square overlaps the object's footprint with
/// positive area.
template <class Fn>
void for_each_touched_cell(const SimObject& obj, double resolution_mm, int width, int height,
                           Fn&& fn) {
  const auto b = obj.bounds();
  const int x0 = std::max(0, static_cast<int>(std::floor(b[0] / resolution_mm)));
  const int y0 = std::max(0, static_cast<int>(std::floor(b[1] / resolution_mm)));
  const int x1 = std::min(width - 1, static_cast<int>(std::floor(b[2] / resolution_mm)));
  const int y1 = std::min(height - 1, static_cast<int>(std::floor(b[3] / resolution_mm)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      if (obj.touches_box(x * resolution_mm, y * resolution_mm, (x + 1) * resolution_mm,
                          (y + 1) * resolution_mm)) {
        fn(x, y);
      }
    }
  }
}

/// Line format: id,class,shape,w,h,thickness,mass,x,y,yaw
std::string format_object_line(const SimObject& obj);
void write_scene(std::ostream& out, const Scene& scene);
/// Reads objects in file order and re-rests each one with the stacking rule,
/// so rest heights are derived rather than stored. Colors are the base class
/// palette color.
Scene read_scene(std::istream& in, double belt_width_mm, double belt_height_mm);

}  // namespace pilesort
