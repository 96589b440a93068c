#include "pilesort/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "pilesort/simworld.hpp"

namespace pilesort {

bool SimObject::covers(double x, double y) const {
  const double dx = x - pose.x;
  const double dy = y - pose.y;
  if (shape == Shape::Disc) {
    const double r = 0.5 * size_x;
    return dx * dx + dy * dy <= r * r;
  }
  const double c = std::cos(pose.yaw);
  const double s = std::sin(pose.yaw);
  const double lx = c * dx + s * dy;
  const double ly = -s * dx + c * dy;
  return std::abs(lx) <= 0.5 * size_x && std::abs(ly) <= 0.5 * size_y;
}

bool SimObject::touches_box(double x0, double y0, double x1, double y1) const {
  constexpr double kSlack = 1e-9;
  if (shape == Shape::Disc) {
    const double r = 0.5 * size_x;
    const double dx = pose.x - std::clamp(pose.x, x0, x1);
    const double dy = pose.y - std::clamp(pose.y, y0, y1);
    return dx * dx + dy * dy < r * r - kSlack;
  }
  // Separating axes: the box's two axes and the object's two axes.
  const double c = std::cos(pose.yaw);
  const double s = std::sin(pose.yaw);
  const double hx = 0.5 * size_x;
  const double hy = 0.5 * size_y;
  const double ex = std::abs(c) * hx + std::abs(s) * hy;
  const double ey = std::abs(s) * hx + std::abs(c) * hy;
  if (!(pose.x + ex > x0 + kSlack && pose.x - ex < x1 - kSlack)) return false;
  if (!(pose.y + ey > y0 + kSlack && pose.y - ey < y1 - kSlack)) return false;
  const double bx = 0.5 * (x0 + x1);
  const double by = 0.5 * (y0 + y1);
  const double wx = 0.5 * (x1 - x0);
  const double wy = 0.5 * (y1 - y0);
  const double lx = c * (bx - pose.x) + s * (by - pose.y);
  const double ly = -s * (bx - pose.x) + c * (by - pose.y);
  const double rx = std::abs(c) * wx + std::abs(s) * wy;
  const double ry = std::abs(s) * wx + std::abs(c) * wy;
  return std::abs(lx) < hx + rx - kSlack && std::abs(ly) < hy + ry - kSlack;
}

std::vector<Point2> SimObject::outline(int disc_segments) const {
  std::vector<Point2> pts;
  if (shape == Shape::Disc) {
    const double r = 0.5 * size_x;
    pts.reserve(disc_segments);
    for (int i = 0; i < disc_segments; ++i) {
      const double a = 2.0 * M_PI * i / disc_segments;
      pts.push_back({pose.x + r * std::cos(a), pose.y + r * std::sin(a)});
    }
    return pts;
  }
  const double c = std::cos(pose.yaw);
  const double s = std::sin(pose.yaw);
  const double hx = 0.5 * size_x;
  const double hy = 0.5 * size_y;
  const std::array<Point2, 4> local{{{-hx, -hy}, {hx, -hy}, {hx, hy}, {-hx, hy}}};
  for (const auto& p : local) {
    pts.push_back({pose.x + c * p.x - s * p.y, pose.y + s * p.x + c * p.y});
  }
  return pts;
}

std::array<double, 4> SimObject::bounds() const {
  if (shape == Shape::Disc) {
    const double r = 0.5 * size_x;
    return {pose.x - r, pose.y - r, pose.x + r, pose.y + r};
  }
  const double c = std::abs(std::cos(pose.yaw));
  const double s = std::abs(std::sin(pose.yaw));
  const double ex = 0.5 * (size_x * c + size_y * s);
  const double ey = 0.5 * (size_x * s + size_y * c);
  return {pose.x - ex, pose.y - ey, pose.x + ex, pose.y + ey};
}

std::string format_object_line(const SimObject& obj) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%s,%s,%.3f,%.3f,%.3f,%.4f,%.3f,%.3f,%.6f",
                obj.id, std::string(class_name(obj.cls)).c_str(),
                obj.shape == Shape::Box ? "box" : "disc", obj.size_x,
                obj.size_y, obj.thickness, obj.mass_kg, obj.pose.x, obj.pose.y,
                obj.pose.yaw);
  return buf;
}

void write_scene(std::ostream& out, const Scene& scene) {
  for (const auto& obj : scene.objects) out << format_object_line(obj) << '\n';
}

Scene read_scene(std::istream& in, double belt_width_mm, double belt_height_mm) {
  Scene scene;
  scene.belt_width_mm = belt_width_mm;
  scene.belt_height_mm = belt_height_mm;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 10) {
      throw std::runtime_error("scene line " + std::to_string(line_no) +
                               ": expected 10 fields");
    }
    SimObject obj;
    try {
      obj.id = std::stoi(fields[0]);
      const auto cls = parse_class(fields[1]);
      if (!cls || *cls == ColorClass::Unknown) {
        throw std::runtime_error("bad class '" + fields[1] + "'");
      }
      obj.cls = *cls;
      if (fields[2] == "box") {
        obj.shape = Shape::Box;
      } else if (fields[2] == "disc") {
        obj.shape = Shape::Disc;
      } else {
        throw std::runtime_error("bad shape '" + fields[2] + "'");
      }
      obj.size_x = std::stod(fields[3]);
      obj.size_y = std::stod(fields[4]);
      obj.thickness = std::stod(fields[5]);
      obj.mass_kg = std::stod(fields[6]);
      obj.pose.x = std::stod(fields[7]);
      obj.pose.y = std::stod(fields[8]);
      obj.pose.yaw = std::stod(fields[9]);
    } catch (const std::logic_error&) {
      throw std::runtime_error("scene line " + std::to_string(line_no) +
                               ": malformed number");
    }
    if (!(obj.thickness > 0.0) || !(obj.mass_kg > 0.0) || !(obj.size_x > 0.0)) {
      throw std::runtime_error("scene line " + std::to_string(line_no) +
                               ": sizes and mass must be positive");
    }
    obj.color = palette_color(obj.cls);
    drop_object(scene, obj);
    scene.next_id = std::max(scene.next_id, obj.id + 1);
  }
  return scene;
}

}  // namespace pilesort
