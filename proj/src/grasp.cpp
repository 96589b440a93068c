#include "pilesort/grasp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "pilesort/config.hpp"
#include "pilesort/heightmap.hpp"

namespace pilesort {

// ---------------------------------------------------------------------------
// Gripper geometry

OpeningCurve::OpeningCurve(std::vector<OpeningCurvePoint> table)
    : table_(std::move(table)) {
  if (table_.empty()) throw std::invalid_argument("opening curve table is empty");
  std::sort(table_.begin(), table_.end(),
            [](const auto& a, const auto& b) { return a.opening < b.opening; });
  if (table_.front().offset != 0.0 || table_.front().lift != 0.0) {
    throw std::invalid_argument("opening curve must start at (0, 0)");
  }
  for (std::size_t i = 1; i < table_.size(); ++i) {
    if (table_[i].opening <= table_[i - 1].opening) {
      throw std::invalid_argument("opening curve has duplicate openings");
    }
    if (table_[i].offset < table_[i - 1].offset || table_[i].lift < table_[i - 1].lift) {
      throw std::invalid_argument("opening curve outputs must be nondecreasing");
    }
  }
}

OpeningCurve OpeningCurve::linear(double min_opening, double max_opening,
                                  double lift_ratio) {
  const double travel = 0.5 * (max_opening - min_opening);
  return OpeningCurve({{min_opening, 0.0, 0.0},
                       {max_opening, travel, lift_ratio * travel}});
}

std::pair<double, double> OpeningCurve::at(double opening) const {
  if (table_.empty()) return {0.0, 0.0};
  if (opening <= table_.front().opening) return {table_.front().offset, table_.front().lift};
  if (opening >= table_.back().opening) return {table_.back().offset, table_.back().lift};
  const auto hi = std::upper_bound(
      table_.begin(), table_.end(), opening,
      [](double o, const OpeningCurvePoint& p) { return o < p.opening; });
  const auto lo = hi - 1;
  const double t = (opening - lo->opening) / (hi->opening - lo->opening);
  return {lo->offset + t * (hi->offset - lo->offset), lo->lift + t * (hi->lift - lo->lift)};
}

void GripperGeometry::validate() const {
  if (!(finger_thickness > 0.0) || !(finger_width > 0.0)) {
    throw std::invalid_argument("finger dimensions must be positive");
  }
  if (!(min_opening > 0.0) || !(min_opening < max_opening)) {
    throw std::invalid_argument("require 0 < min_opening < max_opening");
  }
  if (opening_curve.table().empty() ||
      std::abs(opening_curve.table().front().opening - min_opening) > 1e-9) {
    throw std::invalid_argument("opening curve must start at min_opening");
  }
}

GripperGeometry parse_gripper_config(const std::string& text) {
  ConfigReader cfg = ConfigReader::parse(text);
  GripperGeometry g;
  g.finger_thickness = cfg.get("finger_thickness", g.finger_thickness);
  g.finger_width = cfg.get("finger_width", g.finger_width);
  g.min_opening = cfg.get("min_opening", g.min_opening);
  g.max_opening = cfg.get("max_opening", g.max_opening);
  const double lift_ratio = cfg.get("lift_ratio", 0.15);
  const std::string table = cfg.get("opening_curve", std::string{});
  cfg.finish();

  if (table.empty()) {
    g.opening_curve = OpeningCurve::linear(g.min_opening, g.max_opening, lift_ratio);
  } else {
    std::vector<OpeningCurvePoint> pts;
    std::string spec = table;
    std::replace(spec.begin(), spec.end(), ',', ' ');
    std::istringstream in(spec);
    std::string triple;
    while (in >> triple) {
      OpeningCurvePoint p;
      char c1 = 0;
      char c2 = 0;
      std::istringstream t(triple);
      if (!(t >> p.opening >> c1 >> p.offset >> c2 >> p.lift) || c1 != ':' || c2 != ':') {
        throw ConfigError("opening_curve entry '" + triple +
                          "' is not opening:offset:lift");
      }
      pts.push_back(p);
    }
    g.opening_curve = OpeningCurve(std::move(pts));
  }
  g.validate();
  return g;
}

GripperGeometry load_gripper_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open gripper config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_gripper_config(ss.str());
}

// ---------------------------------------------------------------------------
// Closed grasps

void closed_grasps_1d(std::span<const float> h, int d_min, int d_max,
                      std::vector<Grasp1D>& out) {
  const int n = static_cast<int>(h.size());
  // Strict suffix minima of h[0..i-1]; heights strictly increase toward the
  // top. The interior minimum for entry k is the height of entry k + 1.
  std::vector<int> stack;
  stack.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int k = static_cast<int>(stack.size()) - 2; k >= 0; --k) {
      if (!(h[stack[k + 1]] > h[i])) break;
      const int j = stack[k];
      const int d = i - j;
      if (d >= d_min && d <= d_max) {
        out.push_back({j, i, std::max(h[j], h[i]), h[j + 1] - h[j] + h[i - 1] - h[i]});
      }
    }
    while (!stack.empty() && h[stack.back()] >= h[i]) stack.pop_back();
    stack.push_back(i);
  }
}

std::vector<Grasp1D> closed_grasps_1d(std::span<const float> h, int d_min,
                                      int d_max) {
  std::vector<Grasp1D> out;
  closed_grasps_1d(h, d_min, d_max, out);
  return out;
}

int mm_to_px(double mm, double resolution_mm) {
  return static_cast<int>(std::floor(mm / resolution_mm + 0.5));
}

std::vector<GraspRectangle> closed_grasps(const Heightmap& h,
                                          const GripperGeometry& g,
                                          int num_angles) {
  if (num_angles < 1) throw std::invalid_argument("num_angles must be >= 1");
  const double res = h.resolution_mm();
  const int ft = std::max(1, mm_to_px(g.finger_thickness, res));
  const int fw = std::max(1, mm_to_px(g.finger_width, res));
  const int d_min = mm_to_px(g.min_opening, res) + ft;
  const int d_max = mm_to_px(g.max_opening, res) + ft;
  // Offset from a kernel's anchor cell center to the kernel's geometric center.
  const double kx = 0.5 * (ft / 2 - (ft - 1) / 2);
  const double ky = 0.5 * (fw / 2 - (fw - 1) / 2);

  std::vector<GraspRectangle> res_list;
  std::vector<Grasp1D> row_grasps;
  for (int k = 0; k < num_angles; ++k) {
    const double angle = k * M_PI / num_angles;
    const RotationFrame frame(h.width(), h.height(), angle);
    const Heightmap filtered = maximum_filter(rotate_heightmap(h, angle), ft, fw);
    for (int y = 0; y < filtered.height(); ++y) {
      row_grasps.clear();
      closed_grasps_1d(filtered.row(y), d_min, d_max, row_grasps);
      for (const auto& g1 : row_grasps) {
        const double u = 0.5 * (g1.i0 + g1.i1) + 0.5 + kx;
        const double v = y + 0.5 + ky;
        const Point2 p = frame.to_input(u, v);
        if (p.x < 0.0 || p.y < 0.0 || p.x >= h.width() || p.y >= h.height()) continue;
        GraspRectangle r;
        r.center_x = p.x * res;
        r.center_y = p.y * res;
        r.angle = angle;
        r.inner_span = (g1.i1 - g1.i0 - ft) * res;
        r.finger_width = fw * res;
        r.z = g1.z;
        r.extra_opening = 0.0;
        r.value = g1.v;
        res_list.push_back(r);
      }
    }
  }
  return res_list;
}

// ---------------------------------------------------------------------------
// Sampling

std::vector<GraspRectangle> weighted_sample(std::span<const GraspRectangle> cands,
                                            std::size_t n, Rng& rng) {
  // Efraimidis-Spirakis: keeping the n largest log(u)/w keys is equivalent to
  // n successive proportional draws without replacement. Output is in draw
  // order, so a short list comes back whole but shuffled by weight.
  n = std::min(n, cands.size());
  std::vector<std::pair<double, std::size_t>> keys(cands.size());
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const double w = cands[i].value > 0.0 ? cands[i].value : 1e-9;
    const double u = 1.0 - uniform01(rng);  // (0, 1]
    keys[i] = {std::log(u) / w, i};
  }
  auto by_key = [](const auto& a, const auto& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  };
  std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(n),
                    keys.end(), by_key);
  std::vector<GraspRectangle> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(cands[keys[i].second]);
  return out;
}

// ---------------------------------------------------------------------------
// Openings

std::vector<GraspRectangle> apply_openings(std::span<const GraspRectangle> grasps,
                                           const Heightmap& h,
                                           const GripperGeometry& g) {
  const double res = h.resolution_mm();
  const double ft = std::max(1, mm_to_px(g.finger_thickness, res));
  const double half_fw = 0.5 * std::max(1, mm_to_px(g.finger_width, res));
  const int ft_bins = static_cast<int>(ft);
  constexpr double kEps = 1e-9;

  std::vector<GraspRectangle> out;
  std::vector<float> step_max;
  std::vector<float> bins;
  for (const GraspRectangle& grasp : grasps) {
    out.push_back(grasp);
    const int steps = static_cast<int>(std::floor((g.max_opening - grasp.inner_span) / res + kEps));
    if (steps <= 0) continue;

    const double half_s = 0.5 * grasp.inner_span / res;
    const double base_offset = g.opening_curve.offset(grasp.inner_span);
    // Per-finger outward travel (px) at each extra-opening step.
    std::vector<double> travel(static_cast<std::size_t>(steps) + 1);
    for (int k = 0; k <= steps; ++k) {
      travel[k] = (g.opening_curve.offset(grasp.inner_span + k * res) - base_offset) / res;
    }
    const double reach = half_s + ft + travel[steps];

    const double ca = std::cos(grasp.angle);
    const double sa = std::sin(grasp.angle);
    const double cx = grasp.center_x / res;
    const double cy = grasp.center_y / res;
    const double ex = std::abs(ca) * reach + std::abs(sa) * half_fw + 1.0;
    const double ey = std::abs(sa) * reach + std::abs(ca) * half_fw + 1.0;
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - ex)));
    const int x1 = std::min(h.width() - 1, static_cast<int>(std::ceil(cx + ex)));
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - ey)));
    const int y1 = std::min(h.height() - 1, static_cast<int>(std::ceil(cy + ey)));

    step_max.assign(static_cast<std::size_t>(steps) + 1, 0.0f);
    const int n_bins = static_cast<int>(std::lround(2.0 * half_s + 2.0 * ft));
    bins.assign(static_cast<std::size_t>(std::max(n_bins, 0)), 0.0f);

    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double dx = x + 0.5 - cx;
        const double dy = y + 0.5 - cy;
        const double v = -sa * dx + ca * dy;
        if (std::abs(v) > half_fw + kEps) continue;
        const double u = ca * dx + sa * dy;
        const float hv = h(x, y);
        // Closed-position profile bins cover both fingers and the interior.
        const double bu = u + half_s + ft;
        if (bu >= 0.0 && bu < n_bins) {
          float& b = bins[static_cast<std::size_t>(bu)];
          b = std::max(b, hv);
        }
        const double outward = std::abs(u) - half_s - ft;
        if (std::abs(u) < half_s || outward <= kEps) continue;
        // First step whose finger travel reaches this cell center.
        const auto it = std::lower_bound(travel.begin(), travel.end(), outward - kEps);
        if (it == travel.end()) continue;
        const auto k = static_cast<std::size_t>(it - travel.begin());
        step_max[k] = std::max(step_max[k], hv);
      }
    }

    // Lowest finger-window maximum strictly between the two finger positions.
    float interior_floor = std::numeric_limits<float>::infinity();
    for (int j = 1; j < n_bins - ft_bins; ++j) {
      float m = 0.0f;
      for (int t = 0; t < ft_bins; ++t) m = std::max(m, bins[j + t]);
      interior_floor = std::min(interior_floor, m);
    }

    float swept = 0.0f;
    for (int k = 1; k <= steps; ++k) {
      swept = std::max(swept, step_max[k]);
      const double z_new = std::max(grasp.z, static_cast<double>(swept));
      if (z_new > grasp.z && !(z_new < interior_floor)) break;
      GraspRectangle variant = grasp;
      variant.extra_opening = k * res;
      variant.z = z_new;
      out.push_back(variant);
    }
  }
  return out;
}

}  // namespace pilesort
