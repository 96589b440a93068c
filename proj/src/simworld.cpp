#include "pilesort/simworld.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace pilesort {

namespace {

constexpr double kEps = 1e-9;
// Heightmaps hold single-precision heights; surfaces this close count as level.
constexpr double kHeightEps = 1e-2;

std::vector<Point2> rect_outline(const OrientedRect& r) {
  const double c = std::cos(r.angle);
  const double s = std::sin(r.angle);
  const double hl = r.half_length;
  const double hw = r.half_width;
  const Point2 local[4] = {{-hl, -hw}, {hl, -hw}, {hl, hw}, {-hl, hw}};
  std::vector<Point2> pts;
  for (const auto& p : local) pts.push_back({r.cx + c * p.x - s * p.y, r.cy + s * p.x + c * p.y});
  return pts;
}

void project(const std::vector<Point2>& poly, double nx, double ny, double& lo, double& hi) {
  lo = std::numeric_limits<double>::infinity();
  hi = -lo;
  for (const auto& p : poly) {
    const double d = p.x * nx + p.y * ny;
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
}

bool separated_on_edges(const std::vector<Point2>& a, const std::vector<Point2>& b) {
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& p = a[i];
    const Point2& q = a[(i + 1) % n];
    const double nx = -(q.y - p.y);
    const double ny = q.x - p.x;
    const double len = std::hypot(nx, ny);
    if (len < kEps) continue;
    double alo, ahi, blo, bhi;
    project(a, nx / len, ny / len, alo, ahi);
    project(b, nx / len, ny / len, blo, bhi);
    if (ahi <= blo + kEps || bhi <= alo + kEps) return true;
  }
  return false;
}

bool convex_overlap(const std::vector<Point2>& a, const std::vector<Point2>& b) {
  return !separated_on_edges(a, b) && !separated_on_edges(b, a);
}

// Disc against an oriented rectangle, exact.
bool disc_rect_overlap(double x, double y, double r, const OrientedRect& rect) {
  const double c = std::cos(rect.angle);
  const double s = std::sin(rect.angle);
  const double dx = x - rect.cx;
  const double dy = y - rect.cy;
  const double u = c * dx + s * dy;
  const double v = -s * dx + c * dy;
  const double qu = std::clamp(u, -rect.half_length, rect.half_length);
  const double qv = std::clamp(v, -rect.half_width, rect.half_width);
  return (u - qu) * (u - qu) + (v - qv) * (v - qv) < r * r - kEps;
}

OrientedRect box_rect(const SimObject& o) {
  return {o.pose.x, o.pose.y, o.pose.yaw, 0.5 * o.size_x, 0.5 * o.size_y};
}

// Extent of the footprint projected on the unit axis (ax, ay) through (cx, cy).
std::pair<double, double> axis_extent(const SimObject& o, double cx, double cy, double ax,
                                      double ay) {
  if (o.shape == Shape::Disc) {
    const double d = (o.pose.x - cx) * ax + (o.pose.y - cy) * ay;
    return {d - 0.5 * o.size_x, d + 0.5 * o.size_x};
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& p : o.outline()) {
    const double d = (p.x - cx) * ax + (p.y - cy) * ay;
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  return {lo, hi};
}

void jitter(SimObject& o, double amount, Rng& rng) {
  o.pose.x += uniform(rng, -amount, amount);
  o.pose.y += uniform(rng, -amount, amount);
}

std::uint8_t clamp_channel(int v) { return static_cast<std::uint8_t>(std::clamp(v, 0, 255)); }

}  // namespace

bool footprints_overlap(const SimObject& a, const SimObject& b) {
  if (a.shape == Shape::Disc && b.shape == Shape::Disc) {
    const double r = 0.5 * (a.size_x + b.size_x);
    const double dx = a.pose.x - b.pose.x;
    const double dy = a.pose.y - b.pose.y;
    return dx * dx + dy * dy < r * r - kEps;
  }
  if (a.shape == Shape::Disc) return disc_rect_overlap(a.pose.x, a.pose.y, 0.5 * a.size_x, box_rect(b));
  if (b.shape == Shape::Disc) return disc_rect_overlap(b.pose.x, b.pose.y, 0.5 * b.size_x, box_rect(a));
  return convex_overlap(a.outline(), b.outline());
}

bool footprint_intersects(const SimObject& obj, const OrientedRect& rect) {
  if (obj.shape == Shape::Disc) {
    return disc_rect_overlap(obj.pose.x, obj.pose.y, 0.5 * obj.size_x, rect);
  }
  return convex_overlap(obj.outline(), rect_outline(rect));
}

double support_height(const Scene& scene, const SimObject& obj) {
  double h = 0.0;
  for (const auto& other : scene.objects) {
    if (footprints_overlap(obj, other)) h = std::max(h, other.top());
  }
  return h;
}

void drop_object(Scene& scene, SimObject obj) {
  if (obj.id < 0) obj.id = scene.next_id;
  scene.next_id = std::max(scene.next_id, obj.id + 1);
  obj.pose.rest_height = support_height(scene, obj);
  scene.objects.push_back(obj);
}

void settle(Scene& scene) {
  auto& objs = scene.objects;
  std::vector<std::size_t> order(objs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return objs[a].pose.rest_height < objs[b].pose.rest_height;
  });
  for (std::size_t k = 0; k < order.size(); ++k) {
    SimObject& o = objs[order[k]];
    double h = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const SimObject& below = objs[order[j]];
      if (footprints_overlap(o, below)) h = std::max(h, below.top());
    }
    o.pose.rest_height = h;
  }
}

void PileConfig::validate() const {
  if (min_objects < 0 || max_objects < min_objects) {
    throw std::invalid_argument("pile object count range is invalid");
  }
  if (!(region[0] >= 0.0 && region[2] <= 1.0 && region[0] < region[2] && region[1] >= 0.0 &&
        region[3] <= 1.0 && region[1] < region[3])) {
    throw std::invalid_argument("pile region must be a non-empty sub-rectangle of the belt");
  }
  if (!(min_size_mm > 0.0 && max_size_mm >= min_size_mm)) {
    throw std::invalid_argument("pile size range is invalid");
  }
  if (!(min_thickness_mm > 0.0 && max_thickness_mm >= min_thickness_mm)) {
    throw std::invalid_argument("pile thickness range is invalid");
  }
  if (!(min_density > 0.0 && max_density >= min_density)) {
    throw std::invalid_argument("pile density range is invalid");
  }
  if (!(disc_fraction >= 0.0 && disc_fraction <= 1.0)) {
    throw std::invalid_argument("disc_fraction must lie in [0, 1]");
  }
  double total = 0.0;
  for (double w : class_mix) {
    if (!(w >= 0.0)) throw std::invalid_argument("class mix weights must be nonnegative");
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("class mix must have positive weight");
  if (color_jitter < 0 || color_jitter > 60) throw std::invalid_argument("color_jitter must lie in [0, 60]");
}

SimObject random_object(const PileConfig& cfg, double belt_w, double belt_h, Rng& rng) {
  SimObject o;
  o.id = -1;
  o.shape = uniform01(rng) < cfg.disc_fraction ? Shape::Disc : Shape::Box;
  o.size_x = uniform(rng, cfg.min_size_mm, cfg.max_size_mm);
  o.size_y = o.shape == Shape::Disc ? o.size_x : uniform(rng, cfg.min_size_mm, cfg.max_size_mm);
  o.thickness = uniform(rng, cfg.min_thickness_mm, cfg.max_thickness_mm);
  const double density = uniform(rng, cfg.min_density, cfg.max_density);
  const double area = o.shape == Shape::Disc ? M_PI * 0.25 * o.size_x * o.size_x
                                             : o.size_x * o.size_y;
  o.mass_kg = density * area * o.thickness * 1e-6;

  const double total = cfg.class_mix[0] + cfg.class_mix[1] + cfg.class_mix[2];
  double u = uniform01(rng) * total;
  int cls = 0;
  while (cls < kNumMaterialClasses - 1 && u >= cfg.class_mix[cls]) u -= cfg.class_mix[cls++];
  o.cls = static_cast<ColorClass>(cls);

  const Rgb base = palette_color(o.cls);
  const int j = cfg.color_jitter;
  o.color = {clamp_channel(base.r + static_cast<int>(uniform_int(rng, -j, j))),
             clamp_channel(base.g + static_cast<int>(uniform_int(rng, -j, j))),
             clamp_channel(base.b + static_cast<int>(uniform_int(rng, -j, j)))};

  o.pose.x = uniform(rng, cfg.region[0] * belt_w, cfg.region[2] * belt_w);
  o.pose.y = uniform(rng, cfg.region[1] * belt_h, cfg.region[3] * belt_h);
  o.pose.yaw = uniform(rng, 0.0, M_PI);
  return o;
}

void add_pile(Scene& scene, const PileConfig& cfg, Rng& rng) {
  cfg.validate();
  const auto count = static_cast<int>(uniform_int(rng, cfg.min_objects, cfg.max_objects));
  for (int i = 0; i < count; ++i) {
    drop_object(scene, random_object(cfg, scene.belt_width_mm, scene.belt_height_mm, rng));
  }
}

Scene generate_pile(const PileConfig& cfg, Rng& rng, double belt_w, double belt_h) {
  Scene scene;
  scene.belt_width_mm = belt_w;
  scene.belt_height_mm = belt_h;
  add_pile(scene, cfg, rng);
  return scene;
}

void GraspSimConfig::validate() const {
  if (!(base_slip >= 0.0 && mass_slip_per_kg >= 0.0 && shallow_slip >= 0.0 &&
        off_axis_slip >= 0.0)) {
    throw std::invalid_argument("slip terms must be nonnegative");
  }
  if (!(max_slip >= 0.0 && max_slip <= 1.0)) throw std::invalid_argument("max_slip must lie in [0, 1]");
  if (!(shallow_contact_mm >= 0.0)) throw std::invalid_argument("shallow_contact_mm must be nonnegative");
  if (!(disturb_mm >= 0.0)) throw std::invalid_argument("disturb_mm must be nonnegative");
  if (!(contact_tolerance_mm >= 0.0)) {
    throw std::invalid_argument("contact_tolerance_mm must be nonnegative");
  }
}

GraspOutcome execute_grasp(Scene& scene, const GraspRectangle& grasp,
                           const GripperGeometry& gripper, Rng& rng, const GraspSimConfig& cfg) {
  GraspOutcome out;
  if (!(grasp.center_x >= 0.0 && grasp.center_x <= scene.belt_width_mm &&
        grasp.center_y >= 0.0 && grasp.center_y <= scene.belt_height_mm)) {
    out.out_of_bounds = true;
    return out;
  }
  const double opening =
      std::clamp(grasp.inner_span + grasp.extra_opening, 0.0, gripper.max_opening);
  const double ft = gripper.finger_thickness;
  const double fw = gripper.finger_width;
  const double tol = cfg.contact_tolerance_mm;
  const double ax = std::cos(grasp.angle);
  const double ay = std::sin(grasp.angle);
  // Open fingertips ride higher by the lift gained since the closed span.
  const double tip_open = grasp.z + std::max(0.0, gripper.opening_curve.lift(opening) -
                                                      gripper.opening_curve.lift(grasp.inner_span));

  // Descent: a finger coming down on material stops the attempt.
  bool hit_any = false;
  for (const double side : {-1.0, 1.0}) {
    const double d = side * (0.5 * opening + 0.5 * ft);
    const OrientedRect finger{grasp.center_x + d * ax, grasp.center_y + d * ay, grasp.angle,
                              std::max(0.0, 0.5 * ft - tol), std::max(0.0, 0.5 * fw - tol)};
    for (auto& o : scene.objects) {
      if (o.top() > tip_open + kHeightEps && footprint_intersects(o, finger)) {
        jitter(o, cfg.disturb_mm, rng);
        hit_any = true;
      }
    }
  }
  if (hit_any) {
    out.collided = true;
    settle(scene);
    return out;
  }

  // Closing: everything between the fingers that rises above z.
  const OrientedRect gap{grasp.center_x, grasp.center_y, grasp.angle, 0.5 * opening, 0.5 * fw};
  std::vector<std::size_t> grasped;
  double closed_to = 0.0;
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const SimObject& o = scene.objects[i];
    if (!(o.top() > grasp.z + kHeightEps) || !footprint_intersects(o, gap)) continue;
    const auto [lo, hi] = axis_extent(o, grasp.center_x, grasp.center_y, ax, ay);
    if (lo < -0.5 * opening - tol - kEps || hi > 0.5 * opening + tol + kEps) continue;
    grasped.push_back(i);
  }

  std::vector<bool> removed(scene.objects.size(), false);
  for (const std::size_t i : grasped) {
    const SimObject& o = scene.objects[i];
    removed[i] = true;
    double slip = 0.0;
    if (cfg.slip_enabled) {
      slip = cfg.base_slip + cfg.mass_slip_per_kg * o.mass_kg;
      const double contact = o.top() - std::max(grasp.z, o.pose.rest_height);
      if (cfg.shallow_contact_mm > 0.0 && contact < cfg.shallow_contact_mm) {
        slip += cfg.shallow_slip * (1.0 - contact / cfg.shallow_contact_mm);
      }
      bool on_axis = false;
      for (double t = -0.5 * opening; t <= 0.5 * opening && !on_axis; t += 2.0) {
        on_axis = o.covers(grasp.center_x + t * ax, grasp.center_y + t * ay);
      }
      if (!on_axis) slip += cfg.off_axis_slip;
      slip = std::min(slip, cfg.max_slip);
    }
    // One draw per grasped object keeps the random stream aligned.
    const double u = uniform01(rng);
    if (u < slip) {
      out.slipped.push_back(o);
    } else {
      out.picked.push_back(o);
      const auto [lo, hi] = axis_extent(o, grasp.center_x, grasp.center_y, ax, ay);
      closed_to += hi - lo;
    }
  }
  out.gripper_closed_to = std::min(closed_to, opening);
  out.success_before_release = !out.picked.empty();

  if (!grasped.empty()) {
    // Whatever rested on a removed object is knocked aside and falls.
    std::vector<SimObject> kept;
    kept.reserve(scene.objects.size());
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
      if (removed[i]) continue;
      SimObject o = scene.objects[i];
      for (const std::size_t r : grasped) {
        const SimObject& gone = scene.objects[r];
        if (o.pose.rest_height >= gone.top() - 1e-6 && footprints_overlap(o, gone)) {
          jitter(o, cfg.disturb_mm, rng);
          break;
        }
      }
      kept.push_back(o);
    }
    scene.objects = std::move(kept);
    settle(scene);
  }
  return out;
}

void DropZoneConfig::validate() const {
  if (width < 1 || height < 1) throw std::invalid_argument("drop zone frame must be non-empty");
  if (!(resolution_mm > 0.0)) throw std::invalid_argument("drop zone resolution must be positive");
  if (frames < 1) throw std::invalid_argument("drop zone needs at least one frame");
  if (!(noise_sigma_mm >= 0.0)) throw std::invalid_argument("noise sigma must be nonnegative");
  if (entry_min < 0 || entry_max < entry_min) throw std::invalid_argument("entry frame range is invalid");
  if (traverse_frames < 1) throw std::invalid_argument("traverse_frames must be positive");
  if (color_noise < 0) throw std::invalid_argument("color_noise must be nonnegative");
  if (roi_border < 0 || 2 * roi_border >= std::min(width, height)) {
    throw std::invalid_argument("roi_border leaves no region of interest");
  }
}

FrameStack synthesize_dropzone(const GraspOutcome& outcome, const DropZoneConfig& cfg, Rng& rng,
                               DropZoneTruth* truth) {
  cfg.validate();
  const double res = cfg.resolution_mm;
  FrameStack stack;
  stack.roi = default_roi(cfg.width, cfg.height, cfg.roi_border);

  // Lay the silhouettes out in lanes across the motion, then in columns.
  struct Placed {
    int object;
    int x, y;  // group offset of the sprite origin
    Grid<std::uint8_t> sprite;
  };
  std::vector<Placed> placed;
  const int lane_top = stack.roi.y0 + 2;
  const int lane_bottom = stack.roi.y1 - 2;
  int col_x = 0;
  int col_w = 0;
  int y = lane_top;
  for (std::size_t i = 0; i < outcome.picked.size(); ++i) {
    SimObject o = outcome.picked[i];
    o.pose.yaw = uniform(rng, 0.0, M_PI);
    const auto b0 = o.bounds();
    const int sw = static_cast<int>(std::ceil((b0[2] - b0[0]) / res)) + 1;
    const int sh = static_cast<int>(std::ceil((b0[3] - b0[1]) / res)) + 1;
    o.pose.x = 0.5 * sw * res;
    o.pose.y = 0.5 * sh * res;
    Grid<std::uint8_t> sprite(sw, sh, 0);
    for_each_covered_cell(o, res, sw, sh, [&](int x, int yy) { sprite(x, yy) = 1; });
    if (y + sh > lane_bottom && y > lane_top) {
      col_x += col_w + 4;
      col_w = 0;
      y = lane_top;
    }
    placed.push_back({static_cast<int>(i), col_x, y, std::move(sprite)});
    col_w = std::max(col_w, sw);
    y += sh + 4;
  }
  const int group_w = placed.empty() ? 0 : col_x + col_w;
  const int group_top = lane_top;
  int group_h = 0;
  for (const auto& p : placed) group_h = std::max(group_h, p.y + p.sprite.height() - group_top);

  // Composite: later objects cover earlier ones where they overlap.
  Grid<int> owner(std::max(group_w, 1), std::max(group_h, 1), -1);
  for (const auto& p : placed) {
    for (int sy = 0; sy < p.sprite.height(); ++sy) {
      for (int sx = 0; sx < p.sprite.width(); ++sx) {
        const int gx = p.x + sx;
        const int gy = p.y - group_top + sy;
        if (p.sprite(sx, sy) && owner.contains(gx, gy)) owner(gx, gy) = p.object;
      }
    }
  }

  // Integer speed: each pixel is covered for at most 8 frames (below the
  // background percentile) and the group stays inside the roi for at least
  // 10 frames (a full min-filter window).
  const int roi_w = stack.roi.x1 - stack.roi.x0;
  int speed = std::max(1, (cfg.width + group_w + cfg.traverse_frames - 1) / cfg.traverse_frames);
  const int lo = std::max(1, (group_w + 7) / 8);
  const int hi = (roi_w - group_w) / 9;
  speed = lo <= hi ? std::clamp(speed, lo, hi) : lo;
  const auto entry = static_cast<int>(uniform_int(rng, cfg.entry_min, cfg.entry_max));

  if (truth) {
    *truth = DropZoneTruth{};
    truth->entry_frame = placed.empty() ? -1 : entry;
    truth->speed_px = placed.empty() ? 0 : speed;
    for (int gy = 0; gy < owner.height(); ++gy) {
      for (int gx = 0; gx < owner.width(); ++gx) {
        const int k = owner(gx, gy);
        if (k < 0) continue;
        const int fy = group_top + gy;
        if (fy >= stack.roi.y0 && fy < stack.roi.y1) {
          ++truth->counts.counts[static_cast<int>(outcome.picked[k].cls)];
        }
      }
    }
  }

  const auto bg = static_cast<float>(cfg.background_depth_mm);
  const int cn = cfg.color_noise;
  stack.frames.reserve(cfg.frames);
  for (int t = 0; t < cfg.frames; ++t) {
    Frame f{Heightmap(cfg.width, cfg.height, res, bg), RgbMap(cfg.width, cfg.height, kBeltGray)};
    if (!placed.empty() && t >= entry) {
      const int gx0 = -group_w + speed * (t - entry);
      for (int gy = 0; gy < owner.height(); ++gy) {
        const int fy = group_top + gy;
        if (fy < 0 || fy >= cfg.height) continue;
        for (int gx = 0; gx < owner.width(); ++gx) {
          const int fx = gx0 + gx;
          const int k = owner(gx, gy);
          if (k < 0 || fx < 0 || fx >= cfg.width) continue;
          const SimObject& o = outcome.picked[k];
          f.depth(fx, fy) = bg - static_cast<float>(o.thickness);
          Rgb c = o.color;
          if (cn > 0) {
            c.r = clamp_channel(c.r + static_cast<int>(uniform_int(rng, -cn, cn)));
            c.g = clamp_channel(c.g + static_cast<int>(uniform_int(rng, -cn, cn)));
            c.b = clamp_channel(c.b + static_cast<int>(uniform_int(rng, -cn, cn)));
          }
          f.rgb(fx, fy) = c;
        }
      }
    }
    if (cfg.noise_sigma_mm > 0.0) {
      for (float& d : f.depth.values()) {
        d += static_cast<float>(cfg.noise_sigma_mm * standard_normal(rng));
      }
    }
    stack.frames.push_back(std::move(f));
  }
  return stack;
}

}  // namespace pilesort
