#pragma once

#include <array>
#include <vector>

#include "pilesort/feedback.hpp"
#include "pilesort/grasp.hpp"
#include "pilesort/rng.hpp"
#include "pilesort/scene.hpp"

namespace pilesort {

/// True when the two footprints share interior area.
bool footprints_overlap(const SimObject& a, const SimObject& b);

/// Oriented rectangle in belt millimetres: `half_length` along
/// (cos angle, sin angle), `half_width` across.
struct OrientedRect {
  double cx = 0.0;
  double cy = 0.0;
  double angle = 0.0;
  double half_length = 0.0;
  double half_width = 0.0;
};
bool footprint_intersects(const SimObject& obj, const OrientedRect& rect);

/// Highest top among objects whose footprints overlap `obj` (0 on bare belt).
double support_height(const Scene& scene, const SimObject& obj);

/// Rests `obj` on whatever lies beneath its footprint and appends it. A
/// negative id is replaced by the scene's next id.
void drop_object(Scene& scene, SimObject obj);

/// Recomputes every rest height bottom-up, so objects whose support was
/// removed fall down. Relative stacking order is kept.
void settle(Scene& scene);

struct PileConfig {
  int min_objects = 6;
  int max_objects = 10;
  /// Drop region as fractions of the belt [x0, y0, x1, y1].
  std::array<double, 4> region{0.3, 0.25, 0.7, 0.75};
  double min_size_mm = 40.0;
  double max_size_mm = 100.0;
  double min_thickness_mm = 15.0;
  double max_thickness_mm = 50.0;
  double disc_fraction = 0.3;
  /// g/cm^3; mass = density x volume.
  double min_density = 0.2;
  double max_density = 1.2;
  /// Relative frequency of red, yellow and blue-green objects.
  std::array<double, kNumMaterialClasses> class_mix{0.5, 0.3, 0.2};
  /// Per-channel uniform jitter around the class palette color.
  int color_jitter = 15;
  void validate() const;
};

/// Draws one object (pose x, y and yaw inside the drop region).
SimObject random_object(const PileConfig& cfg, double belt_w, double belt_h, Rng& rng);

/// Drops a random number of objects one by one onto `scene`.
void add_pile(Scene& scene, const PileConfig& cfg, Rng& rng);
Scene generate_pile(const PileConfig& cfg, Rng& rng, double belt_w = 1000.0,
                    double belt_h = 750.0);

struct GraspSimConfig {
  double base_slip = 0.1;
  double mass_slip_per_kg = 0.05;
  double max_slip = 0.9;
  /// Contact shallower than this adds up to `shallow_slip`.
  double shallow_contact_mm = 15.0;
  double shallow_slip = 0.5;
  /// Added when the closing axis misses the object and only the finger edge
  /// holds it.
  double off_axis_slip = 0.5;
  /// Objects knocked by a finger or left without support move this far.
  double disturb_mm = 20.0;
  bool slip_enabled = true;
  /// Finger footprints shrink by this much per side before contact tests,
  /// and objects may overhang the opening by as much. Covers the planner's
  /// nearest-neighbor resampling of rotated heightmaps.
  double contact_tolerance_mm = 2.5;
  void validate() const;
};

struct GraspOutcome {
  std::vector<SimObject> picked;   // reached the drop zone
  std::vector<SimObject> slipped;  // grasped but lost before release
  double gripper_closed_to = 0.0;  // 0 reads as a sensor failure
  bool success_before_release = false;
  bool collided = false;
  bool out_of_bounds = false;
};

/// Fingers open to inner_span + extra_opening, descend to z (raised by the
/// opening curve's lift while open) and close. Objects between the fingers
/// with tops above z are grasped if they fit the opening; each may slip.
/// A finger landing on material ends the attempt. Removed objects leave the
/// scene and the rest settles.
GraspOutcome execute_grasp(Scene& scene, const GraspRectangle& grasp,
                           const GripperGeometry& gripper, Rng& rng,
                           const GraspSimConfig& cfg = {});

struct DropZoneConfig {
  int width = 240;
  int height = 200;
  double resolution_mm = 2.5;
  int frames = 50;
  double background_depth_mm = 1200.0;
  double noise_sigma_mm = 1.5;
  int entry_min = 5;
  int entry_max = 15;
  int traverse_frames = 25;
  int color_noise = 3;
  int roi_border = 10;
  void validate() const;
};

/// Ground truth of a synthesized stack: visible silhouette pixels per class.
struct DropZoneTruth {
  ColorCounts counts;
  int entry_frame = -1;
  int speed_px = 0;
};

/// Drop-zone camera frames: picked objects cross the view together as
/// top-down silhouettes on a noisy flat background.
FrameStack synthesize_dropzone(const GraspOutcome& outcome, const DropZoneConfig& cfg,
                               Rng& rng, DropZoneTruth* truth = nullptr);

}  // namespace pilesort
