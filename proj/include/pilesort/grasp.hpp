#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pilesort/grid.hpp"
#include "pilesort/rng.hpp"

namespace pilesort {

struct OpeningCurvePoint {
  double opening = 0.0;  // commanded opening, mm
  double offset = 0.0;   // horizontal inner-face travel per finger, mm
  double lift = 0.0;     // fingertip rise, mm
};

/// Piecewise-linear, monotone map from commanded opening to per-finger
/// horizontal travel and fingertip lift, both zero at the minimum opening.
/// Queries outside the table clamp to its end points.
class OpeningCurve {
 public:
  OpeningCurve() = default;
  explicit OpeningCurve(std::vector<OpeningCurvePoint> table);

  /// Half the opening beyond `min_opening`, with lift = lift_ratio * offset.
  static OpeningCurve linear(double min_opening, double max_opening,
                             double lift_ratio = 0.15);

  /// (offset, lift) at a commanded opening.
  std::pair<double, double> at(double opening) const;
  double offset(double opening) const { return at(opening).first; }
  double lift(double opening) const { return at(opening).second; }

  const std::vector<OpeningCurvePoint>& table() const { return table_; }

 private:
  std::vector<OpeningCurvePoint> table_;
};

struct GripperGeometry {
  double finger_thickness = 15.0;  // mm, along the closing direction
  double finger_width = 45.0;      // mm, across the closing direction
  double min_opening = 20.0;
  double max_opening = 400.0;
  OpeningCurve opening_curve = OpeningCurve::linear(20.0, 400.0);

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;
};

/// Flat `key = value` text. Keys: finger_thickness, finger_width,
/// min_opening, max_opening, lift_ratio, opening_curve (a list of
/// "opening:offset:lift" triples separated by commas or spaces).
GripperGeometry parse_gripper_config(const std::string& text);
GripperGeometry load_gripper_config(const std::string& path);

/// Oriented grasp hypothesis in heightmap millimetres. The closing axis is
/// (cos angle, sin angle); inner_span is the distance between the fingers'
/// inner faces of the closed grasp.
struct GraspRectangle {
  double center_x = 0.0;
  double center_y = 0.0;
  double angle = 0.0;
  double inner_span = 0.0;
  double finger_width = 0.0;
  double z = 0.0;
  double extra_opening = 0.0;
  double value = 0.0;

  friend bool operator==(const GraspRectangle&, const GraspRectangle&) = default;
};

struct Grasp1D {
  int i0 = 0;
  int i1 = 0;
  float z = 0.0f;
  float v = 0.0f;

  friend bool operator==(const Grasp1D&, const Grasp1D&) = default;
};

/// All (i0, i1, z, v) with d_min <= i1 - i0 <= d_max and h[i] > z for every
/// i0 < i < i1, where z = max(h[i0], h[i1]) and
/// v = h[i0+1] - h[i0] + h[i1-1] - h[i1]. Linear time; results are appended
/// in the order the stack produces them.
void closed_grasps_1d(std::span<const float> h, int d_min, int d_max,
                      std::vector<Grasp1D>& out);
std::vector<Grasp1D> closed_grasps_1d(std::span<const float> h, int d_min,
                                      int d_max);

/// mm -> px with round-half-up, as used for all gripper dimensions.
int mm_to_px(double mm, double resolution_mm);

/// Exhaustive closed-grasp search over `num_angles` directions in [0, pi).
std::vector<GraspRectangle> closed_grasps(const Heightmap& h,
                                          const GripperGeometry& g,
                                          int num_angles = 16);

/// Successive weighted sampling without replacement, weight = value (values
/// <= 0 get 1e-9). Returns everything, in input order, when there are at
/// most n candidates; otherwise returns n candidates in draw order.
std::vector<GraspRectangle> weighted_sample(std::span<const GraspRectangle> cands,
                                            std::size_t n, Rng& rng);

/// Expands each closed grasp into variants with extra openings 0, 1, 2, ...
/// pixels up to max_opening - inner_span. Each finger's swept footprint must
/// clear the grasp height; z is raised to clear it when needed and the
/// variant is kept only while the material between the fingers still rises
/// above the new z. The e = 0 variant is always kept.
std::vector<GraspRectangle> apply_openings(std::span<const GraspRectangle> grasps,
                                           const Heightmap& h,
                                           const GripperGeometry& g);

}  // namespace pilesort
