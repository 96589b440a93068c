#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string_view>
#include <vector>

#include "pilesort/grasp.hpp"
#include "pilesort/grid.hpp"

namespace pilesort {

enum class FeatureLayout { Success, Color };
enum class Anchor { Left, Center, Right };

std::string_view layout_name(FeatureLayout layout);

// Slices are kSliceLength px along the closing axis by kSliceWidth px across.
inline constexpr int kSliceLength = 80;
inline constexpr int kSliceWidth = 39;
inline constexpr int kScalarCount = 6;

// Success layout: 3 anchors x 5 channels (height - z, r, g, b, unknown),
// each pooled by 4 to 20 x 10; then the scalars.
inline constexpr int kSuccessPool = 4;
inline constexpr int kSuccessCells = (kSliceLength / kSuccessPool) *
                                     ((kSliceWidth + kSuccessPool - 1) / kSuccessPool);
inline constexpr int kSuccessChannels = 5;
inline constexpr int kSuccessLength = 3 * kSuccessChannels * kSuccessCells + kScalarCount;

// Color layout: center anchor, 4 channels (height - z, r, g, b) pooled by 8
// to 10 x 5; then the scalars.
inline constexpr int kColorPool = 8;
inline constexpr int kColorCells = (kSliceLength / kColorPool) *
                                   ((kSliceWidth + kColorPool - 1) / kColorPool);
inline constexpr int kColorChannels = 4;
inline constexpr int kColorLength = kColorChannels * kColorCells + kScalarCount;

static_assert(kSuccessLength == 3006);
static_assert(kColorLength == 206);

/// Scalar block order, appended after the image features of both layouts.
enum ScalarFeature : int {
  kInnerSpan = 0,
  kExtraOpening = 1,
  kGraspZ = 2,
  kCenterX = 3,
  kCenterY = 4,
  kAngle = 5,
};

struct FeatureVector {
  FeatureLayout layout = FeatureLayout::Success;
  std::vector<float> values;
};

struct FeatureConfig {
  /// Places the left/right slice anchors at the finger centers.
  double finger_thickness_mm = 15.0;
};

/// Anchor position along the closing axis, mm from the grasp center.
double anchor_offset_mm(const GraspRectangle& g, Anchor anchor,
                        const FeatureConfig& cfg);

/// The 80 x 39 window in the grasp frame (x along the closing axis, y across)
/// centered at `anchor`, sampled nearest-neighbor. Cells outside the map
/// read `fill`.
template <class T>
Grid<T> extract_slice(const Grid<T>& map, double resolution_mm,
                      const GraspRectangle& g, Anchor anchor, T fill,
                      const FeatureConfig& cfg = {}) {
  Grid<T> out(kSliceLength, kSliceWidth, fill);
  const double ca = std::cos(g.angle);
  const double sa = std::sin(g.angle);
  const double along = anchor_offset_mm(g, anchor, cfg) / resolution_mm;
  const double cx = g.center_x / resolution_mm + along * ca;
  const double cy = g.center_y / resolution_mm + along * sa;
  for (int b = 0; b < kSliceWidth; ++b) {
    const double v = b + 0.5 - 0.5 * kSliceWidth;
    for (int a = 0; a < kSliceLength; ++a) {
      const double u = a + 0.5 - 0.5 * kSliceLength;
      const double px = cx + u * ca - v * sa;
      const double py = cy + u * sa + v * ca;
      out(a, b) = map.at_or(static_cast<int>(std::floor(px)),
                            static_cast<int>(std::floor(py)), fill);
    }
  }
  return out;
}

/// Pooled window sums for one grasp frame (center, angle, inner span). Every
/// opening variant of a closed grasp shares these, so they are computed once
/// per closed grasp and expanded per variant.
class GraspSlices {
 public:
  static GraspSlices compute(const GraspRectangle& g, const Heightmap& hm,
                             const RgbMap& rgb, const UnknownMask* unknown,
                             const FeatureConfig& cfg = {});

  /// `g` must share center, angle and inner span with the computing grasp.
  void success_features(const GraspRectangle& g, std::span<float> out) const;
  void color_features(const GraspRectangle& g, std::span<float> out) const;

  FeatureVector success_vector(const GraspRectangle& g) const;
  FeatureVector color_vector(const GraspRectangle& g) const;

 private:
  // [anchor][channel][cell] sums over each pool-4 cell, plus per-cell counts.
  std::vector<double> sums_;
  std::array<int, kSuccessCells> counts_{};
};

FeatureVector success_features(const GraspRectangle& g, const Heightmap& hm,
                               const RgbMap& rgb, const UnknownMask& unknown,
                               const FeatureConfig& cfg = {});
FeatureVector color_features(const GraspRectangle& g, const Heightmap& hm,
                             const RgbMap& rgb, const FeatureConfig& cfg = {});

}  // namespace pilesort
