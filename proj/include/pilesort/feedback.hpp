#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "pilesort/color.hpp"
#include "pilesort/grid.hpp"

namespace pilesort {

/// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct Roi {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;
  int area() const { return (x1 - x0) * (y1 - y0); }
  bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
  friend bool operator==(const Roi&, const Roi&) = default;
};

/// Full frame minus `border` pixels on every side.
Roi default_roi(int width, int height, int border = 10);

/// One drop-zone camera frame. Depth is distance from the camera in mm, so
/// objects are closer (smaller) than the belt.
struct Frame {
  Heightmap depth;
  RgbMap rgb;
};

struct FrameStack {
  std::vector<Frame> frames;
  Roi roi;
  /// Throws std::invalid_argument on empty stacks, mismatched frame sizes or
  /// an roi outside the frame.
  void validate() const;
};

struct ColorCounts {
  std::array<std::int64_t, kNumColorBins> counts{};
  std::int64_t total() const { return counts[0] + counts[1] + counts[2] + counts[3]; }
  std::int64_t operator[](ColorClass c) const { return counts[static_cast<int>(c)]; }
  friend bool operator==(const ColorCounts&, const ColorCounts&) = default;
};

struct FeedbackConfig {
  double background_percentile = 0.2;
  /// Foreground pixels are at least this much closer than the background.
  double foreground_step_mm = 6.0;
  int min_filter_window = 9;
  /// Volume per pixel per mm; any positive constant picks the same frame.
  double pixel_area = 1.0;
  /// 3 x 3 morphological opening of each foreground mask; removes isolated
  /// sensor-noise pixels while keeping solid silhouettes.
  bool open_mask = true;
  /// Filtered volumes at or below this count as an empty drop zone.
  double min_volume = 0.0;
  void validate() const;
};

/// Per pixel, the nearest-rank percentile (rank ceil(q * n), 1-based,
/// ascending) of its depth over time.
Heightmap background_level(std::span<const Frame> frames, double percentile = 0.2);
Heightmap background_level(std::span<const Heightmap> depths, double percentile = 0.2);

/// Pixels at least foreground_step_mm closer than the background, optionally
/// cleaned by a 3 x 3 opening.
UnknownMask foreground_mask(const Heightmap& depth, const Heightmap& background,
                            const FeedbackConfig& cfg = {});

struct FeedbackTrace {
  ColorCounts counts;
  std::vector<double> volume;    // per frame
  std::vector<double> filtered;  // per frame, -1 where no full window fits
  int best_frame = -1;           // -1 when nothing was seen
};

/// The full pipeline with intermediate values.
FeedbackTrace analyze(const FrameStack& stack, const std::vector<HsvBox>& boxes,
                      const FeedbackConfig& cfg = {});

/// Per-class pixel counts of the foreground in the frame with the largest
/// time-min-filtered foreground volume.
ColorCounts result(const FrameStack& stack, const std::vector<HsvBox>& boxes,
                   const FeedbackConfig& cfg = {});

/// Reads frame_0000.hmap / frame_0000.ppm, frame_0001..., until the first
/// missing index. The roi defaults to default_roi of the frame size.
FrameStack load_frame_dir(const std::filesystem::path& dir);
void save_frame_dir(const std::filesystem::path& dir, const FrameStack& stack);

}  // namespace pilesort
