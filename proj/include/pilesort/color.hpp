#pragma once

#include <array>
#include <optional>
#include <string_view>
#include <vector>

#include "pilesort/grid.hpp"

namespace pilesort {

/// Sorting classes plus the unknown pseudo-class. The numeric values index
/// color-count vectors everywhere in the library.
enum class ColorClass : int { Red = 0, Yellow = 1, BlueGreen = 2, Unknown = 3 };

inline constexpr int kNumMaterialClasses = 3;
inline constexpr int kNumColorBins = 4;

using ColorVector = std::array<double, kNumColorBins>;

std::string_view class_name(ColorClass c);
std::optional<ColorClass> parse_class(std::string_view name);

struct Hsv {
  double h = 0.0;  // degrees in [0, 360)
  double s = 0.0;  // [0, 1]
  double v = 0.0;  // [0, 1]
};

Hsv to_hsv(Rgb c);

/// Axis-aligned box in HSV space. Hue ranges are given as one or more
/// [lo, hi] degree intervals so red can wrap around 0.
struct HsvBox {
  ColorClass cls = ColorClass::Unknown;
  std::vector<std::array<double, 2>> hue_ranges;
  double min_s = 0.0;
  double min_v = 0.0;

  bool contains(const Hsv& c) const;
};

std::vector<HsvBox> default_hsv_boxes();

/// Nominal surface color of each material class (unknown maps to belt gray).
Rgb palette_color(ColorClass c);

/// First matching box wins; no match means Unknown.
ColorClass classify(Rgb c, const std::vector<HsvBox>& boxes);

}  // namespace pilesort
