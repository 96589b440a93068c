#include "pilesort/color.hpp"

#include <algorithm>
#include <cmath>

namespace pilesort {

std::string_view class_name(ColorClass c) {
  switch (c) {
    case ColorClass::Red: return "red";
    case ColorClass::Yellow: return "yellow";
    case ColorClass::BlueGreen: return "bluegreen";
    case ColorClass::Unknown: return "unknown";
  }
  return "unknown";
}

std::optional<ColorClass> parse_class(std::string_view name) {
  for (int i = 0; i < kNumColorBins; ++i) {
    const auto c = static_cast<ColorClass>(i);
    if (class_name(c) == name) return c;
  }
  return std::nullopt;
}

Hsv to_hsv(Rgb c) {
  const double r = c.r / 255.0;
  const double g = c.g / 255.0;
  const double b = c.b / 255.0;
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;

  Hsv out;
  out.v = mx;
  out.s = mx > 0.0 ? delta / mx : 0.0;
  if (delta <= 0.0) return out;

  double h = 0.0;
  if (mx == r) {
    h = 60.0 * std::fmod((g - b) / delta, 6.0);
  } else if (mx == g) {
    h = 60.0 * ((b - r) / delta + 2.0);
  } else {
    h = 60.0 * ((r - g) / delta + 4.0);
  }
  if (h < 0.0) h += 360.0;
  if (h >= 360.0) h -= 360.0;
  out.h = h;
  return out;
}

bool HsvBox::contains(const Hsv& c) const {
  if (c.s < min_s || c.v < min_v) return false;
  return std::any_of(hue_ranges.begin(), hue_ranges.end(), [&](const auto& r) {
    return c.h >= r[0] && c.h <= r[1];
  });
}

std::vector<HsvBox> default_hsv_boxes() {
  return {
      {ColorClass::Red, {{0.0, 20.0}, {340.0, 360.0}}, 0.35, 0.25},
      {ColorClass::Yellow, {{40.0, 80.0}}, 0.35, 0.25},
      {ColorClass::BlueGreen, {{150.0, 260.0}}, 0.35, 0.25},
  };
}

Rgb palette_color(ColorClass c) {
  switch (c) {
    case ColorClass::Red: return {200, 35, 35};
    case ColorClass::Yellow: return {220, 195, 40};
    case ColorClass::BlueGreen: return {35, 150, 165};
    case ColorClass::Unknown: return kBeltGray;
  }
  return kBeltGray;
}

ColorClass classify(Rgb c, const std::vector<HsvBox>& boxes) {
  const Hsv hsv = to_hsv(c);
  for (const auto& box : boxes) {
    if (box.contains(hsv)) return box.cls;
  }
  return ColorClass::Unknown;
}

}  // namespace pilesort
