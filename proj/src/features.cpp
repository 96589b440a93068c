#include "pilesort/features.hpp"

#include <array>
#include <cstdint>
#include <stdexcept>

namespace pilesort {

namespace {

constexpr int kCellsU = kSliceLength / kSuccessPool;                     // 20
constexpr int kCellsV = (kSliceWidth + kSuccessPool - 1) / kSuccessPool;  // 10
constexpr int kColorCellsU = kSliceLength / kColorPool;                  // 10
constexpr int kColorCellsV = (kSliceWidth + kColorPool - 1) / kColorPool;  // 5

std::size_t sum_index(int anchor, int channel, int cell) {
  return (static_cast<std::size_t>(anchor) * kSuccessChannels + channel) * kSuccessCells + cell;
}

// floor() without the libm call; exact for values well inside int range.
int fast_floor(double x) {
  const int i = static_cast<int>(x);
  return x < i ? i - 1 : i;
}

void write_scalars(const GraspRectangle& g, std::span<float> out) {
  out[kInnerSpan] = static_cast<float>(g.inner_span);
  out[kExtraOpening] = static_cast<float>(g.extra_opening);
  out[kGraspZ] = static_cast<float>(g.z);
  out[kCenterX] = static_cast<float>(g.center_x);
  out[kCenterY] = static_cast<float>(g.center_y);
  out[kAngle] = static_cast<float>(g.angle);
}

}  // namespace

std::string_view layout_name(FeatureLayout layout) {
  return layout == FeatureLayout::Success ? "success" : "color";
}

double anchor_offset_mm(const GraspRectangle& g, Anchor anchor,
                        const FeatureConfig& cfg) {
  const double finger_center = 0.5 * g.inner_span + 0.5 * cfg.finger_thickness_mm;
  switch (anchor) {
    case Anchor::Left: return -finger_center;
    case Anchor::Center: return 0.0;
    case Anchor::Right: return finger_center;
  }
  return 0.0;
}

GraspSlices GraspSlices::compute(const GraspRectangle& g, const Heightmap& hm,
                                 const RgbMap& rgb, const UnknownMask* unknown,
                                 const FeatureConfig& cfg) {
  if (!hm.same_shape(rgb) || (unknown && !hm.same_shape(*unknown))) {
    throw std::invalid_argument("feature maps must share dimensions");
  }
  GraspSlices s;
  s.sums_.assign(static_cast<std::size_t>(3) * kSuccessChannels * kSuccessCells, 0.0);
  for (int b = 0; b < kSliceWidth; ++b) {
    for (int a = 0; a < kSliceLength; ++a) {
      ++s.counts_[(b / kSuccessPool) * kCellsU + a / kSuccessPool];
    }
  }

  const double res = hm.resolution_mm();
  const double ca = std::cos(g.angle);
  const double sa = std::sin(g.angle);
  const int w = hm.width();
  const int h = hm.height();
  constexpr Anchor anchors[] = {Anchor::Left, Anchor::Center, Anchor::Right};
  for (int ai = 0; ai < 3; ++ai) {
    const double along = anchor_offset_mm(g, anchors[ai], cfg) / res;
    const double cx = g.center_x / res + along * ca;
    const double cy = g.center_y / res + along * sa;
    std::array<double, kSuccessCells> hsum{};
    std::array<std::int32_t, kSuccessCells> rsum{}, gsum{}, bsum{}, usum{}, outside{};
    for (int b = 0; b < kSliceWidth; ++b) {
      const double v = b + 0.5 - 0.5 * kSliceWidth;
      const int row_cell = (b / kSuccessPool) * kCellsU;
      for (int a = 0; a < kSliceLength; ++a) {
        // Same arithmetic as extract_slice so both agree cell for cell.
        const double u = a + 0.5 - 0.5 * kSliceLength;
        const double px = cx + u * ca - v * sa;
        const double py = cy + u * sa + v * ca;
        const int cell = row_cell + a / kSuccessPool;
        const int ix = fast_floor(px);
        const int iy = fast_floor(py);
        if (ix < 0 || iy < 0 || ix >= w || iy >= h) {
          ++outside[cell];
          continue;
        }
        hsum[cell] += hm(ix, iy);
        const Rgb c = rgb(ix, iy);
        rsum[cell] += c.r;
        gsum[cell] += c.g;
        bsum[cell] += c.b;
        if (unknown && (*unknown)(ix, iy)) ++usum[cell];
      }
    }
    // Out-of-map samples read belt level, belt gray and known.
    double* hs = &s.sums_[sum_index(ai, 0, 0)];
    double* rs = &s.sums_[sum_index(ai, 1, 0)];
    double* gs = &s.sums_[sum_index(ai, 2, 0)];
    double* bs = &s.sums_[sum_index(ai, 3, 0)];
    double* us = &s.sums_[sum_index(ai, 4, 0)];
    for (int cell = 0; cell < kSuccessCells; ++cell) {
      hs[cell] = hsum[cell];
      rs[cell] = (rsum[cell] + outside[cell] * kBeltGray.r) / 255.0;
      gs[cell] = (gsum[cell] + outside[cell] * kBeltGray.g) / 255.0;
      bs[cell] = (bsum[cell] + outside[cell] * kBeltGray.b) / 255.0;
      us[cell] = usum[cell];
    }
  }
  return s;
}

void GraspSlices::success_features(const GraspRectangle& g, std::span<float> out) const {
  if (out.size() != static_cast<std::size_t>(kSuccessLength)) {
    throw std::invalid_argument("success feature buffer has wrong length");
  }
  std::size_t k = 0;
  for (int ai = 0; ai < 3; ++ai) {
    for (int ch = 0; ch < kSuccessChannels; ++ch) {
      const double* sums = &sums_[sum_index(ai, ch, 0)];
      for (int cell = 0; cell < kSuccessCells; ++cell) {
        const double n = counts_[cell];
        // Subtracting n*z from the sum keeps the result exactly invariant to
        // a common offset of heights and z.
        const double v = ch == 0 ? (sums[cell] - n * g.z) / n : sums[cell] / n;
        out[k++] = static_cast<float>(v);
      }
    }
  }
  write_scalars(g, out.subspan(k));
}

void GraspSlices::color_features(const GraspRectangle& g, std::span<float> out) const {
  if (out.size() != static_cast<std::size_t>(kColorLength)) {
    throw std::invalid_argument("color feature buffer has wrong length");
  }
  // Each pool-8 cell is a 2 x 2 block of pool-4 cells (the last row block
  // covers the remaining 7 source rows).
  std::size_t k = 0;
  for (int ch = 0; ch < kColorChannels; ++ch) {
    const double* sums = &sums_[sum_index(1, ch, 0)];
    for (int cv = 0; cv < kColorCellsV; ++cv) {
      for (int cu = 0; cu < kColorCellsU; ++cu) {
        double total = 0.0;
        double n = 0.0;
        for (int dv = 0; dv < 2; ++dv) {
          const int rv = 2 * cv + dv;
          if (rv >= kCellsV) continue;
          for (int du = 0; du < 2; ++du) {
            const int cell = rv * kCellsU + 2 * cu + du;
            total += sums[cell];
            n += counts_[cell];
          }
        }
        const double v = ch == 0 ? (total - n * g.z) / n : total / n;
        out[k++] = static_cast<float>(v);
      }
    }
  }
  write_scalars(g, out.subspan(k));
}

FeatureVector GraspSlices::success_vector(const GraspRectangle& g) const {
  FeatureVector fv{FeatureLayout::Success, std::vector<float>(kSuccessLength)};
  success_features(g, fv.values);
  return fv;
}

FeatureVector GraspSlices::color_vector(const GraspRectangle& g) const {
  FeatureVector fv{FeatureLayout::Color, std::vector<float>(kColorLength)};
  color_features(g, fv.values);
  return fv;
}

FeatureVector success_features(const GraspRectangle& g, const Heightmap& hm,
                               const RgbMap& rgb, const UnknownMask& unknown,
                               const FeatureConfig& cfg) {
  return GraspSlices::compute(g, hm, rgb, &unknown, cfg).success_vector(g);
}

FeatureVector color_features(const GraspRectangle& g, const Heightmap& hm,
                             const RgbMap& rgb, const FeatureConfig& cfg) {
  return GraspSlices::compute(g, hm, rgb, nullptr, cfg).color_vector(g);
}

}  // namespace pilesort
