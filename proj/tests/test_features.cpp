#include <doctest.h>

#include "pilesort/features.hpp"
#include "pilesort/rng.hpp"

using namespace pilesort;

namespace {

GraspRectangle grasp_at(double x, double y, double angle, double span, double z) {
  GraspRectangle g;
  g.center_x = x;
  g.center_y = y;
  g.angle = angle;
  g.inner_span = span;
  g.finger_width = 45.0;
  g.z = z;
  return g;
}

Heightmap random_map(Rng& rng, int w, int h) {
  Heightmap m(w, h, 5.0);
  for (auto& v : m.values()) v = static_cast<float>(uniform(rng, 0.0, 80.0));
  return m;
}

RgbMap random_rgb(Rng& rng, int w, int h) {
  RgbMap m(w, h);
  for (auto& c : m.values()) {
    c = {static_cast<std::uint8_t>(uniform_int(rng, 0, 255)),
         static_cast<std::uint8_t>(uniform_int(rng, 0, 255)),
         static_cast<std::uint8_t>(uniform_int(rng, 0, 255))};
  }
  return m;
}

}  // namespace

TEST_CASE("feature vector lengths") {
  Heightmap m(100, 100, 5.0);
  RgbMap rgb(100, 100, kBeltGray);
  UnknownMask u(100, 100, 0);
  const auto g = grasp_at(250, 250, 0.4, 60, 0);
  CHECK(success_features(g, m, rgb, u).values.size() == 3006);
  CHECK(color_features(g, m, rgb).values.size() == 206);
}

TEST_CASE("slices: flat map gives a zero height slice") {
  Heightmap m(100, 100, 5.0);
  const auto s = extract_slice<float>(m, 5.0, grasp_at(250, 250, 1.1, 40, 0), Anchor::Center, 0.0f);
  for (float v : s.values()) CHECK(v == 0.0f);
}

TEST_CASE("slices: angle 0 at the map center is the axis-aligned crop") {
  Rng rng(1);
  const Heightmap m = random_map(rng, 120, 80);
  // Center at a cell corner so samples land on cell centers.
  const auto g = grasp_at(60 * 5.0, 40 * 5.0, 0.0, 40, 0);
  const auto s = extract_slice<float>(m, 5.0, g, Anchor::Center, -1.0f);
  for (int b = 0; b < kSliceWidth; ++b) {
    for (int a = 0; a < kSliceLength; ++a) {
      const int x = 60 - kSliceLength / 2 + a;
      const int y = static_cast<int>(std::floor(40 + b + 0.5 - 0.5 * kSliceWidth));
      REQUIRE(s(a, b) == m(x, y));
    }
  }
}

TEST_CASE("slices: left and right anchors mirror on a symmetric scene") {
  Rng rng(2);
  Heightmap m(120, 80, 5.0);
  // Symmetric about the vertical line x = 60 cells.
  for (int y = 0; y < 80; ++y) {
    for (int x = 0; x < 60; ++x) {
      const float v = static_cast<float>(uniform(rng, 0.0, 50.0));
      m(x, y) = v;
      m(119 - x, y) = v;
    }
  }
  // Anchors land on whole cells, so samples hit cell centers.
  const auto g = grasp_at(60 * 5.0, 40 * 5.0, 0.0, 45, 0);
  const auto left = extract_slice<float>(m, 5.0, g, Anchor::Left, 0.0f);
  const auto right = extract_slice<float>(m, 5.0, g, Anchor::Right, 0.0f);
  for (int b = 0; b < kSliceWidth; ++b) {
    for (int a = 0; a < kSliceLength; ++a) {
      REQUIRE(left(a, b) == right(kSliceLength - 1 - a, b));
    }
  }
}

TEST_CASE("success features: zero on a flat map and invariant to a common lift") {
  Rng rng(3);
  Heightmap flat(100, 100, 5.0);
  RgbMap rgb = random_rgb(rng, 100, 100);
  UnknownMask u(100, 100, 0);
  const auto g0 = grasp_at(240, 260, 0.7, 55, 0);
  const auto f0 = success_features(g0, flat, rgb, u);
  const int image = kSuccessLength - kScalarCount;
  for (int a = 0; a < 3; ++a) {
    for (int c = 0; c < kSuccessCells; ++c) {
      REQUIRE(f0.values[(a * kSuccessChannels) * kSuccessCells + c] == 0.0f);
    }
  }

  const Heightmap m = random_map(rng, 100, 100);
  Heightmap lifted = m;
  for (auto& v : lifted.values()) v += 50.0f;
  // Lift everything including the out-of-map fill by keeping the grasp inside.
  const auto g = grasp_at(250, 250, 0.0, 40, 10);
  auto g_lifted = g;
  g_lifted.z += 50.0;
  const auto a = success_features(g, m, rgb, u);
  const auto b = success_features(g_lifted, lifted, rgb, u);
  for (int i = 0; i < image; ++i) {
    const bool height_channel = (i / kSuccessCells) % kSuccessChannels == 0;
    if (height_channel) {
      REQUIRE(a.values[i] == doctest::Approx(b.values[i]).epsilon(1e-5));
    } else {
      REQUIRE(a.values[i] == b.values[i]);
    }
  }
  CHECK(b.values[image + kGraspZ] == 60.0f);
}

TEST_CASE("color features: uniform red scene gives equal red entries") {
  Heightmap m(120, 120, 5.0);
  RgbMap rgb(120, 120, Rgb{200, 30, 30});
  const auto f = color_features(grasp_at(300, 300, 0.3, 40, 0), m, rgb);
  const int red0 = kColorCells;  // channel 1
  for (int c = 0; c < kColorCells; ++c) {
    CHECK(f.values[red0 + c] == doctest::Approx(200.0 / 255.0));
    CHECK(f.values[c] == 0.0f);
  }
}

TEST_CASE("GraspSlices reproduce the direct feature computation") {
  Rng rng(4);
  const Heightmap m = random_map(rng, 90, 70);
  const RgbMap rgb = random_rgb(rng, 90, 70);
  UnknownMask u(90, 70, 0);
  for (auto& v : u.values()) v = uniform01(rng) < 0.2;
  for (int t = 0; t < 20; ++t) {
    auto g = grasp_at(uniform(rng, 0, 450), uniform(rng, 0, 350), uniform(rng, 0, M_PI),
                      uniform(rng, 20, 150), uniform(rng, 0, 40));
    const auto slices = GraspSlices::compute(g, m, rgb, &u);
    g.extra_opening = 15.0;
    const auto direct_s = success_features(g, m, rgb, u);
    const auto direct_c = color_features(g, m, rgb);
    const auto via_s = slices.success_vector(g);
    const auto via_c = slices.color_vector(g);
    REQUIRE(via_s.values.size() == direct_s.values.size());
    for (std::size_t i = 0; i < via_s.values.size(); ++i) {
      REQUIRE(via_s.values[i] == doctest::Approx(direct_s.values[i]).epsilon(1e-5));
    }
    for (std::size_t i = 0; i < via_c.values.size(); ++i) {
      REQUIRE(via_c.values[i] == doctest::Approx(direct_c.values[i]).epsilon(1e-5));
    }
    CHECK(via_s.values[kSuccessLength - kScalarCount + kExtraOpening] == 15.0f);
  }
}
