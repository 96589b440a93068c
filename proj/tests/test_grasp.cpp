#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "oracles.hpp"
#include "pilesort/grasp.hpp"
#include "pilesort/heightmap.hpp"
#include "pilesort/rng.hpp"

using namespace pilesort;

namespace {

std::vector<float> random_row(Rng& rng, int n, int max_h) {
  std::vector<float> h(n);
  for (auto& v : h) v = static_cast<float>(uniform_int(rng, 0, max_h));
  return h;
}

Heightmap box_map(int w, int h, int x0, int y0, int x1, int y1, float height) {
  Heightmap m(w, h, 5.0);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) m(x, y) = height;
  }
  return m;
}

GripperGeometry small_gripper() {
  GripperGeometry g;
  g.finger_thickness = 5.0;
  g.finger_width = 15.0;
  g.min_opening = 5.0;
  g.max_opening = 100.0;
  g.opening_curve = OpeningCurve::linear(5.0, 100.0);
  return g;
}

}  // namespace

TEST_CASE("closed_grasps_1d: flat and monotone rows have no grasps") {
  CHECK(closed_grasps_1d(std::vector<float>{0, 0, 0, 0}, 1, 10).empty());
  CHECK(closed_grasps_1d(std::vector<float>{0, 1, 2, 3}, 1, 10).empty());
}

TEST_CASE("closed_grasps_1d: worked example") {
  const std::vector<float> h{0, 3, 1, 3, 0};
  const auto got = oracle::sorted(closed_grasps_1d(h, 2, 4));
  const std::vector<Grasp1D> want = oracle::sorted({{0, 2, 1, 5}, {2, 4, 1, 5}, {0, 4, 0, 6}});
  CHECK(got == want);
}

TEST_CASE("closed_grasps_1d: span bounds are honored") {
  const std::vector<float> h{0, 3, 1, 3, 0};
  CHECK(closed_grasps_1d(h, 3, 4) == std::vector<Grasp1D>{{0, 4, 0, 6}});
  CHECK(oracle::sorted(closed_grasps_1d(h, 2, 3)) ==
        oracle::sorted({{0, 2, 1, 5}, {2, 4, 1, 5}}));
}

TEST_CASE("closed_grasps_1d: matches the brute-force oracle on random rows") {
  Rng rng(11);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = static_cast<int>(uniform_int(rng, 0, 40));
    const auto h = random_row(rng, n, 15);
    const int d_min = static_cast<int>(uniform_int(rng, 0, 10));
    const int d_max = d_min + static_cast<int>(uniform_int(rng, 0, 40));
    REQUIRE(oracle::sorted(closed_grasps_1d(h, d_min, d_max)) ==
            oracle::sorted(oracle::closed_grasps_1d(h, d_min, d_max)));
  }
}

TEST_CASE("maximum_filter: identities and the worked peak") {
  Heightmap flat(7, 5, 5.0, 3.0f);
  CHECK(maximum_filter(flat, 3, 3) == flat);
  Rng rng(2);
  Heightmap r(9, 6, 5.0);
  for (auto& v : r.values()) v = static_cast<float>(uniform01(rng));
  CHECK(maximum_filter(r, 1, 1) == r);

  Heightmap peak(7, 7, 5.0);
  peak(3, 3) = 100.0f;
  const Heightmap f = maximum_filter(peak, 3, 3);
  for (int y = 0; y < 7; ++y) {
    for (int x = 0; x < 7; ++x) {
      const bool inside = std::abs(x - 3) <= 1 && std::abs(y - 3) <= 1;
      CHECK(f(x, y) == (inside ? 100.0f : 0.0f));
    }
  }
}

TEST_CASE("maximum_filter: matches the naive filter for odd and even kernels") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int w = static_cast<int>(uniform_int(rng, 1, 30));
    const int h = static_cast<int>(uniform_int(rng, 1, 30));
    Heightmap m(w, h, 5.0);
    for (auto& v : m.values()) v = static_cast<float>(uniform_int(rng, 0, 50));
    const int kw = static_cast<int>(uniform_int(rng, 1, 9));
    const int kh = static_cast<int>(uniform_int(rng, 1, 9));
    REQUIRE(maximum_filter(m, kw, kh) == oracle::naive_max_filter(m, kw, kh));
  }
}

TEST_CASE("rotate_heightmap: identity, flat field and centered peak") {
  Rng rng(3);
  Heightmap m(8, 6, 5.0);
  for (auto& v : m.values()) v = static_cast<float>(uniform01(rng));
  CHECK(rotate_heightmap(m, 0.0) == m);

  Heightmap flat(10, 6, 5.0, 7.0f);
  for (double a : {0.3, 1.0, 2.5}) {
    const RotationFrame frame(10, 6, a);
    const Heightmap r = rotate_heightmap(flat, a);
    CHECK(r.width() == frame.out_width);
    CHECK(r.height() == frame.out_height);
    // Cells whose centers map inside the input read the constant.
    for (int y = 0; y < r.height(); ++y) {
      for (int x = 0; x < r.width(); ++x) {
        const Point2 p = frame.to_input(x + 0.5, y + 0.5);
        if (p.x >= 0 && p.y >= 0 && p.x < 10 && p.y < 6) REQUIRE(r(x, y) == 7.0f);
      }
    }
  }

  Heightmap peak(9, 9, 5.0);
  peak(4, 4) = 10.0f;
  const Heightmap r = rotate_heightmap(peak, M_PI / 2);
  REQUIRE(r.width() == 9);
  REQUIRE(r.height() == 9);
  CHECK(r(4, 4) == 10.0f);
}

TEST_CASE("closed_grasps: flat map gives nothing") {
  CHECK(closed_grasps(Heightmap(40, 30, 5.0), GripperGeometry{}, 16).empty());
}

TEST_CASE("closed_grasps: isolated box is straddled at belt level") {
  const Heightmap m = box_map(40, 40, 15, 16, 23, 24, 30.0f);  // 40 x 40 mm box
  const GripperGeometry g = small_gripper();
  const auto grasps = closed_grasps(m, g, 1);
  REQUIRE(!grasps.empty());
  for (const auto& r : grasps) {
    CHECK(r.angle == 0.0);
    CHECK(r.z == 0.0);
    const double left = r.center_x - 0.5 * r.inner_span;
    const double right = r.center_x + 0.5 * r.inner_span;
    CHECK(left <= 15 * 5.0 + 1e-9);
    CHECK(right >= 23 * 5.0 - 1e-9);
  }
}

TEST_CASE("closed_grasps: every rectangle passes the rotated-frame re-check") {
  Rng rng(8);
  const GripperGeometry g = small_gripper();
  for (int scene = 0; scene < 5; ++scene) {
    Heightmap m(50, 40, 5.0);
    for (int k = 0; k < 4; ++k) {
      const int x0 = static_cast<int>(uniform_int(rng, 0, 40));
      const int y0 = static_cast<int>(uniform_int(rng, 0, 30));
      const float hgt = static_cast<float>(uniform_int(rng, 5, 60));
      for (int y = y0; y < std::min(40, y0 + 8); ++y) {
        for (int x = x0; x < std::min(50, x0 + 6); ++x) m(x, y) = std::max(m(x, y), hgt);
      }
    }
    const auto grasps = closed_grasps(m, g, 8);
    CHECK(!grasps.empty());
    std::map<double, Heightmap> frames;
    const int ft = mm_to_px(g.finger_thickness, 5.0);
    const int fw = mm_to_px(g.finger_width, 5.0);
    for (const auto& r : grasps) {
      auto it = frames.find(r.angle);
      if (it == frames.end()) {
        it = frames.emplace(r.angle, oracle::naive_max_filter(rotate_heightmap(m, r.angle), ft, fw))
                 .first;
      }
      const auto check = oracle::check_rectangle(m, g, r, it->second);
      INFO(check.why);
      REQUIRE(check.ok);
    }
  }
}

TEST_CASE("weighted_sample: small inputs come back whole in draw order") {
  std::vector<GraspRectangle> c(5);
  for (int i = 0; i < 5; ++i) {
    c[i].value = i + 1;
    c[i].center_x = i;
  }
  Rng rng(1);
  std::set<double> firsts;
  for (int t = 0; t < 200; ++t) {
    const auto s = weighted_sample(c, 2000, rng);
    REQUIRE(s.size() == 5);
    std::set<double> seen;
    for (const auto& g : s) seen.insert(g.center_x);
    CHECK(seen.size() == 5);
    firsts.insert(s[0].center_x);
  }
  CHECK(firsts.size() == 5);
}

TEST_CASE("weighted_sample: equal weights are uniform") {
  std::vector<GraspRectangle> c(4);
  for (int i = 0; i < 4; ++i) {
    c[i].value = 1.0;
    c[i].center_x = i;
  }
  Rng rng(42);
  const int trials = 100000;
  std::array<int, 4> hits{};
  for (int t = 0; t < trials; ++t) ++hits[static_cast<int>(weighted_sample(c, 1, rng)[0].center_x)];
  const double sigma = std::sqrt(trials * 0.25 * 0.75);
  for (int k = 0; k < 4; ++k) CHECK(std::abs(hits[k] - trials * 0.25) <= 3 * sigma);
}

TEST_CASE("weighted_sample: a dominant weight wins") {
  std::vector<GraspRectangle> c(10);
  for (int i = 0; i < 10; ++i) {
    c[i].value = i == 3 ? 1e6 : 1e-9;
    c[i].center_x = i;
  }
  Rng rng(9);
  int heavy = 0;
  for (int t = 0; t < 10000; ++t) heavy += weighted_sample(c, 1, rng)[0].center_x == 3;
  CHECK(heavy >= 9990);
}

TEST_CASE("weighted_sample: draws without replacement") {
  std::vector<GraspRectangle> c(50);
  for (int i = 0; i < 50; ++i) {
    c[i].value = 1 + i;
    c[i].center_x = i;
  }
  Rng rng(4);
  const auto s = weighted_sample(c, 20, rng);
  REQUIRE(s.size() == 20);
  std::set<double> seen;
  for (const auto& g : s) seen.insert(g.center_x);
  CHECK(seen.size() == 20);
}

TEST_CASE("apply_openings: empty list and isolated object") {
  const GripperGeometry g = small_gripper();
  const Heightmap m = box_map(60, 60, 28, 26, 32, 34, 30.0f);
  CHECK(apply_openings({}, m, g).empty());

  GraspRectangle r;
  r.center_x = 30 * 5.0;
  r.center_y = 30 * 5.0;
  r.inner_span = 30.0;
  r.finger_width = 15.0;
  r.z = 0.0;
  const auto v = apply_openings(std::span(&r, 1), m, g);
  const int steps = static_cast<int>(std::floor((g.max_opening - r.inner_span) / 5.0 + 1e-9));
  REQUIRE(static_cast<int>(v.size()) == steps + 1);
  for (int k = 0; k <= steps; ++k) {
    CHECK(v[k].extra_opening == doctest::Approx(5.0 * k));
    CHECK(v[k].z == 0.0);
  }
}

TEST_CASE("apply_openings: flanking walls leave only the closed grasp") {
  const GripperGeometry g = small_gripper();
  Heightmap m = box_map(60, 60, 28, 26, 32, 34, 30.0f);
  // Fingers occupy columns 26 and 33; walls sit right behind them.
  for (int y = 20; y < 40; ++y) {
    m(25, y) = 30.0f;
    m(34, y) = 30.0f;
  }
  GraspRectangle r;
  r.center_x = 30 * 5.0;
  r.center_y = 30 * 5.0;
  r.inner_span = 30.0;
  r.finger_width = 15.0;
  r.z = 0.0;
  const auto v = apply_openings(std::span(&r, 1), m, g);
  REQUIRE(v.size() == 1);
  CHECK(v[0].extra_opening == 0.0);
}

TEST_CASE("gripper config parsing") {
  const auto g = parse_gripper_config(
      "finger_thickness = 10\nfinger_width = 30\nmin_opening = 10\nmax_opening = 150\n"
      "opening_curve = 10:0:0, 150:70:14\n");
  CHECK(g.finger_thickness == 10.0);
  CHECK(g.max_opening == 150.0);
  CHECK(g.opening_curve.offset(80.0) == doctest::Approx(35.0));
  CHECK(g.opening_curve.lift(80.0) == doctest::Approx(7.0));
  CHECK_THROWS(parse_gripper_config("finger_thickness = 10\nbogus = 1\n"));
  CHECK_THROWS(parse_gripper_config("min_opening = 50\nmax_opening = 10\n"));
}
