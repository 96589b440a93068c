#include <doctest.h>

#include <filesystem>

#include "pilesort/feedback.hpp"
#include "pilesort/rng.hpp"

using namespace pilesort;

namespace {

Frame empty_frame(int w, int h, float depth = 1000.0f) {
  return {Heightmap(w, h, 2.5, depth), RgbMap(w, h, kBeltGray)};
}

void paint(Frame& f, int x0, int y0, int size, float depth, Rgb color) {
  for (int y = y0; y < y0 + size; ++y) {
    for (int x = x0; x < x0 + size; ++x) {
      if (!f.depth.contains(x, y)) continue;
      f.depth(x, y) = depth;
      f.rgb(x, y) = color;
    }
  }
}

// A size x size block 100 mm above the belt crossing the frame left to right,
// fully in view for frames [first, last].
FrameStack moving_block(int frames, int first, int last, int size, Rgb color) {
  const int speed = 7;
  const int w = 20 + size + speed * (last - first) + 20;
  const int h = size + 40;
  FrameStack s;
  for (int t = 0; t < frames; ++t) {
    Frame f = empty_frame(w, h);
    if (t >= first && t <= last) paint(f, 20 + speed * (t - first), 20, size, 900.0f, color);
    s.frames.push_back(std::move(f));
  }
  s.roi = default_roi(w, h, 10);
  return s;
}

const Rgb kRed{200, 30, 30};

}  // namespace

TEST_CASE("background level: nearest-rank examples") {
  std::vector<Heightmap> d(10, Heightmap(4, 3, 2.5, 1000.0f));
  CHECK(background_level(d, 0.2) == Heightmap(4, 3, 2.5, 1000.0f));
  d[6] = Heightmap(4, 3, 2.5, 900.0f);
  CHECK(background_level(d, 0.2) == Heightmap(4, 3, 2.5, 1000.0f));
  d[2] = Heightmap(4, 3, 2.5, 900.0f);
  d[9] = Heightmap(4, 3, 2.5, 900.0f);
  CHECK(background_level(d, 0.2) == Heightmap(4, 3, 2.5, 900.0f));
}

TEST_CASE("foreground mask: threshold and opening") {
  Heightmap bg(20, 20, 2.5, 1000.0f);
  Heightmap depth = bg;
  depth(3, 3) = 900.0f;  // isolated pixel is removed by the opening
  for (int y = 10; y < 15; ++y) {
    for (int x = 10; x < 15; ++x) depth(x, y) = 994.0f;  // exactly 6 mm closer
  }
  const auto m = foreground_mask(depth, bg);
  CHECK(m(3, 3) == 0);
  int count = 0;
  for (auto v : m.values()) count += v;
  CHECK(count == 25);

  FeedbackConfig raw;
  raw.open_mask = false;
  CHECK(foreground_mask(depth, bg, raw)(3, 3) == 1);
  depth(12, 12) = 994.5f;
  CHECK(foreground_mask(depth, bg, raw)(12, 12) == 0);
}

TEST_CASE("background-only stacks count nothing") {
  FrameStack s;
  for (int t = 0; t < 50; ++t) s.frames.push_back(empty_frame(60, 50));
  s.roi = default_roi(60, 50);
  CHECK(result(s, default_hsv_boxes()) == ColorCounts{});

  // Sensor noise alone stays below the foreground step once opened.
  Rng rng(3);
  for (auto& f : s.frames) {
    for (auto& v : f.depth.values()) v += static_cast<float>(1.5 * standard_normal(rng));
  }
  CHECK(result(s, default_hsv_boxes()) == ColorCounts{});
}

TEST_CASE("a moving red block is counted in full") {
  const FrameStack s = moving_block(50, 10, 40, 50, kRed);
  const auto trace = analyze(s, default_hsv_boxes());
  CHECK(trace.counts[ColorClass::Red] == 2500);
  CHECK(trace.counts.total() == 2500);
  CHECK(trace.best_frame >= 10);
  CHECK(trace.best_frame <= 40);
}

TEST_CASE("a block seen for fewer frames than the filter window is ignored") {
  const FrameStack s = moving_block(50, 1, 4, 20, kRed);
  const auto trace = analyze(s, default_hsv_boxes());
  CHECK(trace.counts == ColorCounts{});
  CHECK(trace.best_frame == -1);
}

TEST_CASE("min filter: only frames with a full window are candidates") {
  const FrameStack s = moving_block(30, 5, 20, 10, kRed);
  const auto trace = analyze(s, default_hsv_boxes());
  REQUIRE(trace.filtered.size() == 30);
  for (int t = 0; t < 4; ++t) CHECK(trace.filtered[t] == -1.0);
  for (int t = 26; t < 30; ++t) CHECK(trace.filtered[t] == -1.0);
  CHECK(trace.filtered[12] == doctest::Approx(100.0 * 100));
  CHECK(trace.filtered[4] == 0.0);
}

TEST_CASE("short stacks use a single window") {
  FrameStack still;
  for (int t = 0; t < 6; ++t) {
    Frame f = empty_frame(40, 40);
    paint(f, 15, 15, 10, 900.0f, kRed);
    still.frames.push_back(std::move(f));
  }
  still.roi = default_roi(40, 40, 5);
  const auto trace = analyze(still, default_hsv_boxes());
  // The background absorbs a block present in every frame.
  CHECK(trace.counts.total() == 0);
  CHECK(trace.filtered.size() == 6);

  // A block arriving mid-stack is in view in too few frames of the one window.
  const FrameStack late = moving_block(6, 3, 5, 10, kRed);
  CHECK(analyze(late, default_hsv_boxes()).counts.total() == 0);
}

TEST_CASE("frame directories round trip") {
  const FrameStack s = moving_block(12, 2, 9, 8, kRed);
  const auto dir = std::filesystem::temp_directory_path() / "pilesort_frames_test";
  std::filesystem::remove_all(dir);
  save_frame_dir(dir, s);
  const FrameStack back = load_frame_dir(dir);
  REQUIRE(back.frames.size() == 12);
  CHECK(back.frames[5].depth == s.frames[5].depth);
  CHECK(back.frames[5].rgb == s.frames[5].rgb);
  CHECK(back.roi == s.roi);
  std::filesystem::remove_all(dir);
}

TEST_CASE("invalid stacks are rejected") {
  FrameStack s;
  CHECK_THROWS(s.validate());
  s.frames.push_back(empty_frame(10, 10));
  s.frames.push_back(empty_frame(11, 10));
  s.roi = {0, 0, 10, 10};
  CHECK_THROWS(s.validate());
  s.frames.pop_back();
  s.roi = {0, 0, 20, 10};
  CHECK_THROWS(s.validate());
}

TEST_CASE("hsv classification of the palette") {
  const auto boxes = default_hsv_boxes();
  CHECK(classify(palette_color(ColorClass::Red), boxes) == ColorClass::Red);
  CHECK(classify(palette_color(ColorClass::Yellow), boxes) == ColorClass::Yellow);
  CHECK(classify(palette_color(ColorClass::BlueGreen), boxes) == ColorClass::BlueGreen);
  CHECK(classify(kBeltGray, boxes) == ColorClass::Unknown);
  CHECK(classify(Rgb{200, 20, 60}, boxes) == ColorClass::Red);  // hue wraps past 360
}
