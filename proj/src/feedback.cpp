#include "pilesort/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>

#include "pilesort/image_io.hpp"
#include "pilesort/sliding_window.hpp"

namespace pilesort {

namespace {

// Separable 3 x 3 extremum with the window clamped at the borders.
template <class Better>
UnknownMask filter3(const UnknownMask& in, Better better) {
  const int w = in.width();
  const int h = in.height();
  UnknownMask tmp(w, h), out(w, h);
  for (int y = 0; y < h; ++y) sliding_extremum<std::uint8_t>(in.row(y), tmp.row(y), 1, 1, better);
  std::vector<std::uint8_t> col(h), res(h);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) col[y] = tmp(x, y);
    sliding_extremum<std::uint8_t>(col, res, 1, 1, better);
    for (int y = 0; y < h; ++y) out(x, y) = res[y];
  }
  return out;
}

UnknownMask erode3(const UnknownMask& m) { return filter3(m, std::less<>()); }
UnknownMask dilate3(const UnknownMask& m) { return filter3(m, std::greater<>()); }

}  // namespace

Roi default_roi(int width, int height, int border) {
  Roi r{border, border, width - border, height - border};
  if (r.x1 <= r.x0 || r.y1 <= r.y0) r = {0, 0, width, height};
  return r;
}

void FrameStack::validate() const {
  if (frames.empty()) throw std::invalid_argument("frame stack is empty");
  const Heightmap& first = frames.front().depth;
  for (const Frame& f : frames) {
    if (!f.depth.same_shape(first) || !f.rgb.same_shape(first)) {
      throw std::invalid_argument("all frames must share dimensions");
    }
  }
  if (roi.x0 < 0 || roi.y0 < 0 || roi.x1 > first.width() || roi.y1 > first.height() ||
      roi.x0 >= roi.x1 || roi.y0 >= roi.y1) {
    throw std::invalid_argument("region of interest lies outside the frames");
  }
}

void FeedbackConfig::validate() const {
  if (!(background_percentile > 0.0 && background_percentile <= 1.0)) {
    throw std::invalid_argument("background_percentile must lie in (0, 1]");
  }
  if (!(foreground_step_mm > 0.0)) throw std::invalid_argument("foreground_step_mm must be positive");
  if (min_filter_window < 1) throw std::invalid_argument("min_filter_window must be at least 1");
  if (!(pixel_area > 0.0)) throw std::invalid_argument("pixel_area must be positive");
  if (!(min_volume >= 0.0)) throw std::invalid_argument("min_volume must be nonnegative");
}

Heightmap background_level(std::span<const Heightmap> depths, double percentile) {
  if (depths.empty()) throw std::invalid_argument("background needs at least one frame");
  const Heightmap& first = depths.front();
  const auto n = depths.size();
  const auto rank = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(percentile * static_cast<double>(n) - 1e-9)));
  Heightmap bg(first.width(), first.height(), first.resolution_mm());
  std::vector<float> series(n);
  const auto cells = first.size();
  for (std::size_t c = 0; c < cells; ++c) {
    for (std::size_t t = 0; t < n; ++t) series[t] = depths[t].values()[c];
    std::nth_element(series.begin(), series.begin() + (rank - 1), series.end());
    bg.values()[c] = series[rank - 1];
  }
  return bg;
}

UnknownMask foreground_mask(const Heightmap& depth, const Heightmap& background,
                            const FeedbackConfig& cfg) {
  if (!depth.same_shape(background)) throw std::invalid_argument("depth and background differ in size");
  const auto step = static_cast<float>(cfg.foreground_step_mm);
  UnknownMask mask(depth.width(), depth.height());
  for (std::size_t c = 0; c < mask.size(); ++c) {
    mask.values()[c] = depth.values()[c] <= background.values()[c] - step ? 1 : 0;
  }
  if (cfg.open_mask) mask = dilate3(erode3(mask));
  return mask;
}

Heightmap background_level(std::span<const Frame> frames, double percentile) {
  std::vector<Heightmap> depths;
  depths.reserve(frames.size());
  for (const Frame& f : frames) depths.push_back(f.depth);
  return background_level(std::span<const Heightmap>(depths), percentile);
}

FeedbackTrace analyze(const FrameStack& stack, const std::vector<HsvBox>& boxes,
                      const FeedbackConfig& cfg) {
  stack.validate();
  cfg.validate();
  FeedbackTrace trace;
  const auto n = static_cast<int>(stack.frames.size());
  const Heightmap bg = background_level(std::span<const Frame>(stack.frames),
                                        cfg.background_percentile);
  const Roi& roi = stack.roi;

  trace.volume.assign(n, 0.0);
  for (int t = 0; t < n; ++t) {
    const Heightmap& d = stack.frames[t].depth;
    const auto mask = foreground_mask(d, bg, cfg);
    double vol = 0.0;
    for (int y = roi.y0; y < roi.y1; ++y) {
      for (int x = roi.x0; x < roi.x1; ++x) {
        if (mask(x, y)) vol += static_cast<double>(bg(x, y) - d(x, y));
      }
    }
    trace.volume[t] = vol * cfg.pixel_area;
  }

  // Centered window of min_filter_window frames; only frames whose whole
  // window fits are candidates. Short stacks use a single window over all
  // frames.
  const int w = std::min(cfg.min_filter_window, n);
  const int before = (w - 1) / 2;
  const int after = w / 2;
  std::vector<double> mins(n);
  sliding_extremum<double>(trace.volume, mins, before, after, std::less<>());
  trace.filtered.assign(n, -1.0);
  double best = cfg.min_volume;
  for (int t = before; t + after < n; ++t) {
    trace.filtered[t] = mins[t];
    if (mins[t] > best) {
      best = mins[t];
      trace.best_frame = t;
    }
  }
  if (trace.best_frame < 0) return trace;

  const Frame& f = stack.frames[trace.best_frame];
  const auto mask = foreground_mask(f.depth, bg, cfg);
  for (int y = roi.y0; y < roi.y1; ++y) {
    for (int x = roi.x0; x < roi.x1; ++x) {
      if (mask(x, y)) ++trace.counts.counts[static_cast<int>(classify(f.rgb(x, y), boxes))];
    }
  }
  return trace;
}

ColorCounts result(const FrameStack& stack, const std::vector<HsvBox>& boxes,
                   const FeedbackConfig& cfg) {
  return analyze(stack, boxes, cfg).counts;
}

namespace {

std::filesystem::path frame_path(const std::filesystem::path& dir, int i, const char* ext) {
  char name[32];
  std::snprintf(name, sizeof name, "frame_%04d.%s", i, ext);
  return dir / name;
}

}  // namespace

FrameStack load_frame_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw std::runtime_error("frame directory not found: " + dir.string());
  }
  FrameStack stack;
  for (int i = 0;; ++i) {
    const auto hp = frame_path(dir, i, "hmap");
    if (!std::filesystem::exists(hp)) break;
    const auto pp = frame_path(dir, i, "ppm");
    if (!std::filesystem::exists(pp)) {
      throw std::runtime_error("missing color frame " + pp.string());
    }
    stack.frames.push_back({load_hmap(hp), load_ppm(pp)});
  }
  if (stack.frames.empty()) {
    throw std::runtime_error("no frames (frame_0000.hmap) in " + dir.string());
  }
  const Heightmap& d = stack.frames.front().depth;
  stack.roi = default_roi(d.width(), d.height());
  stack.validate();
  return stack;
}

void save_frame_dir(const std::filesystem::path& dir, const FrameStack& stack) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < stack.frames.size(); ++i) {
    save_hmap(frame_path(dir, static_cast<int>(i), "hmap"), stack.frames[i].depth);
    save_ppm(frame_path(dir, static_cast<int>(i), "ppm"), stack.frames[i].rgb);
  }
}

}  // namespace pilesort
