#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace pilesort {

/// Dense row-major 2D container. Cell (x, y) covers the unit square
/// [x, x+1) x [y, y+1) in pixel coordinates, so its center is (x+0.5, y+0.5).
template <class T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(width), height_(height) {
    if (width < 0 || height < 0) {
      throw std::invalid_argument("grid dimensions must be non-negative");
    }
    data_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }

  T at_or(int x, int y, T fallback) const {
    return contains(x, y) ? data_[index(x, y)] : fallback;
  }

  std::span<T> row(int y) {
    return {data_.data() + static_cast<std::size_t>(y) * width_,
            static_cast<std::size_t>(width_)};
  }
  std::span<const T> row(int y) const {
    return {data_.data() + static_cast<std::size_t>(y) * width_,
            static_cast<std::size_t>(width_)};
  }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  bool same_shape(const auto& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline constexpr Rgb kBeltGray{128, 128, 128};
inline constexpr double kDefaultResolutionMm = 5.0;

/// Heights in mm above the belt, one value per cell.
class Heightmap : public Grid<float> {
 public:
  Heightmap() = default;
  Heightmap(int width, int height, double resolution_mm = kDefaultResolutionMm,
            float fill = 0.0f)
      : Grid<float>(width, height, fill), resolution_mm_(resolution_mm) {
    if (!(resolution_mm > 0.0)) {
      throw std::invalid_argument("heightmap resolution must be positive");
    }
  }

  double resolution_mm() const { return resolution_mm_; }

  friend bool operator==(const Heightmap&, const Heightmap&) = default;

 private:
  double resolution_mm_ = kDefaultResolutionMm;
};

using RgbMap = Grid<Rgb>;
/// 1 = occluded / unknown cell.
using UnknownMask = Grid<std::uint8_t>;

}  // namespace pilesort
