#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <span>
#include <vector>

#include "driftscan/error.hpp"

namespace driftscan {

struct Pixel {
  int x = 0;
  int y = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// Axis-aligned pixel rectangle [x, x + width) x [y, y + height).
struct Rect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  bool contains(Pixel p) const {
    return p.x >= x && p.y >= y && p.x < x + width && p.y < y + height;
  }
  std::size_t area() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  friend bool operator==(const Rect&, const Rect&) = default;
};

inline int chebyshev(Pixel a, Pixel b) {
  return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y));
}

/// Row-major 2-D grid with value semantics.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(width), height_(height) {
    if (width < 0 || height < 0) throw InvalidArgument("negative grid extent");
    values_.assign(static_cast<std::size_t>(width) * height, fill);
  }
  Grid(int width, int height, std::vector<T> values)
      : width_(width), height_(height), values_(std::move(values)) {
    if (width < 0 || height < 0 ||
        values_.size() != static_cast<std::size_t>(width) * height)
      throw InvalidArgument("grid value count does not match extent");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  bool inside(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  T& operator()(int x, int y) { return values_[index(x, y)]; }
  const T& operator()(int x, int y) const { return values_[index(x, y)]; }
  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }

  std::span<T> values() noexcept { return values_; }
  std::span<const T> values() const noexcept { return values_; }

  bool same_extent(int w, int h) const noexcept {
    return w == width_ && h == height_;
  }
  template <typename U>
  bool same_extent(const Grid<U>& other) const noexcept {
    return other.width() == width_ && other.height() == height_;
  }

  /// Copies the sub-rectangle `r`, which must lie inside the grid.
  Grid crop(const Rect& r) const {
    if (r.x < 0 || r.y < 0 || r.width < 0 || r.height < 0 ||
        r.x + r.width > width_ || r.y + r.height > height_)
      throw InvalidArgument("crop rectangle outside grid");
    Grid out(r.width, r.height);
    for (int y = 0; y < r.height; ++y)
      std::copy_n(values_.begin() + index(r.x, r.y + y), r.width,
                  out.values_.begin() + out.index(0, y));
    return out;
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> values_;
};

}  // namespace driftscan
