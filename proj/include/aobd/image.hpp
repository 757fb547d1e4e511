// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace aobd {

/// Dense row-major 2-D grid. Axis 1 is x (columns, fastest varying), axis 2 is y.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;

  Grid(int width, int height, T fill = T{})
      : width_(check_dim(width)), height_(check_dim(height)),
        values_(static_cast<std::size_t>(width) * height, fill) {}

  Grid(int width, int height, std::vector<T> values)
      : width_(check_dim(width)), height_(check_dim(height)), values_(std::move(values)) {
    if (values_.size() != static_cast<std::size_t>(width_) * height_) {
      throw std::invalid_argument("Grid: value count does not match width*height");
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  T& operator()(int x, int y) { return values_[index(x, y)]; }
  const T& operator()(int x, int y) const { return values_[index(x, y)]; }
  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }
  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }
  std::vector<T>& storage() { return values_; }
  const std::vector<T>& storage() const { return values_; }

  auto begin() { return values_.begin(); }
  auto end() { return values_.end(); }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  template <typename U>
  bool same_shape(const Grid<U>& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  bool operator==(const Grid&) const = default;

 private:
  static int check_dim(int d) {
    if (d < 1) throw std::invalid_argument("Grid: dimensions must be >= 1");
    return d;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> values_;
};

using Image2D = Grid<double>;
/// Binary mask, values restricted to {0, 1}.
using Mask2D = Grid<std::uint8_t>;

template <typename A, typename B>
void require_same_shape(const Grid<A>& a, const Grid<B>& b, const char* what) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch");
  }
}

inline bool all_finite(const Image2D& img) {
  return std::all_of(img.begin(), img.end(), [](double v) { return std::isfinite(v); });
}

inline double sum(const Image2D& img) {
  return std::accumulate(img.begin(), img.end(), 0.0);
}
inline double max_value(const Image2D& img) { return *std::max_element(img.begin(), img.end()); }
inline double min_value(const Image2D& img) { return *std::min_element(img.begin(), img.end()); }

inline std::size_t count(const Mask2D& mask) {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

/// Grid center used as the nominal kernel origin: (floor(w/2), floor(h/2)).
struct Pixel {
  int x = 0;
  int y = 0;
  bool operator==(const Pixel&) const = default;
};
inline Pixel grid_center(int width, int height) { return {width / 2, height / 2}; }
template <typename T>
Pixel grid_center(const Grid<T>& g) {
  return grid_center(g.width(), g.height());
}

/// Elementwise helpers used throughout the pipeline.
template <typename F>
Image2D map(const Image2D& a, F f) {
  Image2D out(a.width(), a.height());
  std::transform(a.begin(), a.end(), out.begin(), f);
  return out;
}

template <typename F>
Image2D zip(const Image2D& a, const Image2D& b, F f) {
  require_same_shape(a, b, "zip");
  Image2D out(a.width(), a.height());
  std::transform(a.begin(), a.end(), b.begin(), out.begin(), f);
  return out;
}

inline Image2D operator+(const Image2D& a, const Image2D& b) {
  return zip(a, b, std::plus<>{});
}
inline Image2D operator-(const Image2D& a, const Image2D& b) {
  return zip(a, b, std::minus<>{});
}
inline Image2D operator*(double s, const Image2D& a) {
  return map(a, [s](double v) { return s * v; });
}

/// Multiply an image by a mask (pixels outside the mask become 0).
inline Image2D apply_mask(const Image2D& img, const Mask2D& mask) {
  require_same_shape(img, mask, "apply_mask");
  Image2D out = img;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!mask[i]) out[i] = 0.0;
  }
  return out;
}

/// Circular integer roll: out(x + dx, y + dy) = in(x, y).
template <typename T>
Grid<T> roll(const Grid<T>& in, int dx, int dy) {
  Grid<T> out(in.width(), in.height());
  const int w = in.width();
  const int h = in.height();
  for (int y = 0; y < h; ++y) {
    const int ty = ((y + dy) % h + h) % h;
    for (int x = 0; x < w; ++x) {
      const int tx = ((x + dx) % w + w) % w;
      out(tx, ty) = in(x, y);
    }
  }
  return out;
}

}  // namespace aobd
