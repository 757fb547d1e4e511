// SPDX-License-Identifier: Apache-2.0
#include "aobd/image_ops.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace aobd {

namespace {

inline int wrap(int i, int n) { return (i % n + n) % n; }
inline int clamp_index(int i, int n) { return std::clamp(i, 0, n - 1); }

// Keys cubic convolution kernel, a = -0.5.
double keys(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t < 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

}  // namespace

Image2D finite_diff(const Image2D& img, Axis axis) {
  const int w = img.width();
  const int h = img.height();
  Image2D out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double next = axis == Axis::X ? img(wrap(x + 1, w), y) : img(x, wrap(y + 1, h));
      out(x, y) = next - img(x, y);
    }
  }
  return out;
}

Image2D finite_diff_adjoint(const Image2D& grad, Axis axis) {
  const int w = grad.width();
  const int h = grad.height();
  Image2D out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double prev = axis == Axis::X ? grad(wrap(x - 1, w), y) : grad(x, wrap(y - 1, h));
      out(x, y) = prev - grad(x, y);
    }
  }
  return out;
}

Image2D median_filter(const Image2D& img, int k) {
  if (k < 1 || k % 2 == 0) throw std::invalid_argument("median_filter: kernel size must be odd and >= 1");
  const int w = img.width();
  const int h = img.height();
  const int r = k / 2;
  Image2D out(w, h);
  std::vector<double> window(static_cast<std::size_t>(k) * k);
  const auto mid = window.begin() + static_cast<std::ptrdiff_t>(window.size() / 2);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::size_t n = 0;
      for (int dy = -r; dy <= r; ++dy) {
        const int yy = clamp_index(y + dy, h);
        for (int dx = -r; dx <= r; ++dx) window[n++] = img(clamp_index(x + dx, w), yy);
      }
      std::nth_element(window.begin(), mid, window.end());
      out(x, y) = *mid;
    }
  }
  return out;
}

Mask2D threshold_mask(const Image2D& img, double threshold) {
  if (!std::isfinite(threshold)) throw std::invalid_argument("threshold_mask: non-finite threshold");
  Mask2D out(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = img[i] >= threshold ? 1 : 0;
  return out;
}

Mask2D dilate(const Mask2D& mask, int radius) {
  if (radius < 0) throw std::invalid_argument("dilate: negative radius");
  if (radius == 0) return mask;
  const int w = mask.width();
  const int h = mask.height();
  // Separable max: rows then columns.
  Mask2D rows(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::uint8_t v = 0;
      for (int dx = -radius; dx <= radius && !v; ++dx) {
        const int xx = x + dx;
        if (xx >= 0 && xx < w) v = mask(xx, y);
      }
      rows(x, y) = v;
    }
  }
  Mask2D out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::uint8_t v = 0;
      for (int dy = -radius; dy <= radius && !v; ++dy) {
        const int yy = y + dy;
        if (yy >= 0 && yy < h) v = rows(x, yy);
      }
      out(x, y) = v;
    }
  }
  return out;
}

Image2D shift_image(const Image2D& img, double dx, double dy) {
  if (!std::isfinite(dx) || !std::isfinite(dy)) throw std::invalid_argument("shift_image: non-finite shift");
  const int w = img.width();
  const int h = img.height();
  Image2D out(w, h);
  // Source coordinate of output pixel x is x - dx = (x + ix) + fx with fx in [0, 1).
  const double sx = -dx;
  const double sy = -dy;
  const int ix = static_cast<int>(std::floor(sx));
  const int iy = static_cast<int>(std::floor(sy));
  const double fx = sx - ix;
  const double fy = sy - iy;
  std::array<double, 4> wx{};
  std::array<double, 4> wy{};
  for (int t = 0; t < 4; ++t) {
    wx[t] = keys(fx - (t - 1));
    wy[t] = keys(fy - (t - 1));
  }
  auto sample = [&](int x, int y) { return img.contains(x, y) ? img(x, y) : 0.0; };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int ty = 0; ty < 4; ++ty) {
        if (wy[ty] == 0.0) continue;
        double row = 0.0;
        for (int tx = 0; tx < 4; ++tx) {
          if (wx[tx] == 0.0) continue;
          row += wx[tx] * sample(x + ix + tx - 1, y + iy + ty - 1);
        }
        acc += wy[ty] * row;
      }
      out(x, y) = acc;
    }
  }
  return out;
}

Mask2D connected_component_of(const Mask2D& mask, Pixel seed) {
  if (!mask.contains(seed.x, seed.y)) throw std::out_of_range("connected_component_of: seed outside grid");
  Mask2D out(mask.width(), mask.height());
  if (!mask(seed.x, seed.y)) return out;
  std::vector<Pixel> stack{seed};
  out(seed.x, seed.y) = 1;
  while (!stack.empty()) {
    const Pixel p = stack.back();
    stack.pop_back();
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int x = p.x + dx;
        const int y = p.y + dy;
        if (mask.contains(x, y) && mask(x, y) && !out(x, y)) {
          out(x, y) = 1;
          stack.push_back({x, y});
        }
      }
    }
  }
  return out;
}

}  // namespace aobd
