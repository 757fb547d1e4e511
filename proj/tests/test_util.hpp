// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <random>

#include "aobd/image.hpp"

namespace aobd::testing {

inline Image2D random_image(int w, int h, unsigned seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Image2D img(w, h);
  for (double& v : img) v = u(rng);
  return img;
}

inline Mask2D random_mask(int w, int h, unsigned seed, double p = 0.4) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution b(p);
  Mask2D m(w, h);
  for (auto& v : m) v = b(rng) ? 1 : 0;
  return m;
}

inline double max_abs(const Image2D& img) {
  double m = 0.0;
  for (double v : img) m = std::max(m, std::abs(v));
  return m;
}

inline double max_abs_diff(const Image2D& a, const Image2D& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double dot(const Image2D& a, const Image2D& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Direct periodic convolution with a kernel centered at (w/2, h/2).
inline Image2D brute_convolve(const Image2D& img, const Image2D& kernel) {
  const int w = img.width();
  const int h = img.height();
  const Pixel c = grid_center(w, h);
  Image2D out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int v = 0; v < h; ++v) {
        for (int u = 0; u < w; ++u) {
          const int sx = ((x - (u - c.x)) % w + w) % w;
          const int sy = ((y - (v - c.y)) % h + h) % h;
          s += kernel(u, v) * img(sx, sy);
        }
      }
      out(x, y) = s;
    }
  }
  return out;
}

/// Relative error of an analytic gradient against central differences along a random direction.
template <typename F>
double directional_fd_error(F&& value_and_grad, const Image2D& x, unsigned seed, double step) {
  Image2D g;
  value_and_grad(x, &g);
  const Image2D dir = random_image(x.width(), x.height(), seed);
  Image2D xp = x, xm = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xp[i] += step * dir[i];
    xm[i] -= step * dir[i];
  }
  const double fd = (value_and_grad(xp, nullptr) - value_and_grad(xm, nullptr)) / (2.0 * step);
  const double an = dot(g, dir);
  return std::abs(fd - an) / std::max(std::abs(an), 1e-300);
}

}  // namespace aobd::testing
