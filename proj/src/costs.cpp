// SPDX-License-Identifier: Apache-2.0
#include "aobd/costs.hpp"

#include <cmath>
#include <stdexcept>

namespace aobd {

double cauchy_rho(double r, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("cauchy_rho: gamma must be positive");
  return 0.5 * gamma * gamma * std::log1p((r / gamma) * (r / gamma));
}

double cauchy_weight(double r, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("cauchy_weight: gamma must be positive");
  return 1.0 / (1.0 + (r / gamma) * (r / gamma));
}

CostGrad wls_cost_grad(const Image2D& a, const Image2D& b, const WeightMap& w) {
  require_same_shape(a, b, "wls_cost_grad");
  require_same_shape(a, w, "wls_cost_grad");
  CostGrad out{0.0, Image2D(a.width(), a.height())};
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double r = a[i] - b[i];
    const double wr = w[i] * r;
    acc += wr * r;
    out.gradient[i] = -wr;
  }
  out.value = 0.5 * acc;
  return out;
}

double robust_cost(const Image2D& a, const Image2D& b, const WeightMap& w, double gamma) {
  require_same_shape(a, b, "robust_cost");
  require_same_shape(a, w, "robust_cost");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += cauchy_rho(std::sqrt(w[i]) * (a[i] - b[i]), gamma);
  return acc;
}

CostGrad reg_obj_cost_grad(const Image2D& o, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("reg_obj_cost_grad: eps must be positive");
  const int w = o.width();
  const int h = o.height();
  // q = (dx, dy) / sqrt(dx^2 + dy^2 + eps^2); gradient = Dx^T qx + Dy^T qy.
  Image2D qx(w, h), qy(w, h);
  double acc = 0.0;
  for (int y = 0; y < h; ++y) {
    const int yn = y + 1 == h ? 0 : y + 1;
    for (int x = 0; x < w; ++x) {
      const int xn = x + 1 == w ? 0 : x + 1;
      const double dx = o(xn, y) - o(x, y);
      const double dy = o(x, yn) - o(x, y);
      const double n = std::sqrt(dx * dx + dy * dy + eps * eps);
      acc += n - eps;
      qx(x, y) = dx / n;
      qy(x, y) = dy / n;
    }
  }
  CostGrad out{acc, Image2D(w, h)};
  for (int y = 0; y < h; ++y) {
    const int yp = y == 0 ? h - 1 : y - 1;
    for (int x = 0; x < w; ++x) {
      const int xp = x == 0 ? w - 1 : x - 1;
      out.gradient(x, y) = qx(xp, y) - qx(x, y) + qy(x, yp) - qy(x, y);
    }
  }
  return out;
}

CostGrad reg_psf_cost_grad(const Image2D& h, double h_min) {
  if (!(h_min > 0.0)) throw std::invalid_argument("reg_psf_cost_grad: h_min must be positive");
  const int w = h.width();
  const int ht = h.height();
  Image2D u(w, ht);
  for (std::size_t i = 0; i < h.size(); ++i) u[i] = std::log(std::max(h[i], h_min));
  Image2D gx(w, ht), gy(w, ht);
  double acc = 0.0;
  for (int y = 0; y < ht; ++y) {
    const int yn = y + 1 == ht ? 0 : y + 1;
    for (int x = 0; x < w; ++x) {
      const int xn = x + 1 == w ? 0 : x + 1;
      const double dx = u(xn, y) - u(x, y);
      const double dy = u(x, yn) - u(x, y);
      acc += dx * dx + dy * dy;
      gx(x, y) = 2.0 * dx;
      gy(x, y) = 2.0 * dy;
    }
  }
  CostGrad out{acc, Image2D(w, ht)};
  for (int y = 0; y < ht; ++y) {
    const int yp = y == 0 ? ht - 1 : y - 1;
    for (int x = 0; x < w; ++x) {
      const int xp = x == 0 ? w - 1 : x - 1;
      const double du = gx(xp, y) - gx(x, y) + gy(x, yp) - gy(x, y);
      out.gradient(x, y) = h(x, y) >= h_min ? du / h(x, y) : 0.0;
    }
  }
  return out;
}

}  // namespace aobd
