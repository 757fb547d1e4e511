// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "aobd/image.hpp"
#include "aobd/noise_model.hpp"

namespace aobd {

/// Value and gradient of a differentiable image functional.
struct CostGrad {
  double value = 0.0;
  Image2D gradient;
};

/// Gaussian-equivalent Cauchy scale for whitened residuals.
inline constexpr double kCauchyGamma = 2.385;

/// (gamma^2 / 2) ln(1 + r^2 / gamma^2)
double cauchy_rho(double r, double gamma = kCauchyGamma);
/// rho'(r) / r = (1 + r^2 / gamma^2)^-1
double cauchy_weight(double r, double gamma = kCauchyGamma);

/// 0.5 * sum w (a - b)^2 and its gradient with respect to b, -w (a - b).
CostGrad wls_cost_grad(const Image2D& a, const Image2D& b, const WeightMap& w);

/// sum rho(sqrt(w) (a - b)).
double robust_cost(const Image2D& a, const Image2D& b, const WeightMap& w, double gamma = kCauchyGamma);

/// Edge-preserving object prior: sum sqrt(dx^2 + dy^2 + eps^2) - eps, periodic differences.
CostGrad reg_obj_cost_grad(const Image2D& o, double eps);

/// Log-domain smoothness prior: sum (dx ln h)^2 + (dy ln h)^2 with h floored at h_min.
/// The gradient is zero where h < h_min.
CostGrad reg_psf_cost_grad(const Image2D& h, double h_min);

}  // namespace aobd
