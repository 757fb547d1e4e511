// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "aobd/image.hpp"

namespace aobd {

/// Writes the gradient into `grad` (already sized like x) and returns the cost.
using ImageCostGrad = std::function<double(const Image2D& x, Image2D& grad)>;

/// Fills `diag` with a positive approximation of the Hessian diagonal at `x`.
using DiagonalHessian = std::function<void(const Image2D& x, Image2D& diag)>;

/// Elementwise lower bound: a scalar or a per-pixel image.
struct LowerBound {
  double scalar = 0.0;
  std::optional<Image2D> image;

  double at(std::size_t i) const { return image ? (*image)[i] : scalar; }
};

struct VmlmbOptions {
  int max_iter = 1000;
  int memory = 5;
  /// Stop when (f[k - window] - f[k]) <= ftol * |f[k]|.
  double ftol = 1e-9;
  int ftol_window = 5;
  double armijo = 1e-4;
  int max_backtracks = 40;
  /// Optional diagonal metric: when set, the inverse of this diagonal replaces
  /// the identity as the initial inverse-Hessian approximation.
  DiagonalHessian diagonal_hessian;
};

enum class VmlmbStatus { MaxIterations, Converged, ProjectedGradientZero, LineSearchStalled };

struct VmlmbResult {
  Image2D x;
  double cost = 0.0;
  int iterations = 0;
  int evaluations = 0;
  VmlmbStatus status = VmlmbStatus::MaxIterations;
  /// Cost of every accepted iterate, starting with the projected initial point.
  std::vector<double> history;
};

/// Bound-constrained limited-memory BFGS: the quasi-Newton direction is built on
/// the free variables (those not held at the bound by the gradient), followed by
/// a projected backtracking line search. Every iterate is feasible and the
/// accepted cost sequence is non-increasing.
/// Throws NumericalError if the cost at the projected starting point is not finite.
VmlmbResult vmlmb_minimize(const ImageCostGrad& cost_grad, const Image2D& x0, const LowerBound& lower,
                           const VmlmbOptions& options = {});

}  // namespace aobd
