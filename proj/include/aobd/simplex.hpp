// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>
#include <vector>

namespace aobd {

using ScalarObjective = std::function<double(std::span<const double>)>;

struct SimplexOptions {
  int max_iter = 200;
  /// Initial simplex edge per coordinate; empty selects 5% of |x0_i| (0.00025 when x0_i == 0).
  std::vector<double> initial_step;
  double tol_x = 1e-10;
  double tol_f = 1e-12;
};

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

/// Derivative-free Nelder-Mead search with the Lagarias et al. coefficients
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
/// The returned point never has a larger objective than x0. Non-finite
/// objective values away from x0 are treated as +inf; a non-finite value at x0
/// throws std::invalid_argument.
SimplexResult simplex_search(const ScalarObjective& objective, std::span<const double> x0,
                             const SimplexOptions& options = {});

}  // namespace aobd
