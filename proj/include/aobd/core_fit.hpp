// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "aobd/image.hpp"
#include "aobd/moffat.hpp"
#include "aobd/noise_model.hpp"

namespace aobd {

/// Threshold defining the binary object plus the fitted Moffat core.
/// The Moffat center is in grid coordinates; (floor(w/2), floor(h/2)) means
/// the core is not shifted relative to the binary object.
struct CoreFitResult {
  double d_bar = 0.0;
  MoffatParams moffat;
  double final_cost = 0.0;
  Mask2D binary_object;
  /// Cost after the first guess, then after each alternation round.
  std::vector<double> cost_history;
};

/// 0.5 * sum w (d - gamma M(x - x0) ⊛ thr(d, d_bar))^2.
double core_cost(const Image2D& data, const WeightMap& weights, double d_bar, const MoffatParams& p);

struct CoreFitOptions {
  double confidence_floor = 0.025;  ///< pixels with d <= floor * max(d) get zero weight
  std::vector<double> first_guess_fractions = {0.30, 0.35, 0.40, 0.45, 0.50, 0.55, 0.60, 0.65, 0.70};
  int first_guess_iterations = 50;
  int alternations = 5;
  int iterations_per_fit = 200;
  double alpha_init = 3.0;
  double beta_init = 1.6;
  /// Restrict the confidence map and the binary object to the connected
  /// region containing the brightest pixel of the 5x5 median-filtered data,
  /// so isolated hot pixels and cosmic rays do not enter the fit.
  bool main_body_only = true;
};

/// Alternating fit of the data threshold and the PSF core.
/// Throws DataError("object not detected") when no candidate threshold yields a support.
CoreFitResult fit_core(const Image2D& data, const NoiseModel& noise, const CoreFitOptions& options = {});

/// Confidence map of the core fit: 0 at or below the floor, inverse variance elsewhere.
WeightMap core_confidence_map(const Image2D& data, const NoiseModel& noise, double floor_fraction);

}  // namespace aobd
