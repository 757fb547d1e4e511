// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "aobd/image.hpp"
#include "aobd/moffat.hpp"
#include "aobd/pipeline.hpp"

namespace aobd {

/// L1-optimal scale mapping `estimate` onto `reference`:
/// argmin_k sum |reference - k * estimate|, the weighted median of
/// reference / estimate with weights |estimate|.
double l1_scale(const Image2D& reference, const Image2D& estimate);

struct ProfileComparison {
  double radius = 0.0;
  double truth = 0.0;
  double estimate = 0.0;
  double relative_error = 0.0;
};

struct RecoveryMetrics {
  double kappa = 0.0;
  double shift_x = 0.0;  ///< applied to the true object
  double shift_y = 0.0;
  Image2D shifted_truth;
  Image2D object_residual;  ///< 3 |shifted_truth - kappa * object|
  MoffatParams psf_true_fit;
  std::vector<ProfileComparison> psf_profile;
};

/// Compare a pipeline result with simulation truth. The true object is
/// translated by the offset between the Moffat fits of the true and the
/// reconstructed PSF before the scale is estimated.
/// Throws std::invalid_argument on a degenerate truth (all zero object or PSF).
RecoveryMetrics evaluate_recovery(const Image2D& obj_true, const Image2D& psf_true, const PipelineResult& result,
                                  int profile_bins = 64, double profile_max_radius = 0.0);

struct Photometry {
  double flux = 0.0;         ///< aperture sum
  double local_mad = 0.0;    ///< median |v - median| in the surrounding annulus
  double local_median = 0.0;
  int aperture_pixels = 0;
};

/// Circular aperture sum at (cx, cy) and residual statistics in the annulus
/// [radius + gap, radius + gap + annulus_width].
Photometry aperture_photometry(const Image2D& img, double cx, double cy, double radius, double gap = 3.0,
                               double annulus_width = 8.0);

}  // namespace aobd
