// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

#include "aobd/core_fit.hpp"
#include "aobd/deconvolve.hpp"
#include "aobd/image.hpp"
#include "aobd/noise_model.hpp"

namespace aobd {

struct SegmentationConfig {
  /// Fraction of the maximum of the 5x5 median-filtered object.
  double d_sup_frac = 0.2;
  int dilation_radius = 1;
  /// Outlier exclusion is not applied within this distance of the segmented support.
  int protect_radius = 2;
};

void validate(const SegmentationConfig& cfg);

struct PipelineConfig {
  DeconvConfig deconv;
  SegmentationConfig segmentation;
  RobustConfig robust;
};

/// Per-round diagnostics.
struct RoundLog {
  int round = 0;
  double obj_data_term = 0.0;
  double obj_reg = 0.0;
  int obj_iterations = 0;
  double psf_data_term = 0.0;
  double psf_reg = 0.0;
  int psf_iterations = 0;
  double psf_sum = 0.0;
  std::size_t excluded = 0;
};

struct PipelineResult {
  Image2D object;            ///< deconvolved object, >= 0
  Image2D object_segmented;  ///< main body only
  Image2D psf;               ///< unit sum, origin at the grid center
  Image2D data_model;        ///< convolve(object_segmented, psf)
  Image2D halo_residuals;    ///< data - data_model
  Image2D robust_weights;    ///< in (0, 1]
  WeightMap weights;         ///< model-based weights after the final update
  Mask2D excluded_mask;      ///< pixels zeroed by the last outlier exclusion
  std::vector<RoundLog> cost_log;
};

/// Keep the main body: threshold the median-filtered object, retain the
/// 8-connected component holding its maximum, dilate, and mask the object.
/// Throws DataError when the support is empty.
Image2D segment_object(const Image2D& obj, const SegmentationConfig& cfg);

/// Cauchy weights of the whitened residuals sqrt(w) (d - d_mod).
Image2D update_robust_weights(const Image2D& data, const Image2D& data_model, const WeightMap& weights,
                              double gamma);

/// Zero the weights where robust_weights <= threshold and protect == 0.
WeightMap apply_outlier_exclusion(const WeightMap& weights, const Image2D& robust_weights, double threshold,
                                  const Mask2D& protect);

Image2D halo_residuals(const Image2D& data, const Image2D& data_model);

/// Called after every alternation round with the round log and current PSF.
using RoundObserver = std::function<void(const RoundLog&, const Image2D& psf)>;

/// Alternate object / PSF deconvolution with robust outlier exclusion.
PipelineResult run_pipeline(const Image2D& data, const NoiseModel& noise, const CoreFitResult& core,
                            const PipelineConfig& cfg, const RoundObserver& observer = {});

}  // namespace aobd
