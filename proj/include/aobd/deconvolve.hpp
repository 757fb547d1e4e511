// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "aobd/costs.hpp"
#include "aobd/image.hpp"
#include "aobd/noise_model.hpp"
#include "aobd/vmlmb.hpp"

namespace aobd {

struct RobustConfig {
  double gamma_cauchy = kCauchyGamma;
  /// Halo pixels with robust weight <= this value are excluded.
  double w_rob_threshold = 0.5;
  /// Threshold applied inside the protected object vicinity; 0 disables exclusion there.
  double w_rob_body_threshold = 0.0;
};

struct DeconvConfig {
  double mu_obj = 0.05;
  double eps_obj = 200.0;
  double mu_psf = 100.0;
  /// PSF lower bound as a fraction of the current PSF peak.
  double h_min_frac = 1e-12;
  int n_alt = 10;
  int n_wgt = 1;
  int max_iter = 1000;
  VmlmbOptions solver{};
};

/// Throws ConfigError on invalid fields.
void validate(const RobustConfig& cfg);
void validate(const DeconvConfig& cfg);

struct ObjectDeconvResult {
  Image2D object;
  double data_term = 0.0;
  double reg_term = 0.0;
  VmlmbResult solver;
};

/// argmin_{o >= 0} D_wls(d, h ⊛ o, W) + mu_obj R_obj(o), warm-started at `init`.
ObjectDeconvResult deconvolve_object(const Image2D& data, const Image2D& psf, const WeightMap& weights,
                                     const DeconvConfig& cfg, const Image2D& init);

struct PsfDeconvResult {
  /// Unit-sum PSF, origin at the grid center.
  Image2D psf;
  /// Sum of the PSF before normalization: the object must be multiplied by it
  /// to keep h ⊛ o unchanged.
  double flux_scale = 1.0;
  double data_term = 0.0;
  double reg_term = 0.0;
  VmlmbResult solver;
};

/// argmin_{h >= h_min} D_wls(d, h ⊛ o_seg, W) + mu_psf R_psf(h), warm-started at
/// `init`, then renormalized to unit sum.
/// Throws DataError("empty kernel") when the segmented object is all zero.
PsfDeconvResult deconvolve_psf(const Image2D& data, const Image2D& object_segmented, const WeightMap& weights,
                               const DeconvConfig& cfg, const Image2D& init);

}  // namespace aobd
