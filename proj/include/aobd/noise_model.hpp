// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "aobd/image.hpp"

namespace aobd {

/// Affine variance law: var(I) = eta * I + v_ron.
struct NoiseModel {
  double eta = 0.0;    ///< variance per ADU
  double v_ron = 0.0;  ///< readout variance, ADU^2

  double variance(double intensity) const { return eta * std::max(intensity, 0.0) + v_ron; }
  bool operator==(const NoiseModel&) const = default;
};

/// Throws std::invalid_argument if eta or v_ron is negative, non-finite, or both are zero.
void validate(const NoiseModel& model);

/// Per-pixel inverse variance; 0 marks an excluded pixel.
using WeightMap = Image2D;

/// w(x) = 1 / (eta * max(I(x), 0) + v_ron).
WeightMap weights_from_intensity(const Image2D& intensity, const NoiseModel& model);

struct ArcStats {
  double mean = 0.0;      ///< average data value over the arc
  double variance = 0.0;  ///< sample variance of the noise map over the arc
  int pixels = 0;
  bool valid = true;
};

struct ArcGeometry {
  double width = 5.0;    ///< radial extent, pixels
  double length = 20.0;  ///< extent along the circumference, pixels
  int min_pixels = 10;
};

/// Partition the grid into annular arcs around `center` and collect
/// (mean of `data`, variance of `noise_map`) per arc.
std::vector<ArcStats> collect_arcs(const Image2D& data, const Image2D& noise_map, double cx, double cy,
                                   const ArcGeometry& geometry);

struct AffineFitOptions {
  int clip_rounds = 10;
  double clip_sigma = 3.0;
  int irls_iterations = 50;
};

struct NoiseFit {
  NoiseModel model;
  std::vector<ArcStats> arcs;  ///< valid flag reflects the final clipping round
  int valid_arcs = 0;
};

/// L1 affine fit var ~ eta * mean + v_ron with eta, v_ron >= 0, followed by
/// MAD-based 3-sigma clipping rounds. Needs at least 3 points with distinct means.
NoiseModel robust_affine_fit(std::span<const double> means, std::span<const double> variances,
                             const AffineFitOptions& options = {}, std::vector<bool>* valid_out = nullptr);

/// Empirical noise law from a single frame: median-filter residual map, arcs
/// around `center`, robust affine fit.
NoiseFit fit_noise_model(const Image2D& data, Pixel center, const ArcGeometry& geometry = {},
                         const AffineFitOptions& options = {});

}  // namespace aobd
