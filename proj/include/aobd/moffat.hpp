// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "aobd/image.hpp"

namespace aobd {

/// Elliptical Moffat pattern gamma * (1 + r1^2/alpha1^2 + r2^2/alpha2^2)^(-beta)
/// with r1 = dx cos(theta) + dy sin(theta), r2 = -dx sin(theta) + dy cos(theta).
/// Positions are absolute pixel coordinates (pixel centers at integers).
struct MoffatParams {
  double x0 = 0.0;
  double y0 = 0.0;
  double alpha1 = 3.0;
  double alpha2 = 3.0;
  double beta = 1.6;
  double theta = 0.0;
  double gamma = 1.0;

  bool operator==(const MoffatParams&) const = default;
};

/// Throws std::invalid_argument unless alpha1, alpha2, beta, gamma > 0 and all fields finite.
void validate(const MoffatParams& p);

/// Wrap theta to [-pi/2, pi/2) and enforce alpha1 >= alpha2 by swapping axes and rotating.
MoffatParams canonical(MoffatParams p);

double moffat_value(const MoffatParams& p, double x, double y);

/// Evaluate the pattern at every pixel center of a width x height grid.
Image2D moffat_eval(int width, int height, const MoffatParams& p);

/// Full width at half maximum along each axis: 2 alpha sqrt(2^(1/beta) - 1).
double moffat_fwhm(double alpha, double beta);

struct MoffatFit {
  MoffatParams params;
  double cost = 0.0;
  bool converged = false;
};

/// Least-squares Moffat fit of a non-negative image with a dominant peak.
/// `initial` overrides the moment-based starting point.
MoffatFit fit_moffat_to_image(const Image2D& psf, const MoffatParams* initial = nullptr);

struct ProfileBin {
  double radius = 0.0;  ///< mean radius of the pixels in the bin
  double mean = 0.0;
  int count = 0;
};

/// Azimuthal average in `n_bins` equal-width radial bins out to the farthest
/// pixel (or `max_radius` when positive). Empty bins are omitted.
std::vector<ProfileBin> radial_profile(const Image2D& img, double cx, double cy, int n_bins,
                                       double max_radius = 0.0);

}  // namespace aobd
