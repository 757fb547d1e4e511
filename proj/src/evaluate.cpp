// SPDX-License-Identifier: Apache-2.0
#include "aobd/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "aobd/image_ops.hpp"

namespace aobd {

double l1_scale(const Image2D& reference, const Image2D& estimate) {
  require_same_shape(reference, estimate, "l1_scale");
  std::vector<std::pair<double, double>> ratios;
  double total = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    if (estimate[i] == 0.0) continue;
    const double w = std::abs(estimate[i]);
    ratios.emplace_back(reference[i] / estimate[i], w);
    total += w;
  }
  if (ratios.empty()) throw std::invalid_argument("l1_scale: estimate is identically zero");
  std::sort(ratios.begin(), ratios.end());
  double acc = 0.0;
  for (const auto& [ratio, w] : ratios) {
    acc += w;
    if (acc >= 0.5 * total) return ratio;
  }
  return ratios.back().first;
}

RecoveryMetrics evaluate_recovery(const Image2D& obj_true, const Image2D& psf_true, const PipelineResult& result,
                                  int profile_bins, double profile_max_radius) {
  require_same_shape(obj_true, result.object, "evaluate_recovery");
  require_same_shape(psf_true, result.psf, "evaluate_recovery");
  if (!(max_value(obj_true) > 0.0) || !(max_value(psf_true) > 0.0)) {
    throw std::invalid_argument("evaluate_recovery: degenerate truth");
  }
  RecoveryMetrics m;
  m.psf_true_fit = fit_moffat_to_image(psf_true).params;
  const MoffatParams est_fit = fit_moffat_to_image(result.psf).params;
  m.shift_x = m.psf_true_fit.x0 - est_fit.x0;
  m.shift_y = m.psf_true_fit.y0 - est_fit.y0;
  m.shifted_truth = shift_image(obj_true, m.shift_x, m.shift_y);
  m.kappa = l1_scale(m.shifted_truth, result.object);
  m.object_residual = map(m.shifted_truth - m.kappa * result.object, [](double v) { return 3.0 * std::abs(v); });

  const auto truth = radial_profile(psf_true, m.psf_true_fit.x0, m.psf_true_fit.y0, profile_bins, profile_max_radius);
  const auto est = radial_profile(result.psf, est_fit.x0, est_fit.y0, profile_bins, profile_max_radius);
  for (std::size_t i = 0; i < std::min(truth.size(), est.size()); ++i) {
    ProfileComparison p;
    p.radius = truth[i].radius;
    p.truth = truth[i].mean;
    p.estimate = est[i].mean;
    p.relative_error = std::abs(p.estimate - p.truth) / std::abs(p.truth);
    m.psf_profile.push_back(p);
  }
  return m;
}

Photometry aperture_photometry(const Image2D& img, double cx, double cy, double radius, double gap,
                               double annulus_width) {
  Photometry p;
  std::vector<double> ring;
  const double r_in = radius + gap;
  const double r_out = r_in + annulus_width;
  const int x_lo = std::max(0, static_cast<int>(std::floor(cx - r_out)));
  const int x_hi = std::min(img.width() - 1, static_cast<int>(std::ceil(cx + r_out)));
  const int y_lo = std::max(0, static_cast<int>(std::floor(cy - r_out)));
  const int y_hi = std::min(img.height() - 1, static_cast<int>(std::ceil(cy + r_out)));
  for (int y = y_lo; y <= y_hi; ++y) {
    for (int x = x_lo; x <= x_hi; ++x) {
      const double r = std::hypot(x - cx, y - cy);
      if (r <= radius) {
        p.flux += img(x, y);
        ++p.aperture_pixels;
      } else if (r >= r_in && r <= r_out) {
        ring.push_back(img(x, y));
      }
    }
  }
  if (!ring.empty()) {
    auto mid = ring.begin() + static_cast<std::ptrdiff_t>(ring.size() / 2);
    std::nth_element(ring.begin(), mid, ring.end());
    p.local_median = *mid;
    for (double& v : ring) v = std::abs(v - p.local_median);
    std::nth_element(ring.begin(), mid, ring.end());
    p.local_mad = *mid;
  }
  return p;
}

}  // namespace aobd
