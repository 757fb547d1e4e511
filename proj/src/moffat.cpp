// SPDX-License-Identifier: Apache-2.0
#include "aobd/moffat.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "aobd/simplex.hpp"

namespace aobd {

void validate(const MoffatParams& p) {
  const bool finite = std::isfinite(p.x0) && std::isfinite(p.y0) && std::isfinite(p.alpha1) &&
                      std::isfinite(p.alpha2) && std::isfinite(p.beta) && std::isfinite(p.theta) &&
                      std::isfinite(p.gamma);
  if (!finite || p.alpha1 <= 0.0 || p.alpha2 <= 0.0 || p.beta <= 0.0 || p.gamma <= 0.0) {
    throw std::invalid_argument("MoffatParams: alpha1, alpha2, beta and gamma must be positive and finite");
  }
}

MoffatParams canonical(MoffatParams p) {
  using std::numbers::pi;
  if (p.alpha2 > p.alpha1) {
    std::swap(p.alpha1, p.alpha2);
    p.theta += pi / 2;
  }
  p.theta = std::fmod(p.theta + pi / 2, pi);
  if (p.theta < 0.0) p.theta += pi;
  p.theta -= pi / 2;
  return p;
}

double moffat_value(const MoffatParams& p, double x, double y) {
  const double c = std::cos(p.theta);
  const double s = std::sin(p.theta);
  const double dx = x - p.x0;
  const double dy = y - p.y0;
  const double r1 = dx * c + dy * s;
  const double r2 = -dx * s + dy * c;
  const double q = 1.0 + r1 * r1 / (p.alpha1 * p.alpha1) + r2 * r2 / (p.alpha2 * p.alpha2);
  return p.gamma * std::pow(q, -p.beta);
}

Image2D moffat_eval(int width, int height, const MoffatParams& p) {
  validate(p);
  Image2D out(width, height);
  const double c = std::cos(p.theta);
  const double s = std::sin(p.theta);
  const double ia1 = 1.0 / (p.alpha1 * p.alpha1);
  const double ia2 = 1.0 / (p.alpha2 * p.alpha2);
  for (int y = 0; y < height; ++y) {
    const double dy = y - p.y0;
    for (int x = 0; x < width; ++x) {
      const double dx = x - p.x0;
      const double r1 = dx * c + dy * s;
      const double r2 = -dx * s + dy * c;
      out(x, y) = p.gamma * std::pow(1.0 + r1 * r1 * ia1 + r2 * r2 * ia2, -p.beta);
    }
  }
  return out;
}

double moffat_fwhm(double alpha, double beta) {
  return 2.0 * alpha * std::sqrt(std::pow(2.0, 1.0 / beta) - 1.0);
}

namespace {

std::vector<double> to_vector(const MoffatParams& p) {
  return {p.x0, p.y0, std::log(p.alpha1), std::log(p.alpha2), std::log(p.beta), p.theta, std::log(p.gamma)};
}

MoffatParams from_vector(std::span<const double> v) {
  return {v[0], v[1], std::exp(v[2]), std::exp(v[3]), std::exp(v[4]), v[5], std::exp(v[6])};
}

}  // namespace

MoffatFit fit_moffat_to_image(const Image2D& psf, const MoffatParams* initial) {
  // Peak and half-maximum area give the moment-free starting point.
  std::size_t imax = 0;
  for (std::size_t i = 1; i < psf.size(); ++i) {
    if (psf[i] > psf[imax]) imax = i;
  }
  const double peak = psf[imax];
  if (!(peak > 0.0)) throw std::invalid_argument("fit_moffat_to_image: image has no positive peak");
  const int px = static_cast<int>(imax % psf.width());
  const int py = static_cast<int>(imax / psf.width());

  MoffatParams init;
  if (initial) {
    init = *initial;
  } else {
    std::size_t above = 0;
    for (double v : psf) above += v >= 0.5 * peak;
    const double fwhm = 2.0 * std::sqrt(static_cast<double>(above) / std::numbers::pi);
    init.beta = 1.6;
    init.alpha1 = init.alpha2 = std::max(0.5, fwhm / (2.0 * std::sqrt(std::pow(2.0, 1.0 / init.beta) - 1.0)));
    init.x0 = px;
    init.y0 = py;
    init.theta = 0.0;
    init.gamma = peak;
  }
  validate(init);

  // Fit window around the peak; the far wings carry negligible weight under uniform least squares.
  const int half = std::clamp(static_cast<int>(std::ceil(12.0 * std::max(init.alpha1, init.alpha2))), 8, 64);
  const int x_lo = std::max(0, px - half);
  const int x_hi = std::min(psf.width() - 1, px + half);
  const int y_lo = std::max(0, py - half);
  const int y_hi = std::min(psf.height() - 1, py + half);

  const double scale = 1.0 / (peak * peak);
  auto cost = [&](std::span<const double> v) {
    const MoffatParams p = from_vector(v);
    const double c = std::cos(p.theta);
    const double s = std::sin(p.theta);
    const double ia1 = 1.0 / (p.alpha1 * p.alpha1);
    const double ia2 = 1.0 / (p.alpha2 * p.alpha2);
    double acc = 0.0;
    for (int y = y_lo; y <= y_hi; ++y) {
      const double dy = y - p.y0;
      for (int x = x_lo; x <= x_hi; ++x) {
        const double dx = x - p.x0;
        const double r1 = dx * c + dy * s;
        const double r2 = -dx * s + dy * c;
        const double m = p.gamma * std::pow(1.0 + r1 * r1 * ia1 + r2 * r2 * ia2, -p.beta);
        const double r = psf(x, y) - m;
        acc += r * r;
      }
    }
    return 0.5 * acc * scale;
  };

  std::vector<double> x = to_vector(init);
  SimplexOptions opts;
  opts.max_iter = 3000;
  opts.initial_step = {0.5, 0.5, 0.1, 0.1, 0.1, 0.2, 0.05};
  SimplexResult best;
  for (int restart = 0; restart < 4; ++restart) {
    best = simplex_search(cost, x, opts);
    x = best.x;
    for (double& s : opts.initial_step) s *= 0.3;
  }

  MoffatFit fit;
  fit.params = canonical(from_vector(best.x));
  fit.cost = best.value / scale;
  fit.converged = best.converged;
  return fit;
}

std::vector<ProfileBin> radial_profile(const Image2D& img, double cx, double cy, int n_bins,
                                       double max_radius) {
  if (n_bins < 1) throw std::invalid_argument("radial_profile: n_bins must be >= 1");
  if (cx < -0.5 || cy < -0.5 || cx > img.width() - 0.5 || cy > img.height() - 0.5) {
    throw std::invalid_argument("radial_profile: center outside grid");
  }
  double rmax = max_radius;
  if (rmax <= 0.0) {
    for (double x : {0.0, img.width() - 1.0}) {
      for (double y : {0.0, img.height() - 1.0}) rmax = std::max(rmax, std::hypot(x - cx, y - cy));
    }
  }
  const double width = rmax / n_bins;
  std::vector<double> sum(n_bins, 0.0), rsum(n_bins, 0.0);
  std::vector<int> cnt(n_bins, 0);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const double r = std::hypot(x - cx, y - cy);
      int b = static_cast<int>(r / width);
      if (b == n_bins && r <= rmax) b = n_bins - 1;
      if (b >= n_bins) continue;
      sum[b] += img(x, y);
      rsum[b] += r;
      ++cnt[b];
    }
  }
  std::vector<ProfileBin> out;
  for (int b = 0; b < n_bins; ++b) {
    if (cnt[b] == 0) continue;
    out.push_back({rsum[b] / cnt[b], sum[b] / cnt[b], cnt[b]});
  }
  return out;
}

}  // namespace aobd
