// SPDX-License-Identifier: Apache-2.0
#include "aobd/core_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "aobd/convolve.hpp"
#include "aobd/errors.hpp"
#include "aobd/image_ops.hpp"
#include "aobd/raster_io.hpp"
#include "aobd/simplex.hpp"

namespace aobd {

namespace {

double weighted_sse(const Image2D& data, const WeightMap& w, const Image2D& model) {
  double acc = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (w[i] == 0.0) continue;
    const double r = data[i] - model[i];
    acc += w[i] * r * r;
  }
  return 0.5 * acc;
}

// Least-squares amplitude of `shape` against the data.
double best_amplitude(const Image2D& data, const WeightMap& w, const Image2D& shape) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    num += w[i] * data[i] * shape[i];
    den += w[i] * shape[i] * shape[i];
  }
  return den > 0.0 && num > 0.0 ? num / den : 1.0;
}

// Unit-amplitude Moffat kernel with the given shape parameters.
MoffatParams unit_shape(const MoffatParams& p) {
  MoffatParams u = p;
  u.gamma = 1.0;
  return u;
}

// PSF-core vector: [ln(gamma / gamma_ref), x0, y0, ln alpha1, ln alpha2, ln beta, theta].
std::vector<double> core_vector(const MoffatParams& p, double gamma_ref) {
  return {std::log(p.gamma / gamma_ref), p.x0, p.y0, std::log(p.alpha1), std::log(p.alpha2), std::log(p.beta),
          p.theta};
}
MoffatParams core_params(std::span<const double> v, double gamma_ref) {
  return {v[1], v[2], std::exp(v[3]), std::exp(v[4]), std::exp(v[5]), v[6], gamma_ref * std::exp(v[0])};
}

const std::vector<double> kCoreSteps = {0.1, 0.5, 0.5, 0.1, 0.1, 0.1, 0.2};

class CoreProblem {
 public:
  CoreProblem(const Image2D& data, const WeightMap& weights, std::optional<Pixel> body)
      : data_(data), weights_(weights), body_(body), gamma_ref_(max_value(data)) {}

  // thr(d, d_bar), optionally restricted to the component holding the body seed.
  Mask2D binary(double d_bar) const {
    Mask2D m = threshold_mask(data_, d_bar);
    if (!body_) return m;
    if (!m(body_->x, body_->y)) return Mask2D(m.width(), m.height(), 0);
    return connected_component_of(m, *body_);
  }

  // Cost of a Moffat core against a fixed binary object.
  double cost_shape(const Convolver& object, const MoffatParams& p) const {
    const Image2D model = object.apply(moffat_eval(data_.width(), data_.height(), p));
    return weighted_sse(data_, weights_, model);
  }

  // Fit (gamma, x0, alpha, beta, theta) against thr(d, d_bar).
  SimplexResult fit_shape(double d_bar, MoffatParams& p, int iterations) const {
    const Convolver object(mask_to_image(binary(d_bar)), Origin::Corner, Origin::Center);
    auto objective = [&](std::span<const double> v) {
      const MoffatParams q = core_params(v, gamma_ref_);
      if (!(q.alpha1 > 1e-3 && q.alpha2 > 1e-3 && q.beta > 1e-3 && q.beta < 50.0)) {
        return std::numeric_limits<double>::infinity();
      }
      return cost_shape(object, q);
    };
    SimplexOptions opts;
    opts.max_iter = iterations;
    opts.initial_step = kCoreSteps;
    const auto x = core_vector(p, gamma_ref_);
    SimplexResult r = simplex_search(objective, x, opts);
    p = core_params(r.x, gamma_ref_);
    return r;
  }

  // Fit (d_bar, gamma) at fixed Moffat shape.
  SimplexResult fit_threshold(double& d_bar, MoffatParams& p, int iterations) const {
    const double dmax = max_value(data_);
    const double dmin = min_value(data_);
    const Convolver kernel(moffat_eval(data_.width(), data_.height(), unit_shape(p)), Origin::Center,
                           Origin::Corner);
    std::optional<double> cached_threshold;
    Image2D cached_shape;
    auto objective = [&](std::span<const double> v) {
      const double threshold = std::clamp(v[0], dmin / dmax, 1.0) * dmax;
      if (!cached_threshold || *cached_threshold != threshold) {
        cached_shape = kernel.apply(mask_to_image(binary(threshold)));
        cached_threshold = threshold;
      }
      const double g = gamma_ref_ * std::exp(v[1]);
      double acc = 0.0;
      for (std::size_t i = 0; i < data_.size(); ++i) {
        if (weights_[i] == 0.0) continue;
        const double r = data_[i] - g * cached_shape[i];
        acc += weights_[i] * r * r;
      }
      return 0.5 * acc;
    };
    SimplexOptions opts;
    opts.max_iter = iterations;
    opts.initial_step = {0.03, 0.05};
    const std::vector<double> x = {d_bar / dmax, std::log(p.gamma / gamma_ref_)};
    SimplexResult r = simplex_search(objective, x, opts);
    d_bar = std::clamp(r.x[0], dmin / dmax, 1.0) * dmax;
    p.gamma = gamma_ref_ * std::exp(r.x[1]);
    return r;
  }

  double amplitude_for(double d_bar, const MoffatParams& p) const {
    const Image2D shape = convolve(mask_to_image(binary(d_bar)),
                                   moffat_eval(data_.width(), data_.height(), unit_shape(p)));
    return best_amplitude(data_, weights_, shape);
  }

 private:
  const Image2D& data_;
  const WeightMap& weights_;
  std::optional<Pixel> body_;
  double gamma_ref_;
};

Pixel brightest_median_pixel(const Image2D& data) {
  const Image2D med = median_filter(data, 5);
  const auto i = static_cast<std::size_t>(std::max_element(med.begin(), med.end()) - med.begin());
  return {static_cast<int>(i % med.width()), static_cast<int>(i / med.width())};
}

}  // namespace

double core_cost(const Image2D& data, const WeightMap& weights, double d_bar, const MoffatParams& p) {
  require_same_shape(data, weights, "core_cost");
  validate(p);
  const Image2D model = convolve(mask_to_image(threshold_mask(data, d_bar)),
                                 moffat_eval(data.width(), data.height(), p));
  return weighted_sse(data, weights, model);
}

WeightMap core_confidence_map(const Image2D& data, const NoiseModel& noise, double floor_fraction) {
  WeightMap w = weights_from_intensity(data, noise);
  const double floor = floor_fraction * max_value(data);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (data[i] <= floor) w[i] = 0.0;
  }
  return w;
}

CoreFitResult fit_core(const Image2D& data, const NoiseModel& noise, const CoreFitOptions& options) {
  if (!all_finite(data)) throw DataError("fit_core: non-finite data");
  const double dmax = max_value(data);
  if (!(dmax > 0.0)) throw DataError("fit_core: object not detected");
  WeightMap weights = core_confidence_map(data, noise, options.confidence_floor);
  std::optional<Pixel> body;
  if (options.main_body_only) {
    body = brightest_median_pixel(data);
    Mask2D confident(weights.width(), weights.height());
    for (std::size_t i = 0; i < weights.size(); ++i) confident[i] = weights[i] > 0.0 ? 1 : 0;
    if (!confident(body->x, body->y)) throw DataError("fit_core: object not detected");
    weights = apply_mask(weights, connected_component_of(confident, *body));
  }
  const CoreProblem problem(data, weights, body);
  const Pixel c = grid_center(data);

  MoffatParams init;
  init.x0 = c.x;
  init.y0 = c.y;
  init.alpha1 = init.alpha2 = options.alpha_init;
  init.beta = options.beta_init;
  init.theta = 0.0;

  // First guess over the coarse threshold grid.
  double best_cost = std::numeric_limits<double>::infinity();
  double d_bar = 0.0;
  MoffatParams params;
  for (double fraction : options.first_guess_fractions) {
    const double threshold = fraction * dmax;
    if (count(problem.binary(threshold)) == 0) continue;
    MoffatParams candidate = init;
    candidate.gamma = problem.amplitude_for(threshold, candidate);
    const SimplexResult r = problem.fit_shape(threshold, candidate, options.first_guess_iterations);
    if (r.value < best_cost) {
      best_cost = r.value;
      d_bar = threshold;
      params = candidate;
    }
  }
  if (!std::isfinite(best_cost)) throw DataError("fit_core: object not detected");

  CoreFitResult result;
  result.cost_history.push_back(best_cost);
  double cost = best_cost;
  for (int round = 0; round < options.alternations; ++round) {
    problem.fit_threshold(d_bar, params, options.iterations_per_fit);
    cost = problem.fit_shape(d_bar, params, options.iterations_per_fit).value;
    result.cost_history.push_back(cost);
  }

  result.d_bar = d_bar;
  result.moffat = canonical(params);
  result.final_cost = cost;
  result.binary_object = problem.binary(d_bar);
  return result;
}

}  // namespace aobd
