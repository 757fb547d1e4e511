// SPDX-License-Identifier: Apache-2.0
#include "aobd/pipeline.hpp"

#include <cmath>
#include <string>

#include "aobd/convolve.hpp"
#include "aobd/errors.hpp"
#include "aobd/image_ops.hpp"

namespace aobd {

void validate(const SegmentationConfig& cfg) {
  if (!(cfg.d_sup_frac > 0.0 && cfg.d_sup_frac < 1.0)) throw ConfigError("d_sup_frac must lie in (0, 1)");
  if (cfg.dilation_radius < 0 || cfg.protect_radius < 0) throw ConfigError("radii must be >= 0");
}

Image2D segment_object(const Image2D& obj, const SegmentationConfig& cfg) {
  validate(cfg);
  const Image2D med = median_filter(obj, 5);
  std::size_t imax = 0;
  for (std::size_t i = 1; i < med.size(); ++i) {
    if (med[i] > med[imax]) imax = i;
  }
  if (!(med[imax] > 0.0)) throw DataError("segment_object: empty support");
  const Mask2D above = threshold_mask(med, cfg.d_sup_frac * med[imax]);
  const Pixel seed{static_cast<int>(imax % med.width()), static_cast<int>(imax / med.width())};
  const Mask2D body = dilate(connected_component_of(above, seed), cfg.dilation_radius);
  return apply_mask(obj, body);
}

Image2D update_robust_weights(const Image2D& data, const Image2D& data_model, const WeightMap& weights,
                              double gamma) {
  require_same_shape(data, data_model, "update_robust_weights");
  require_same_shape(data, weights, "update_robust_weights");
  Image2D out(data.width(), data.height());
  for (std::size_t i = 0; i < data.size(); ++i) {
    out[i] = cauchy_weight(std::sqrt(weights[i]) * (data[i] - data_model[i]), gamma);
  }
  return out;
}

WeightMap apply_outlier_exclusion(const WeightMap& weights, const Image2D& robust_weights, double threshold,
                                  const Mask2D& protect) {
  require_same_shape(weights, robust_weights, "apply_outlier_exclusion");
  require_same_shape(weights, protect, "apply_outlier_exclusion");
  WeightMap out = weights;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!protect[i] && robust_weights[i] <= threshold) out[i] = 0.0;
  }
  return out;
}

Image2D halo_residuals(const Image2D& data, const Image2D& data_model) { return data - data_model; }

namespace {

Mask2D support_of(const Image2D& img) {
  Mask2D m(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i) m[i] = img[i] > 0.0 ? 1 : 0;
  return m;
}

Mask2D invert(const Mask2D& m) {
  Mask2D out(m.width(), m.height());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i] ? 0 : 1;
  return out;
}

// Integer shift that moves the PSF centroid onto the grid center.
Pixel centering_shift(const Image2D& psf) {
  double sx = 0.0, sy = 0.0, s = 0.0;
  for (int y = 0; y < psf.height(); ++y) {
    for (int x = 0; x < psf.width(); ++x) {
      sx += x * psf(x, y);
      sy += y * psf(x, y);
      s += psf(x, y);
    }
  }
  const Pixel c = grid_center(psf);
  return {static_cast<int>(std::lround(c.x - sx / s)), static_cast<int>(std::lround(c.y - sy / s))};
}

}  // namespace

PipelineResult run_pipeline(const Image2D& data, const NoiseModel& noise, const CoreFitResult& core,
                            const PipelineConfig& cfg, const RoundObserver& observer) {
  validate(cfg.deconv);
  validate(cfg.segmentation);
  validate(cfg.robust);
  validate(noise);
  if (!all_finite(data)) throw DataError("run_pipeline: non-finite data");
  if (!core.binary_object.empty()) require_same_shape(data, core.binary_object, "run_pipeline");

  const int w = data.width();
  const int h = data.height();
  const Pixel c = grid_center(data);

  // PSF initialized with the fitted core, recentered on the grid, unit sum.
  MoffatParams core_shape = core.moffat;
  core_shape.x0 = c.x;
  core_shape.y0 = c.y;
  Image2D psf = moffat_eval(w, h, core_shape);
  psf = (1.0 / sum(psf)) * psf;

  Image2D robust(w, h, 1.0);
  WeightMap weights = weights_from_intensity(data, noise);

  Image2D object = core.binary_object.empty() ? data : apply_mask(data, core.binary_object);
  for (double& v : object) v = std::max(v, 0.0);
  Image2D segmented(w, h);
  Mask2D protect(w, h, 0);
  Mask2D excluded(w, h, 0);
  Image2D model(w, h);

  auto exclude = [&](WeightMap& wts) {
    WeightMap out = apply_outlier_exclusion(wts, robust, cfg.robust.w_rob_threshold, protect);
    if (cfg.robust.w_rob_body_threshold > 0.0) {
      out = apply_outlier_exclusion(out, robust, cfg.robust.w_rob_body_threshold, invert(protect));
    }
    for (std::size_t i = 0; i < out.size(); ++i) excluded[i] = out[i] == 0.0 && wts[i] != 0.0 ? 1 : 0;
    wts = std::move(out);
  };

  PipelineResult result;
  for (int round = 1; round <= cfg.deconv.n_alt; ++round) {
    RoundLog log;
    log.round = round;

    // Object deconvolution.
    if (round > cfg.deconv.n_wgt) exclude(weights);
    const ObjectDeconvResult obj = deconvolve_object(data, psf, weights, cfg.deconv, object);
    object = obj.object;
    log.obj_data_term = obj.data_term;
    log.obj_reg = obj.reg_term;
    log.obj_iterations = obj.solver.iterations;

    segmented = segment_object(object, cfg.segmentation);
    protect = dilate(support_of(segmented), cfg.segmentation.protect_radius);
    model = convolve(segmented, psf);
    weights = weights_from_intensity(model, noise);
    robust = update_robust_weights(data, model, weights, cfg.robust.gamma_cauchy);

    // PSF deconvolution.
    if (round > cfg.deconv.n_wgt) exclude(weights);
    const PsfDeconvResult wing = deconvolve_psf(data, segmented, weights, cfg.deconv, psf);
    log.psf_data_term = wing.data_term;
    log.psf_reg = wing.reg_term;
    log.psf_iterations = wing.solver.iterations;
    psf = wing.psf;
    object = wing.flux_scale * object;
    segmented = wing.flux_scale * segmented;

    const Pixel shift = centering_shift(psf);
    if (shift.x != 0 || shift.y != 0) {
      psf = roll(psf, shift.x, shift.y);
      object = roll(object, -shift.x, -shift.y);
      segmented = roll(segmented, -shift.x, -shift.y);
    }

    model = convolve(segmented, psf);
    weights = weights_from_intensity(model, noise);
    robust = update_robust_weights(data, model, weights, cfg.robust.gamma_cauchy);

    log.psf_sum = sum(psf);
    log.excluded = count(excluded);
    if (!std::isfinite(log.obj_data_term + log.obj_reg + log.psf_data_term + log.psf_reg)) {
      throw NumericalError("run_pipeline: non-finite cost in round " + std::to_string(round));
    }
    result.cost_log.push_back(log);
    if (observer) observer(log, psf);
  }

  if (cfg.deconv.n_alt == 0) {
    segmented = segment_object(object, cfg.segmentation);
    model = convolve(segmented, psf);
    weights = weights_from_intensity(model, noise);
    robust = update_robust_weights(data, model, weights, cfg.robust.gamma_cauchy);
  }

  result.object = object;
  result.object_segmented = segmented;
  result.psf = psf;
  result.data_model = model;
  result.halo_residuals = halo_residuals(data, model);
  result.robust_weights = robust;
  result.weights = weights;
  result.excluded_mask = excluded;
  return result;
}

}  // namespace aobd
