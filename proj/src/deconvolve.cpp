// SPDX-License-Identifier: Apache-2.0
#include "aobd/deconvolve.hpp"

#include <algorithm>
#include <cmath>

#include "aobd/convolve.hpp"
#include "aobd/errors.hpp"

namespace aobd {

void validate(const RobustConfig& cfg) {
  if (!(cfg.gamma_cauchy > 0.0)) throw ConfigError("gamma_cauchy must be positive");
  if (!(cfg.w_rob_threshold >= 0.0 && cfg.w_rob_threshold <= 1.0)) {
    throw ConfigError("w_rob_threshold must lie in [0, 1]");
  }
  if (!(cfg.w_rob_body_threshold >= 0.0 && cfg.w_rob_body_threshold <= 1.0)) {
    throw ConfigError("w_rob_body_threshold must lie in [0, 1]");
  }
}

void validate(const DeconvConfig& cfg) {
  if (!(cfg.mu_obj >= 0.0) || !(cfg.mu_psf >= 0.0)) throw ConfigError("mu_obj and mu_psf must be >= 0");
  if (!(cfg.eps_obj > 0.0)) throw ConfigError("eps_obj must be > 0");
  if (!(cfg.h_min_frac > 0.0 && cfg.h_min_frac < 1.0)) throw ConfigError("h_min_frac must lie in (0, 1)");
  if (cfg.n_alt < 0 || cfg.n_wgt < 0 || cfg.n_wgt > cfg.n_alt) {
    throw ConfigError("need 0 <= n_wgt <= n_alt");
  }
  if (cfg.max_iter < 0) throw ConfigError("max_iter must be >= 0");
}

namespace {

// Residual-weighted data term for model = conv(x); grad_model = -w (d - model).
double data_term(const Image2D& data, const WeightMap& w, const Image2D& model, Image2D& grad_model) {
  double acc = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double r = data[i] - model[i];
    const double wr = w[i] * r;
    acc += wr * r;
    grad_model[i] = -wr;
  }
  return 0.5 * acc;
}

}  // namespace

ObjectDeconvResult deconvolve_object(const Image2D& data, const Image2D& psf, const WeightMap& weights,
                                     const DeconvConfig& cfg, const Image2D& init) {
  require_same_shape(data, psf, "deconvolve_object");
  require_same_shape(data, weights, "deconvolve_object");
  require_same_shape(data, init, "deconvolve_object");
  validate(cfg);
  const Convolver conv(psf, Origin::Center, Origin::Corner);
  Image2D grad_model(data.width(), data.height());

  auto cost_grad = [&](const Image2D& o, Image2D& grad) {
    const Image2D model = conv.apply(o);
    double f = data_term(data, weights, model, grad_model);
    const Image2D g = conv.adjoint(grad_model);
    if (cfg.mu_obj > 0.0) {
      const CostGrad reg = reg_obj_cost_grad(o, cfg.eps_obj);
      f += cfg.mu_obj * reg.value;
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = g[i] + cfg.mu_obj * reg.gradient[i];
    } else {
      grad = g;
    }
    return f;
  };

  // Diagonal metric: data curvature sum_x w(x) h(x - i)^2 plus the curvature of
  // the edge-preserving term for the three differences that involve pixel i.
  const Image2D data_diag =
      Convolver(map(psf, [](double v) { return v * v; }), Origin::Center, Origin::Corner).adjoint(weights);
  VmlmbOptions opts = cfg.solver;
  opts.max_iter = cfg.max_iter;
  opts.diagonal_hessian = [&](const Image2D& o, Image2D& diag) {
    const int w = o.width();
    const int h = o.height();
    Image2D inv_norm(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double d1 = o((x + 1) % w, y) - o(x, y);
        const double d2 = o(x, (y + 1) % h) - o(x, y);
        inv_norm(x, y) = 1.0 / std::sqrt(d1 * d1 + d2 * d2 + cfg.eps_obj * cfg.eps_obj);
      }
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double reg = 2.0 * inv_norm(x, y) + inv_norm((x + w - 1) % w, y) + inv_norm(x, (y + h - 1) % h);
        diag(x, y) = data_diag(x, y) + cfg.mu_obj * reg;
      }
    }
  };
  ObjectDeconvResult res;
  res.solver = vmlmb_minimize(cost_grad, init, LowerBound{0.0, std::nullopt}, opts);
  res.object = res.solver.x;
  Image2D scratch(data.width(), data.height());
  res.data_term = data_term(data, weights, conv.apply(res.object), scratch);
  res.reg_term = reg_obj_cost_grad(res.object, cfg.eps_obj).value;
  return res;
}

PsfDeconvResult deconvolve_psf(const Image2D& data, const Image2D& object_segmented, const WeightMap& weights,
                               const DeconvConfig& cfg, const Image2D& init) {
  require_same_shape(data, object_segmented, "deconvolve_psf");
  require_same_shape(data, weights, "deconvolve_psf");
  require_same_shape(data, init, "deconvolve_psf");
  validate(cfg);
  if (std::none_of(object_segmented.begin(), object_segmented.end(), [](double v) { return v != 0.0; })) {
    throw DataError("deconvolve_psf: empty kernel");
  }
  const double peak = max_value(init);
  if (!(peak > 0.0)) throw std::invalid_argument("deconvolve_psf: initial PSF must have a positive peak");
  const double h_min = cfg.h_min_frac * peak;

  const Convolver conv(object_segmented, Origin::Corner, Origin::Center);
  Image2D grad_model(data.width(), data.height());
  auto cost_grad = [&](const Image2D& h, Image2D& grad) {
    const Image2D model = conv.apply(h);
    double f = data_term(data, weights, model, grad_model);
    const Image2D g = conv.adjoint(grad_model);
    if (cfg.mu_psf > 0.0) {
      const CostGrad reg = reg_psf_cost_grad(h, h_min);
      f += cfg.mu_psf * reg.value;
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = g[i] + cfg.mu_psf * reg.gradient[i];
    } else {
      grad = g;
    }
    return f;
  };

  // Gauss-Newton diagonal: data curvature sum_x w(x) o(x - i)^2 plus the
  // log-gradient term, about 8 mu / h^2 per pixel.
  const Image2D data_diag =
      Convolver(map(object_segmented, [](double v) { return v * v; }), Origin::Corner, Origin::Center)
          .adjoint(weights);
  VmlmbOptions opts = cfg.solver;
  opts.max_iter = cfg.max_iter;
  opts.diagonal_hessian = [&](const Image2D& h, Image2D& diag) {
    for (std::size_t i = 0; i < diag.size(); ++i) {
      const double hi = std::max(h[i], h_min);
      diag[i] = data_diag[i] + 8.0 * cfg.mu_psf / (hi * hi);
    }
  };
  PsfDeconvResult res;
  res.solver = vmlmb_minimize(cost_grad, init, LowerBound{h_min, std::nullopt}, opts);
  Image2D scratch(data.width(), data.height());
  res.data_term = data_term(data, weights, conv.apply(res.solver.x), scratch);
  res.reg_term = reg_psf_cost_grad(res.solver.x, h_min).value;
  res.flux_scale = sum(res.solver.x);
  res.psf = (1.0 / res.flux_scale) * res.solver.x;
  return res;
}

}  // namespace aobd
