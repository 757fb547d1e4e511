// SPDX-License-Identifier: Apache-2.0
#include "aobd/noise_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

#include "aobd/errors.hpp"
#include "aobd/image_ops.hpp"

namespace aobd {

void validate(const NoiseModel& model) {
  if (!std::isfinite(model.eta) || !std::isfinite(model.v_ron) || model.eta < 0.0 || model.v_ron < 0.0 ||
      (model.eta == 0.0 && model.v_ron == 0.0)) {
    throw std::invalid_argument("NoiseModel: eta and v_ron must be non-negative, finite and not both zero");
  }
}

WeightMap weights_from_intensity(const Image2D& intensity, const NoiseModel& model) {
  validate(model);
  WeightMap w(intensity.width(), intensity.height());
  for (std::size_t i = 0; i < intensity.size(); ++i) {
    if (!std::isfinite(intensity[i])) throw std::invalid_argument("weights_from_intensity: non-finite intensity");
    const double var = model.variance(intensity[i]);
    if (!(var > 0.0)) throw std::invalid_argument("weights_from_intensity: non-positive variance");
    w[i] = 1.0 / var;
  }
  return w;
}

std::vector<ArcStats> collect_arcs(const Image2D& data, const Image2D& noise_map, double cx, double cy,
                                   const ArcGeometry& geometry) {
  require_same_shape(data, noise_map, "collect_arcs");
  if (!(geometry.width > 0.0) || !(geometry.length > 0.0)) {
    throw std::invalid_argument("collect_arcs: arc width and length must be positive");
  }
  struct Acc {
    double sum = 0.0;
    double nsum = 0.0;
    double nsq = 0.0;
    int n = 0;
  };
  std::map<std::pair<int, int>, Acc> cells;
  for (int y = 0; y < data.height(); ++y) {
    for (int x = 0; x < data.width(); ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      const double r = std::hypot(dx, dy);
      const int ring = static_cast<int>(r / geometry.width);
      const double r_mid = (ring + 0.5) * geometry.width;
      const int n_seg = std::max(1, static_cast<int>(std::lround(2.0 * std::numbers::pi * r_mid / geometry.length)));
      const double phi = std::atan2(dy, dx) + std::numbers::pi;  // [0, 2 pi]
      const int seg = std::min(n_seg - 1, static_cast<int>(phi / (2.0 * std::numbers::pi) * n_seg));
      Acc& a = cells[{ring, seg}];
      a.sum += data(x, y);
      const double nv = noise_map(x, y);
      a.nsum += nv;
      a.nsq += nv * nv;
      ++a.n;
    }
  }
  std::vector<ArcStats> arcs;
  for (const auto& [key, a] : cells) {
    if (a.n < std::max(2, geometry.min_pixels)) continue;
    ArcStats s;
    s.pixels = a.n;
    s.mean = a.sum / a.n;
    const double nmean = a.nsum / a.n;
    s.variance = std::max(0.0, (a.nsq - a.n * nmean * nmean) / (a.n - 1));
    arcs.push_back(s);
  }
  return arcs;
}

namespace {

double median_of(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

// Minimizer of sum_i w_i |y_i - k| over k.
double weighted_median(std::vector<std::pair<double, double>> value_weight) {
  std::sort(value_weight.begin(), value_weight.end());
  double total = 0.0;
  for (const auto& [v, w] : value_weight) total += w;
  double acc = 0.0;
  for (const auto& [v, w] : value_weight) {
    acc += w;
    if (acc >= 0.5 * total) return v;
  }
  return value_weight.back().first;
}

struct Line {
  double eta = 0.0;
  double v0 = 0.0;
};

double l1_objective(const Line& l, std::span<const double> m, std::span<const double> v,
                    const std::vector<std::size_t>& idx) {
  double acc = 0.0;
  for (auto i : idx) acc += std::abs(v[i] - (l.eta * m[i] + l.v0));
  return acc;
}

bool distinct_means(std::span<const double> m, const std::vector<std::size_t>& idx) {
  for (auto i : idx) {
    if (m[i] != m[idx.front()]) return true;
  }
  return false;
}

// L1 affine fit restricted to eta >= 0, v0 >= 0 on the points in `idx`.
Line l1_affine(std::span<const double> m, std::span<const double> v, const std::vector<std::size_t>& idx,
               int irls_iterations) {
  std::vector<double> vs;
  vs.reserve(idx.size());
  for (auto i : idx) vs.push_back(std::abs(v[i]));
  double eps = 1e-8 * median_of(vs);
  if (!(eps > 0.0)) eps = 1e-8 * (*std::max_element(vs.begin(), vs.end()) + 1e-300);

  auto solve = [&](const std::vector<double>& wts, Line& out) {
    double sw = 0, sm = 0, sv = 0, smm = 0, smv = 0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const double w = wts[k];
      const double mi = m[idx[k]];
      const double vi = v[idx[k]];
      sw += w;
      sm += w * mi;
      sv += w * vi;
      smm += w * mi * mi;
      smv += w * mi * vi;
    }
    const double det = sw * smm - sm * sm;
    if (!(std::abs(det) > 1e-300)) return false;
    out.eta = (sw * smv - sm * sv) / det;
    out.v0 = (smm * sv - sm * smv) / det;
    return true;
  };

  std::vector<double> wts(idx.size(), 1.0);
  Line line;
  if (!solve(wts, line)) throw DataError("robust_affine_fit: degenerate input (all means equal)");
  for (int it = 0; it < irls_iterations; ++it) {
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const double r = v[idx[k]] - (line.eta * m[idx[k]] + line.v0);
      wts[k] = 1.0 / std::sqrt(r * r + eps * eps);
    }
    Line next;
    if (!solve(wts, next)) break;
    line = next;
  }

  // The L1 optimum sits on a line through two data points; snap to the pair
  // with the smallest residuals when that does not increase the objective.
  std::vector<std::size_t> by_residual(idx.begin(), idx.end());
  std::sort(by_residual.begin(), by_residual.end(), [&](auto a, auto b) {
    return std::abs(v[a] - (line.eta * m[a] + line.v0)) < std::abs(v[b] - (line.eta * m[b] + line.v0));
  });
  for (std::size_t k = 1; k < by_residual.size(); ++k) {
    const auto a = by_residual[0];
    const auto b = by_residual[k];
    if (m[a] == m[b]) continue;
    Line snap;
    snap.eta = (v[b] - v[a]) / (m[b] - m[a]);
    snap.v0 = v[a] - snap.eta * m[a];
    if (l1_objective(snap, m, v, idx) <= l1_objective(line, m, v, idx)) line = snap;
    break;
  }

  if (line.eta >= 0.0 && line.v0 >= 0.0) return line;

  // Boundary solutions: eta = 0 (constant fit) or v0 = 0 (proportional fit).
  Line flat;
  flat.v0 = std::max(0.0, median_of([&] {
                          std::vector<double> t;
                          for (auto i : idx) t.push_back(v[i]);
                          return t;
                        }()));
  Line prop;
  std::vector<std::pair<double, double>> ratios;
  for (auto i : idx) {
    if (m[i] != 0.0) ratios.emplace_back(v[i] / m[i], std::abs(m[i]));
  }
  if (!ratios.empty()) prop.eta = std::max(0.0, weighted_median(ratios));
  return l1_objective(flat, m, v, idx) <= l1_objective(prop, m, v, idx) ? flat : prop;
}

}  // namespace

NoiseModel robust_affine_fit(std::span<const double> means, std::span<const double> variances,
                             const AffineFitOptions& options, std::vector<bool>* valid_out) {
  if (means.size() != variances.size()) throw std::invalid_argument("robust_affine_fit: size mismatch");
  if (means.size() < 3) throw DataError("robust_affine_fit: at least 3 points are required");
  std::vector<std::size_t> valid(means.size());
  for (std::size_t i = 0; i < valid.size(); ++i) valid[i] = i;
  if (!distinct_means(means, valid)) throw DataError("robust_affine_fit: degenerate input (all means equal)");

  Line line;
  for (int round = 0; round < options.clip_rounds; ++round) {
    line = l1_affine(means, variances, valid, options.irls_iterations);
    std::vector<double> abs_res;
    abs_res.reserve(valid.size());
    for (auto i : valid) abs_res.push_back(std::abs(variances[i] - (line.eta * means[i] + line.v0)));
    const double sigma = 1.4826 * median_of(abs_res);
    double scale = 0.0;
    for (double vv : variances) scale = std::max(scale, std::abs(vv));
    const double tol = std::max(options.clip_sigma * sigma, 1e-12 * scale);
    std::vector<std::size_t> next;
    for (std::size_t i = 0; i < means.size(); ++i) {
      const double r = std::abs(variances[i] - (line.eta * means[i] + line.v0));
      if (r < tol || (sigma == 0.0 && r <= tol)) next.push_back(i);
    }
    if (next.size() < 2 || !distinct_means(means, next)) break;
    valid = std::move(next);
  }
  if (valid_out) {
    valid_out->assign(means.size(), false);
    for (auto i : valid) (*valid_out)[i] = true;
  }
  return {line.eta, line.v0};
}

NoiseFit fit_noise_model(const Image2D& data, Pixel center, const ArcGeometry& geometry,
                         const AffineFitOptions& options) {
  if (!data.contains(center.x, center.y)) throw std::invalid_argument("fit_noise_model: center outside grid");
  const Image2D noise_map = data - median_filter(data, 5);
  NoiseFit fit;
  fit.arcs = collect_arcs(data, noise_map, center.x, center.y, geometry);
  if (fit.arcs.size() < 3) throw DataError("fit_noise_model: insufficient arcs");
  std::vector<double> means, vars;
  for (const auto& a : fit.arcs) {
    means.push_back(a.mean);
    vars.push_back(a.variance);
  }
  std::vector<bool> valid;
  fit.model = robust_affine_fit(means, vars, options, &valid);
  fit.valid_arcs = 0;
  for (std::size_t i = 0; i < fit.arcs.size(); ++i) {
    fit.arcs[i].valid = valid[i];
    fit.valid_arcs += valid[i] ? 1 : 0;
  }
  return fit;
}

}  // namespace aobd
