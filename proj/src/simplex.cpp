// SPDX-License-Identifier: Apache-2.0
#include "aobd/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace aobd {

SimplexResult simplex_search(const ScalarObjective& objective, std::span<const double> x0,
                             const SimplexOptions& options) {
  const std::size_t n = x0.size();
  if (n == 0) throw std::invalid_argument("simplex_search: empty parameter vector");
  if (!options.initial_step.empty() && options.initial_step.size() != n) {
    throw std::invalid_argument("simplex_search: initial_step size mismatch");
  }

  SimplexResult result;
  auto eval = [&](const std::vector<double>& x) {
    ++result.evaluations;
    const double v = objective(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<std::vector<double>> pts(n + 1, std::vector<double>(x0.begin(), x0.end()));
  std::vector<double> f(n + 1);
  f[0] = objective(pts[0]);
  ++result.evaluations;
  if (!std::isfinite(f[0])) throw std::invalid_argument("simplex_search: objective not finite at x0");
  for (std::size_t i = 0; i < n; ++i) {
    double step;
    if (!options.initial_step.empty()) {
      step = options.initial_step[i];
    } else {
      step = x0[i] != 0.0 ? 0.05 * x0[i] : 0.00025;
    }
    pts[i + 1][i] += step;
    f[i + 1] = eval(pts[i + 1]);
  }

  std::vector<std::size_t> order(n + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return f[a] < f[b]; });
    std::vector<std::vector<double>> p2(n + 1);
    std::vector<double> f2(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      p2[i] = std::move(pts[order[i]]);
      f2[i] = f[order[i]];
    }
    pts = std::move(p2);
    f = std::move(f2);
  };
  sort_simplex();

  std::vector<double> centroid(n), xr(n), xe(n), xc(n);
  auto affine = [&](std::vector<double>& out, double t) {
    // out = centroid + t * (centroid - worst)
    for (std::size_t j = 0; j < n; ++j) out[j] = centroid[j] + t * (centroid[j] - pts[n][j]);
  };

  while (result.iterations < options.max_iter) {
    double fspread = 0.0;
    double xspread = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      fspread = std::max(fspread, std::abs(f[i] - f[0]));
      for (std::size_t j = 0; j < n; ++j) xspread = std::max(xspread, std::abs(pts[i][j] - pts[0][j]));
    }
    if (fspread <= options.tol_f && xspread <= options.tol_x) {
      result.converged = true;
      break;
    }
    ++result.iterations;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) centroid[j] += pts[i][j];
    }
    for (double& c : centroid) c /= static_cast<double>(n);

    affine(xr, 1.0);
    const double fr = eval(xr);
    bool shrink = false;
    if (fr < f[0]) {
      affine(xe, 2.0);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[n] = xe;
        f[n] = fe;
      } else {
        pts[n] = xr;
        f[n] = fr;
      }
    } else if (fr < f[n - 1]) {
      pts[n] = xr;
      f[n] = fr;
    } else {
      if (fr < f[n]) {
        affine(xc, 0.5);  // outside contraction
        const double fc = eval(xc);
        if (fc <= fr) {
          pts[n] = xc;
          f[n] = fc;
        } else {
          shrink = true;
        }
      } else {
        affine(xc, -0.5);  // inside contraction
        const double fc = eval(xc);
        if (fc < f[n]) {
          pts[n] = xc;
          f[n] = fc;
        } else {
          shrink = true;
        }
      }
    }
    if (shrink) {
      for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 0; j < n; ++j) pts[i][j] = pts[0][j] + 0.5 * (pts[i][j] - pts[0][j]);
        f[i] = eval(pts[i]);
      }
    }
    sort_simplex();
  }

  result.x = pts[0];
  result.value = f[0];
  return result;
}

}  // namespace aobd
