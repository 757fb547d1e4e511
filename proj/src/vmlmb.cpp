// SPDX-License-Identifier: Apache-2.0
#include "aobd/vmlmb.hpp"

#include <cmath>
#include <deque>

#include "aobd/errors.hpp"

namespace aobd {

namespace {

struct Pair {
  std::vector<double> s;
  std::vector<double> y;
};

double masked_dot(const std::vector<double>& a, const std::vector<double>& b, const std::vector<std::uint8_t>& free) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (free[i]) acc += a[i] * b[i];
  }
  return acc;
}

}  // namespace

VmlmbResult vmlmb_minimize(const ImageCostGrad& cost_grad, const Image2D& x0, const LowerBound& lower,
                           const VmlmbOptions& options) {
  if (lower.image) require_same_shape(x0, *lower.image, "vmlmb_minimize");
  const std::size_t n = x0.size();

  VmlmbResult res;
  res.x = x0;
  Image2D& x = res.x;
  for (std::size_t i = 0; i < n; ++i) x[i] = std::max(x[i], lower.at(i));

  Image2D g(x.width(), x.height());
  double f = cost_grad(x, g);
  ++res.evaluations;
  if (!std::isfinite(f)) throw NumericalError("vmlmb_minimize: non-finite cost at the starting point");
  res.history.push_back(f);

  std::deque<Pair> memory;
  std::vector<std::uint8_t> free(n);
  std::vector<double> q(n), d(n), alpha_buf;
  Image2D x_new(x.width(), x.height());
  Image2D g_new(x.width(), x.height());
  double gamma_scale = 0.0;
  const bool preconditioned = static_cast<bool>(options.diagonal_hessian);
  Image2D inv_metric(x.width(), x.height(), 1.0);

  while (res.iterations < options.max_iter) {
    // Free set and projected gradient.
    double pg_max = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      free[i] = !(x[i] <= lower.at(i) && g[i] > 0.0);
      if (free[i]) {
        pg_max = std::max(pg_max, std::abs(g[i]));
      }
    }
    if (pg_max == 0.0) {
      res.status = VmlmbStatus::ProjectedGradientZero;
      break;
    }
    if (preconditioned) {
      options.diagonal_hessian(x, inv_metric);
      for (double& v : inv_metric) v = v > 0.0 && std::isfinite(v) ? 1.0 / v : 0.0;
    }

    // Two-loop recursion restricted to the free variables.
    for (std::size_t i = 0; i < n; ++i) q[i] = free[i] ? g[i] : 0.0;
    alpha_buf.assign(memory.size(), 0.0);
    std::vector<double> rho(memory.size(), 0.0);
    double sy_last = 0.0;
    double yy_last = 0.0;
    for (std::size_t k = memory.size(); k-- > 0;) {
      const double sy = masked_dot(memory[k].s, memory[k].y, free);
      if (sy <= 0.0) continue;
      rho[k] = 1.0 / sy;
      alpha_buf[k] = rho[k] * masked_dot(memory[k].s, q, free);
      for (std::size_t i = 0; i < n; ++i) {
        if (free[i]) q[i] -= alpha_buf[k] * memory[k].y[i];
      }
      if (sy_last == 0.0) {
        sy_last = sy;
        for (std::size_t i = 0; i < n; ++i) {
          if (free[i]) yy_last += memory[k].y[i] * memory[k].y[i] * inv_metric[i];
        }
      }
    }
    bool quasi_newton = sy_last > 0.0 && yy_last > 0.0;
    if (quasi_newton) gamma_scale = sy_last / yy_last;
    if (quasi_newton) {
      for (std::size_t i = 0; i < n; ++i) q[i] *= gamma_scale * inv_metric[i];
      for (std::size_t k = 0; k < memory.size(); ++k) {
        if (rho[k] == 0.0) continue;
        const double beta = rho[k] * masked_dot(memory[k].y, q, free);
        for (std::size_t i = 0; i < n; ++i) {
          if (free[i]) q[i] += (alpha_buf[k] - beta) * memory[k].s[i];
        }
      }
    }
    double gd = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d[i] = free[i] ? -q[i] : 0.0;
      gd += g[i] * d[i];
    }
    double step = 1.0;
    if (!quasi_newton || !(gd < 0.0)) {
      // Steepest descent with a step scaled to the current iterate.
      memory.clear();
      gd = 0.0;
      double x_max = 0.0;
      double pd_max = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        d[i] = free[i] ? -inv_metric[i] * g[i] : 0.0;
        gd += g[i] * d[i];
        x_max = std::max(x_max, std::abs(x[i]));
        pd_max = std::max(pd_max, std::abs(d[i]));
      }
      if (preconditioned) {
        step = gamma_scale > 0.0 ? gamma_scale : 1.0;
      } else {
        step = gamma_scale > 0.0 ? gamma_scale : (x_max > 0.0 ? 0.1 * x_max / pd_max : 1.0 / pd_max);
      }
    }

    // Projected backtracking line search.
    bool accepted = false;
    double f_new = f;
    for (int bt = 0; bt < options.max_backtracks; ++bt) {
      double gdelta = 0.0;
      bool moved = false;
      for (std::size_t i = 0; i < n; ++i) {
        x_new[i] = std::max(x[i] + step * d[i], lower.at(i));
        const double delta = x_new[i] - x[i];
        moved |= delta != 0.0;
        gdelta += g[i] * delta;
      }
      if (!moved) break;
      f_new = cost_grad(x_new, g_new);
      ++res.evaluations;
      if (std::isfinite(f_new) && f_new <= f + options.armijo * gdelta && gdelta < 0.0) {
        accepted = true;
        break;
      }
      if (std::isfinite(f_new) && gdelta < 0.0) {
        // Safeguarded quadratic interpolation along the projected path.
        const double curvature = f_new - f - gdelta;
        double factor = curvature > 0.0 ? -0.5 * gdelta / curvature : 0.5;
        step *= std::clamp(factor, 0.1, 0.5);
      } else {
        step *= 0.1;
      }
    }
    if (!accepted) {
      if (!memory.empty()) {
        memory.clear();
        continue;  // retry once from steepest descent
      }
      res.status = VmlmbStatus::LineSearchStalled;
      break;
    }

    Pair p{std::vector<double>(n), std::vector<double>(n)};
    double sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      p.s[i] = x_new[i] - x[i];
      p.y[i] = g_new[i] - g[i];
      sy += p.s[i] * p.y[i];
    }
    if (sy > 0.0) {
      memory.push_back(std::move(p));
      if (static_cast<int>(memory.size()) > options.memory) memory.pop_front();
    }
    std::swap(x.storage(), x_new.storage());
    std::swap(g.storage(), g_new.storage());
    f = f_new;
    ++res.iterations;
    res.history.push_back(f);

    const auto w = static_cast<std::size_t>(options.ftol_window);
    if (res.history.size() > w) {
      const double past = res.history[res.history.size() - 1 - w];
      if (past - f <= options.ftol * std::abs(f)) {
        res.status = VmlmbStatus::Converged;
        break;
      }
    }
  }
  res.cost = f;
  return res;
}

}  // namespace aobd
