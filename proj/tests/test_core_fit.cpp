// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "aobd/convolve.hpp"
#include "aobd/core_fit.hpp"
#include "aobd/errors.hpp"
#include "aobd/image_ops.hpp"
#include "aobd/simplex.hpp"
#include "test_util.hpp"

using namespace aobd;

namespace {

Image2D mask_to_image_values(const Mask2D& m) {
  Image2D out(m.width(), m.height());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i];
  return out;
}

Mask2D ellipse(int n, double a, double b, double phi) {
  Mask2D m(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double u = x - n / 2;
      const double v = y - n / 2;
      const double p = std::cos(phi) * u + std::sin(phi) * v;
      const double q = -std::sin(phi) * u + std::cos(phi) * v;
      m(x, y) = p * p / (a * a) + q * q / (b * b) <= 1.0 ? 1 : 0;
    }
  }
  return m;
}

struct Synthetic {
  Mask2D support;
  MoffatParams psf;
  Image2D data;
  NoiseModel noise;
};

// Binary ellipse blurred by an exact Moffat core, Gaussian noise giving SNR 100 at the peak.
Synthetic make_synthetic(int n, double a, double b, double phi, unsigned seed, bool noisy = true) {
  Synthetic s;
  s.support = ellipse(n, a, b, phi);
  s.psf = MoffatParams{n / 2.0, n / 2.0, 4.0, 3.0, 1.7, 0.4, 1000.0};
  s.data = convolve(mask_to_image_values(s.support), moffat_eval(n, n, s.psf));
  const double peak = max_value(s.data);
  s.noise = NoiseModel{peak / 1e4, 1.0};
  if (noisy) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    for (double& v : s.data) v += std::sqrt(s.noise.variance(v)) * g(rng);
  }
  return s;
}

double hausdorff(const Mask2D& a, const Mask2D& b) {
  std::vector<Pixel> pa, pb;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      if (a(x, y)) pa.push_back({x, y});
      if (b(x, y)) pb.push_back({x, y});
    }
  }
  auto directed = [](const std::vector<Pixel>& from, const std::vector<Pixel>& to) {
    double worst = 0.0;
    for (const Pixel& p : from) {
      double best = 1e300;
      for (const Pixel& q : to) best = std::min(best, std::hypot(p.x - q.x, p.y - q.y));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(pa, pb), directed(pb, pa));
}

}  // namespace

TEST(Simplex, ConvexQuadratic) {
  auto f = [](std::span<const double> x) {
    const double a = x[0] - 1.5;
    const double b = x[1] + 0.5;
    return 3.0 * a * a + a * b + 2.0 * b * b;
  };
  const std::vector<double> x0{0.0, 0.0};
  SimplexOptions opt;
  opt.initial_step = {0.5, 0.5};
  const SimplexResult r = simplex_search(f, x0, opt);
  EXPECT_NEAR(r.x[0], 1.5, 1e-6);
  EXPECT_NEAR(r.x[1], -0.5, 1e-6);
}

TEST(Simplex, AlreadyAtMinimumDoesNotIncrease) {
  auto f = [](std::span<const double> x) { return x[0] * x[0] + x[1] * x[1] + 4.0; };
  const std::vector<double> x0{0.0, 0.0};
  const SimplexResult r = simplex_search(f, x0);
  EXPECT_LE(r.value, 4.0);
}

TEST(Simplex, RosenbrockDecreases) {
  auto f = [](std::span<const double> x) {
    return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
  };
  const std::vector<double> x0{-1.2, 1.0};
  const double f0 = f(x0);
  const SimplexResult r = simplex_search(f, x0);
  EXPECT_LE(r.value, 0.01 * f0);
  EXPECT_LE(r.iterations, 200);
}

TEST(Simplex, DeterministicAndRejectsNonFiniteStart) {
  auto f = [](std::span<const double> x) { return std::cos(3 * x[0]) + x[0] * x[0] + std::abs(x[1] - 0.3); };
  const std::vector<double> x0{0.8, -0.2};
  const SimplexResult a = simplex_search(f, x0);
  const SimplexResult b = simplex_search(f, x0);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.value, b.value);
  auto bad = [](std::span<const double>) { return std::nan(""); };
  EXPECT_THROW(simplex_search(bad, x0), std::invalid_argument);
}

TEST(Simplex, NonFiniteAwayFromStartIsRejected) {
  auto f = [](std::span<const double> x) { return x[0] < 0.0 ? INFINITY : (x[0] - 2.0) * (x[0] - 2.0); };
  const std::vector<double> x0{0.5};
  const SimplexResult r = simplex_search(f, x0);
  EXPECT_NEAR(r.x[0], 2.0, 1e-4);
}

TEST(CoreCost, SinglePixelArithmetic) {
  const Image2D d(1, 1, 3.0);
  const WeightMap w(1, 1, 2.0);
  const MoffatParams p{0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0};
  EXPECT_DOUBLE_EQ(core_cost(d, w, 3.0, p), 4.0);
}

TEST(CoreCost, ExactModelGivesZero) {
  // All pixels above threshold: thr = 1 everywhere, so the model is the flux of the kernel.
  const int n = 16;
  const MoffatParams p{8.0, 8.0, 2.0, 2.0, 2.0, 0.0, 1.0};
  const double flux = sum(moffat_eval(n, n, p));
  const Image2D d(n, n, flux);
  EXPECT_NEAR(core_cost(d, WeightMap(n, n, 1.0), flux, p), 0.0, 1e-20 * flux * flux);
}

TEST(CoreCost, MatchesLoopOracleOnRandomInstance) {
  const int n = 12;
  const Image2D d = aobd::testing::random_image(n, n, 4, 0.0, 10.0);
  const WeightMap w = aobd::testing::random_image(n, n, 5, 0.1, 2.0);
  const MoffatParams p{6.4, 5.7, 1.7, 1.1, 1.4, -0.6, 2.5};
  const double d_bar = 5.0;
  Image2D thr(n, n);
  for (std::size_t i = 0; i < d.size(); ++i) thr[i] = d[i] >= d_bar ? 1.0 : 0.0;
  const Image2D model = aobd::testing::brute_convolve(thr, moffat_eval(n, n, p));
  double oracle = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) oracle += 0.5 * w[i] * (d[i] - model[i]) * (d[i] - model[i]);
  EXPECT_NEAR(core_cost(d, w, d_bar, p), oracle, 1e-12 * oracle);
  EXPECT_THROW(core_cost(d, WeightMap(n, n + 1, 1.0), d_bar, p), std::invalid_argument);
}

TEST(CoreConfidence, FloorAndInverseVariance) {
  Image2D d(3, 1, std::vector<double>{100.0, 2.5, 40.0});
  const WeightMap w = core_confidence_map(d, {1.0, 4.0}, 0.025);
  EXPECT_DOUBLE_EQ(w[0], 1.0 / 104.0);
  EXPECT_EQ(w[1], 0.0);
  EXPECT_DOUBLE_EQ(w[2], 1.0 / 44.0);
}

TEST(FitCore, RecoversMoffatAtSnr100) {
  const Synthetic s = make_synthetic(256, 45.0, 30.0, 0.3, 1);
  const CoreFitResult r = fit_core(s.data, s.noise);
  const MoffatParams& m = r.moffat;
  EXPECT_NEAR(m.alpha1, s.psf.alpha1, 0.03 * s.psf.alpha1);
  EXPECT_NEAR(m.alpha2, s.psf.alpha2, 0.03 * s.psf.alpha2);
  EXPECT_NEAR(m.beta, s.psf.beta, 0.03 * s.psf.beta);
  EXPECT_NEAR(m.theta, s.psf.theta, 0.03 * s.psf.theta);
  EXPECT_NEAR(m.x0, s.psf.x0, 0.2);
  EXPECT_NEAR(m.y0, s.psf.y0, 0.2);
  EXPECT_GE(r.d_bar, min_value(s.data));
  EXPECT_LE(r.d_bar, max_value(s.data));
  EXPECT_GE(r.final_cost, 0.0);
}

TEST(FitCore, AlternationCostIsMonotone) {
  const Synthetic s = make_synthetic(128, 25.0, 15.0, 0.3, 2);
  const CoreFitResult r = fit_core(s.data, s.noise);
  ASSERT_EQ(r.cost_history.size(), 6u);
  for (std::size_t i = 1; i < r.cost_history.size(); ++i) EXPECT_LE(r.cost_history[i], r.cost_history[i - 1]);
  EXPECT_EQ(r.final_cost, r.cost_history.back());
}

TEST(FitCore, NoiseFreeSupportAgreement) {
  const Synthetic s = make_synthetic(128, 25.0, 15.0, 0.3, 0, false);
  const CoreFitResult r = fit_core(s.data, s.noise);
  std::size_t mismatch = 0;
  for (std::size_t i = 0; i < s.support.size(); ++i) mismatch += r.binary_object[i] != s.support[i];
  EXPECT_LE(static_cast<double>(mismatch), 0.02 * static_cast<double>(count(s.support)));
}

TEST(FitCore, SupportEdgeWithinThreePixels) {
  const Synthetic s = make_synthetic(128, 25.0, 15.0, 0.3, 3);
  const CoreFitResult r = fit_core(s.data, s.noise);
  EXPECT_LE(hausdorff(r.binary_object, s.support), 3.0);
}

TEST(FitCore, ScaleEquivariance) {
  const Synthetic s = make_synthetic(128, 25.0, 15.0, 0.3, 4);
  const CoreFitResult a = fit_core(s.data, s.noise);
  const NoiseModel scaled_noise{10.0 * s.noise.eta, 100.0 * s.noise.v_ron};
  const CoreFitResult b = fit_core(10.0 * s.data, scaled_noise);
  EXPECT_NEAR(b.moffat.gamma, 10.0 * a.moffat.gamma, 0.01 * 10.0 * a.moffat.gamma);
  EXPECT_NEAR(b.d_bar / max_value(10.0 * s.data), a.d_bar / max_value(s.data), 0.01 * a.d_bar / max_value(s.data));
  EXPECT_NEAR(b.moffat.alpha1, a.moffat.alpha1, 0.01 * a.moffat.alpha1);
  EXPECT_NEAR(b.moffat.alpha2, a.moffat.alpha2, 0.01 * a.moffat.alpha2);
  EXPECT_NEAR(b.moffat.beta, a.moffat.beta, 0.01 * a.moffat.beta);
  EXPECT_NEAR(b.moffat.theta, a.moffat.theta, 0.01 * std::abs(a.moffat.theta));
}

TEST(FitCore, MainBodyOnlyIgnoresIsolatedHotPixels) {
  Synthetic s = make_synthetic(128, 25.0, 15.0, 0.3, 5);
  const double peak = max_value(s.data);
  for (int k = 0; k < 20; ++k) s.data(5 + 5 * k, 8) = 1.5 * peak;
  const CoreFitResult r = fit_core(s.data, s.noise);
  EXPECT_NEAR(r.moffat.alpha1, s.psf.alpha1, 0.1 * s.psf.alpha1);
  EXPECT_EQ(r.binary_object(5, 8), 0);
}

TEST(FitCore, ObjectNotDetected) {
  EXPECT_THROW(fit_core(Image2D(32, 32, 0.0), {1.0, 1.0}), DataError);
  EXPECT_THROW(fit_core(Image2D(32, 32, -5.0), {1.0, 1.0}), DataError);
  Image2D bad(32, 32, 1.0);
  bad(3, 3) = std::nan("");
  EXPECT_THROW(fit_core(bad, {1.0, 1.0}), DataError);
}
