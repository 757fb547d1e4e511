// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "aobd/convolve.hpp"
#include "aobd/core_fit.hpp"
#include "aobd/costs.hpp"
#include "aobd/errors.hpp"
#include "aobd/evaluate.hpp"
#include "aobd/image_ops.hpp"
#include "aobd/moffat.hpp"
#include "aobd/pipeline.hpp"
#include "aobd/simulate.hpp"
#include "test_util.hpp"

using namespace aobd;

namespace {

Image2D flat_ellipse(int n, double cx, double cy, double a, double b, double level) {
  Image2D o(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double u = (x - cx) / a;
      const double v = (y - cy) / b;
      o(x, y) = u * u + v * v <= 1.0 ? level : 0.0;
    }
  }
  return o;
}

Mask2D support(const Image2D& img) {
  Mask2D m(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i) m[i] = img[i] != 0.0 ? 1 : 0;
  return m;
}

struct DeskScene {
  Image2D obj;
  Image2D psf;
  NuisanceSpec nuisance;
  Dataset dataset;
};

// 64 x 64 analogue of the validation scenario.
DeskScene desk_scene(std::uint64_t seed, bool with_outliers) {
  DeskScene s;
  const int n = 64;
  s.obj = make_scenario_object(n, n, 8.0, 1e4);
  s.psf = make_synthetic_psf(n, n, SyntheticPsfSpec{}, seed);
  s.nuisance.noise = NoiseModel{1.0, 4.0};
  if (with_outliers) {
    s.nuisance.salt_pepper_fraction = 0.002;
    s.nuisance.n_cosmic_rays = 5;
    const double seps[3] = {18.0, 23.0, 28.0};
    const double angles[3] = {2.75, 4.3, 5.9};
    const double contrasts[3] = {1e-2, 3e-3, 1e-3};
    for (int k = 0; k < 3; ++k) {
      s.nuisance.moons.push_back({seps[k] * std::cos(angles[k]), seps[k] * std::sin(angles[k]), contrasts[k]});
    }
  }
  s.dataset = make_dataset(s.obj, s.psf, s.nuisance, seed);
  return s;
}

struct DeskRun {
  DeskScene scene;
  PipelineResult result;
  std::vector<double> psf_sums;
  std::vector<RoundLog> logs;
};

DeskRun run_desk(std::uint64_t seed, bool with_outliers, int n_alt = 6) {
  DeskRun run;
  run.scene = desk_scene(seed, with_outliers);
  const CoreFitResult core = fit_core(run.scene.dataset.data, run.scene.nuisance.noise);
  PipelineConfig cfg;
  cfg.deconv.n_alt = n_alt;
  run.result = run_pipeline(run.scene.dataset.data, run.scene.nuisance.noise, core, cfg,
                            [&](const RoundLog& log, const Image2D& psf) {
                              run.psf_sums.push_back(sum(psf));
                              run.logs.push_back(log);
                            });
  return run;
}

// Golden-section minimization of f on [lo, hi].
template <class F>
double golden_section(F f, double lo, double hi, double tol) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

TEST(SegmentObject, DistantSpeckIsRemoved) {
  const int n = 64;
  Image2D obj = flat_ellipse(n, 28.0, 30.0, 10.0, 7.0, 1000.0);
  for (int y = 50; y < 55; ++y) {
    for (int x = 50; x < 55; ++x) obj(x, y) = 300.0;
  }
  const Image2D seg = segment_object(obj, SegmentationConfig{});
  EXPECT_EQ(seg(52, 52), 0.0);
  const Mask2D ellipse = support(flat_ellipse(n, 28.0, 30.0, 10.0, 7.0, 1.0));
  for (std::size_t i = 0; i < seg.size(); ++i) {
    if (ellipse[i]) EXPECT_EQ(seg[i], obj[i]);
  }
}

TEST(SegmentObject, CompactObjectKeepsItsSupport) {
  const int n = 48;
  Image2D obj(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) obj(x, y) = 500.0 * std::exp(-((x - 24.0) * (x - 24.0) + (y - 20.0) * (y - 20.0)) / 40.0);
  }
  const Image2D seg = segment_object(obj, SegmentationConfig{});
  // Oracle: pixels whose median-filtered value clears 20% of the filtered maximum, grown by one pixel.
  const Image2D med = median_filter(obj, 5);
  const Mask2D core = threshold_mask(med, 0.2 * max_value(med));
  const Mask2D grown = dilate(core, 1);
  for (std::size_t i = 0; i < seg.size(); ++i) {
    if (core[i]) EXPECT_EQ(seg[i], obj[i]);
    if (!grown[i]) EXPECT_EQ(seg[i], 0.0);
  }
  for (double v : seg) EXPECT_GE(v, 0.0);
}

TEST(SegmentObject, Errors) {
  EXPECT_THROW(segment_object(Image2D(16, 16), SegmentationConfig{}), DataError);
  SegmentationConfig bad;
  bad.d_sup_frac = 1.0;
  EXPECT_THROW(segment_object(Image2D(16, 16, 1.0), bad), ConfigError);
}

TEST(RobustWeights, Examples) {
  const Image2D data = aobd::testing::random_image(8, 8, 1, 0.0, 10.0);
  const WeightMap w(8, 8, 1.0);
  for (double v : update_robust_weights(data, data, w, kCauchyGamma)) EXPECT_EQ(v, 1.0);

  const Image2D model(1, 1, 0.0);
  EXPECT_NEAR(update_robust_weights(Image2D(1, 1, kCauchyGamma), model, WeightMap(1, 1, 1.0), kCauchyGamma)[0], 0.5,
              1e-12);
  // A 50 sigma cosmic ray under variance 4.
  const double r = update_robust_weights(Image2D(1, 1, 100.0), model, WeightMap(1, 1, 0.25), kCauchyGamma)[0];
  EXPECT_LE(r, 0.01);
  EXPECT_NEAR(r, 1.0 / (1.0 + 2500.0 / (kCauchyGamma * kCauchyGamma)), 1e-15);
}

TEST(OutlierExclusion, Examples) {
  WeightMap w(3, 1, 2.0);
  Image2D rob(3, 1, 1.0);
  const Mask2D none(3, 1, 0);
  const WeightMap same = apply_outlier_exclusion(w, rob, 0.5, none);
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_EQ(same[i], w[i]);

  rob[1] = 0.3;
  const WeightMap cut = apply_outlier_exclusion(w, rob, 0.5, none);
  EXPECT_EQ(cut[0], 2.0);
  EXPECT_EQ(cut[1], 0.0);
  EXPECT_EQ(cut[2], 2.0);

  Mask2D protect(3, 1, 0);
  protect[1] = 1;
  EXPECT_EQ(apply_outlier_exclusion(w, rob, 0.5, protect)[1], 2.0);
  rob[2] = 0.5;
  EXPECT_EQ(apply_outlier_exclusion(w, rob, 0.5, none)[2], 0.0);
}

TEST(HaloResiduals, DataEqualsModel) {
  const Image2D d = aobd::testing::random_image(9, 5, 2);
  for (double v : halo_residuals(d, d)) EXPECT_EQ(v, 0.0);
  const Image2D m = aobd::testing::random_image(9, 5, 3);
  const Image2D r = halo_residuals(d, m);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(r[i], d[i] - m[i]);
}

TEST(RunPipeline, NoiseFreeExactMoffatRoundTrip) {
  const int n = 64;
  const MoffatParams core{0.0, 0.0, 3.0, 2.5, 1.8, 0.4, 1.0};
  MoffatParams centered = core;
  centered.x0 = n / 2;
  centered.y0 = n / 2;
  Image2D psf = moffat_eval(n, n, centered);
  psf = (1.0 / sum(psf)) * psf;
  const Image2D obj = flat_ellipse(n, 32.0, 32.0, 9.0, 6.0, 1000.0);
  const Image2D data = convolve(obj, psf);
  CoreFitResult fit;
  fit.moffat = centered;
  fit.binary_object = support(obj);
  PipelineConfig cfg;
  cfg.deconv.n_alt = 1;
  cfg.deconv.eps_obj = 20.0;
  const PipelineResult r = run_pipeline(data, NoiseModel{0.0, 1e-2}, fit, cfg);
  double ss = 0.0;
  for (double v : r.halo_residuals) ss += v * v;
  EXPECT_LE(std::sqrt(ss / data.size()), 1e-3 * max_value(data));
}

TEST(RunPipeline, DeskScenarioRecoveryAndInvariants) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const DeskRun run = run_desk(seed, true);
    const PipelineResult& r = run.result;
    ASSERT_EQ(run.psf_sums.size(), 6u);
    for (double s : run.psf_sums) EXPECT_NEAR(s, 1.0, 1e-12) << "seed " << seed;
    for (double v : r.object) EXPECT_GE(v, 0.0);
    for (double v : r.psf) EXPECT_GT(v, 0.0);
    for (double v : r.weights) EXPECT_GE(v, 0.0);
    for (double v : r.robust_weights) {
      EXPECT_GT(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    const Image2D model = convolve(r.object_segmented, r.psf);
    for (std::size_t i = 0; i < model.size(); ++i) EXPECT_EQ(r.data_model[i], model[i]);
    for (std::size_t i = 0; i < model.size(); ++i) EXPECT_EQ(r.halo_residuals[i], run.scene.dataset.data[i] - model[i]);

    const RecoveryMetrics m = evaluate_recovery(run.scene.obj, run.scene.psf, r);
    EXPECT_GE(m.kappa, 0.95) << "seed " << seed;
    EXPECT_LE(m.kappa, 1.05) << "seed " << seed;

    const auto& cosmic = run.scene.dataset.truth.cosmic_pixels;
    std::size_t hit = 0;
    for (const Pixel& p : cosmic) hit += r.excluded_mask(p.x, p.y) ? 1 : 0;
    EXPECT_GE(static_cast<double>(hit), 0.9 * static_cast<double>(cosmic.size())) << "seed " << seed;

    // The brightest moon is flagged at its peak pixel.
    const MoonSpec& bright = run.scene.nuisance.moons[0];
    const Pixel c = grid_center(r.psf);
    const int mx = static_cast<int>(std::lround(c.x + bright.dx));
    const int my = static_cast<int>(std::lround(c.y + bright.dy));
    EXPECT_LE(r.robust_weights(mx, my), 0.5) << "seed " << seed;
  }
}

TEST(RunPipeline, OutlierFreeResidualsFollowNoiseModel) {
  const DeskRun run = run_desk(4, false);
  const PipelineResult& r = run.result;
  const NoiseModel noise = run.scene.nuisance.noise;
  const Mask2D near_body = dilate(support(r.object_segmented), 6);
  double ss = 0.0, expected = 0.0;
  std::size_t halo = 0, excluded = 0;
  for (std::size_t i = 0; i < r.halo_residuals.size(); ++i) {
    if (near_body[i]) continue;
    ++halo;
    excluded += r.excluded_mask[i] ? 1 : 0;
    ss += r.halo_residuals[i] * r.halo_residuals[i];
    expected += noise.variance(r.data_model[i]);
  }
  ASSERT_GT(halo, 1000u);
  EXPECT_NEAR(ss / halo, expected / halo, 0.2 * expected / halo);
  // Gaussian oracle for the 50% Cauchy cut: P(|Z| >= gamma).
  const double rate = std::erfc(kCauchyGamma / std::sqrt(2.0));
  EXPECT_NEAR(rate, 0.01708, 1e-4);
  const double observed = static_cast<double>(excluded) / static_cast<double>(halo);
  EXPECT_NEAR(observed, rate, 0.5 * rate);
}

TEST(RunPipeline, Errors) {
  CoreFitResult core;
  core.moffat = MoffatParams{8, 8, 2, 2, 1.5, 0, 1};
  Image2D data(16, 16, 1.0);
  data(3, 3) = std::nan("");
  EXPECT_THROW(run_pipeline(data, NoiseModel{1.0, 1.0}, core, PipelineConfig{}), DataError);
  PipelineConfig bad;
  bad.segmentation.d_sup_frac = 0.0;
  EXPECT_THROW(run_pipeline(Image2D(16, 16, 1.0), NoiseModel{1.0, 1.0}, core, bad), ConfigError);
  core.binary_object = Mask2D(8, 8, 1);
  EXPECT_THROW(run_pipeline(Image2D(16, 16, 1.0), NoiseModel{1.0, 1.0}, core, PipelineConfig{}),
               std::invalid_argument);
}

TEST(Evaluate, L1ScaleMatchesGoldenSection) {
  const Image2D est = aobd::testing::random_image(20, 20, 4, 0.1, 5.0);
  Image2D ref = 1.7 * est;
  const Image2D noise = aobd::testing::random_image(20, 20, 5, -0.5, 0.5);
  for (std::size_t i = 0; i < ref.size(); ++i) ref[i] += noise[i];
  auto objective = [&](double k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) acc += std::abs(ref[i] - k * est[i]);
    return acc;
  };
  const double k = l1_scale(ref, est);
  EXPECT_NEAR(k, golden_section(objective, 0.0, 5.0, 1e-10), 1e-6);
  EXPECT_LE(objective(k), objective(k + 1e-4));
  EXPECT_LE(objective(k), objective(k - 1e-4));
  EXPECT_THROW(l1_scale(ref, Image2D(20, 20)), std::invalid_argument);
}

TEST(Evaluate, ExactAndScaledTruth) {
  const int n = 48;
  const Image2D obj = flat_ellipse(n, 24.0, 24.0, 6.0, 4.0, 100.0);
  const Image2D psf = make_synthetic_psf(n, n, SyntheticPsfSpec{MoffatParams{0, 0, 2.0, 1.8, 2.0, 0.2, 1.0}, 10.0}, 1);
  PipelineResult r;
  r.object = obj;
  r.psf = psf;
  const RecoveryMetrics exact = evaluate_recovery(obj, psf, r);
  EXPECT_EQ(exact.kappa, 1.0);
  for (double v : exact.object_residual) EXPECT_EQ(v, 0.0);
  for (const auto& p : exact.psf_profile) EXPECT_EQ(p.relative_error, 0.0);

  r.object = 0.9 * obj;
  EXPECT_NEAR(evaluate_recovery(obj, psf, r).kappa, 1.0 / 0.9, 1e-9);

  EXPECT_THROW(evaluate_recovery(Image2D(n, n), psf, r), std::invalid_argument);
  EXPECT_THROW(evaluate_recovery(obj, Image2D(n, n), r), std::invalid_argument);
}

TEST(Evaluate, AperturePhotometry) {
  Image2D img(40, 40, 2.0);
  img(20, 20) = 12.0;
  const Photometry p = aperture_photometry(img, 20.0, 20.0, 3.0);
  EXPECT_EQ(p.aperture_pixels, 29);
  EXPECT_DOUBLE_EQ(p.flux, 29 * 2.0 + 10.0);
  EXPECT_EQ(p.local_median, 2.0);
  EXPECT_EQ(p.local_mad, 0.0);
}
