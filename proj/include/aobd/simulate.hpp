// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "aobd/image.hpp"
#include "aobd/moffat.hpp"
#include "aobd/noise_model.hpp"

namespace aobd {

/// Parametric surrogate of a long-exposure AO PSF. Amplitudes are relative
/// to the core peak (core.gamma); core.x0 / core.y0 are offsets from the grid center.
struct SyntheticPsfSpec {
  MoffatParams core{0.0, 0.0, 3.0, 2.6, 2.0, 0.3, 1.0};

  double ao_cutoff_radius = 18.0;
  double cutoff_width = 1.5;      ///< logistic width of the corrected / uncorrected transition
  double halo_amplitude = 3e-4;   ///< turbulence halo level at the cutoff radius
  double halo_slope = 3.0;        ///< power-law index beyond the cutoff

  double wind_amplitude = 1e-2;
  double wind_sigma = 6.0;        ///< Gaussian width along the wind direction
  double wind_axis_ratio = 2.0;   ///< major / minor width
  double wind_angle = 0.8;

  int speckle_count = 12;
  double speckle_amplitude = 1e-4;
  double speckle_sigma = 1.0;

  int spike_count = 4;
  double spike_angle = 0.4;
  double spike_amplitude = 1e-3;
  double spike_width = 0.7;
  double spike_scale = 5.0;       ///< arm profile (1 + r / scale)^-slope
  double spike_slope = 2.0;
};

void validate(const SyntheticPsfSpec& spec, int width, int height);

/// Unit-sum, strictly positive PSF centered on the grid center. Only the
/// speckle positions depend on the seed.
Image2D make_synthetic_psf(int width, int height, const SyntheticPsfSpec& spec, std::uint64_t seed);

struct MoonSpec {
  double dx = 0.0;  ///< offset from the grid center, pixels
  double dy = 0.0;
  double contrast = 1e-2;  ///< moon peak relative to the peak of the clean image
};

struct NuisanceSpec {
  NoiseModel noise;
  double salt_pepper_fraction = 0.0;  ///< fraction of pixels turned hot or dead (half each)
  double salt_level = 1.5;            ///< hot pixel value as a multiple of max(clean)
  int n_cosmic_rays = 0;
  double cosmic_length_min = 3.0;
  double cosmic_length_max = 8.0;
  double cosmic_amplitude_min = 0.5;  ///< relative to max(clean)
  double cosmic_amplitude_max = 1.0;
  std::vector<MoonSpec> moons;
};

void validate(const NuisanceSpec& spec);

/// Every additive component of a simulated frame.
/// data = (((clean + moons) + noise) + cosmic) + defects, evaluated in that order.
struct TruthBundle {
  Image2D clean;    ///< obj ⊛ psf
  Image2D moons;
  Image2D noise;
  Image2D cosmic;
  Image2D defects;  ///< offsets that turn pixels hot or dead
  std::vector<Pixel> cosmic_pixels;
  std::vector<Pixel> salt_pixels;
  std::vector<Pixel> pepper_pixels;
  double clean_peak = 0.0;
};

struct Dataset {
  Image2D data;
  TruthBundle truth;
};

/// Image of one moon: contrast * clean_peak * psf / max(psf), translated by (dx, dy).
Image2D render_moon(const Image2D& psf, const MoonSpec& moon, double clean_peak);

/// Forward model with nuisances. Throws ConfigError for moons outside the grid.
Dataset make_dataset(const Image2D& obj_true, const Image2D& psf_true, const NuisanceSpec& nuisance,
                     std::uint64_t seed);

/// Sharp-edged textured blob centered on the grid, rendered with 4x4 supersampling.
Image2D make_scenario_object(int width, int height, double radius, double level);

struct Scenario {
  std::uint64_t seed = 0;
  SyntheticPsfSpec psf_spec;
  NuisanceSpec nuisance;
  Image2D obj_true;
  Image2D psf_true;
  Dataset dataset;
};

/// The 256 x 256 validation scenario: three moons, salt and pepper pixels, five cosmic rays.
Scenario reference_scenario(std::uint64_t seed);

/// Writes data.img1, obj_true.img1, psf_true.img1 and truth.json into `dir`.
void write_scenario(const std::filesystem::path& dir, const Scenario& scenario);

}  // namespace aobd
