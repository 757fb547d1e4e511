// SPDX-License-Identifier: Apache-2.0
#include "aobd/simulate.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <json.hpp>

#include "aobd/convolve.hpp"
#include "aobd/errors.hpp"
#include "aobd/image_ops.hpp"
#include "aobd/io_json.hpp"
#include "aobd/raster_io.hpp"

namespace aobd {

namespace {

constexpr double kPi = std::numbers::pi;

bool non_negative(std::initializer_list<double> values) {
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace

void validate(const SyntheticPsfSpec& s, int width, int height) {
  try {
    validate(s.core);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("psf core: ") + e.what());
  }
  if (!non_negative({s.halo_amplitude, s.wind_amplitude, s.speckle_amplitude, s.spike_amplitude})) {
    throw ConfigError("psf amplitudes must be >= 0");
  }
  if (!(s.ao_cutoff_radius > 0.0) || s.ao_cutoff_radius >= 0.5 * std::min(width, height)) {
    throw ConfigError("ao_cutoff_radius must lie in (0, half grid size)");
  }
  if (!(s.cutoff_width > 0.0) || !(s.halo_slope > 0.0) || !(s.wind_sigma > 0.0) || !(s.wind_axis_ratio >= 1.0) ||
      !(s.speckle_sigma > 0.0) || !(s.spike_width > 0.0) || !(s.spike_scale > 0.0) || !(s.spike_slope > 0.0)) {
    throw ConfigError("psf shape parameters must be positive (axis ratio >= 1)");
  }
  if (s.speckle_count < 0 || s.spike_count < 0) throw ConfigError("speckle and spike counts must be >= 0");
}

Image2D make_synthetic_psf(int width, int height, const SyntheticPsfSpec& s, std::uint64_t seed) {
  validate(s, width, height);
  const Pixel c = grid_center(width, height);
  MoffatParams core = s.core;
  core.x0 += c.x;
  core.y0 += c.y;
  Image2D psf = moffat_eval(width, height, core);
  const double a = core.gamma;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
  std::vector<double> speckle_angles(static_cast<std::size_t>(s.speckle_count));
  for (double& t : speckle_angles) t = angle(rng);

  const double wind_minor = s.wind_sigma / s.wind_axis_ratio;
  const double cw = std::cos(s.wind_angle), sw = std::sin(s.wind_angle);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double dx = x - core.x0;
      const double dy = y - core.y0;
      const double r = std::hypot(dx, dy);
      double v = 0.0;
      if (s.halo_amplitude > 0.0) {
        const double step = 1.0 / (1.0 + std::exp(-(r - s.ao_cutoff_radius) / s.cutoff_width));
        const double rr = std::max(r, 1.0) / s.ao_cutoff_radius;
        v += s.halo_amplitude * std::pow(rr, -s.halo_slope) * step;
      }
      if (s.wind_amplitude > 0.0) {
        const double u1 = (dx * cw + dy * sw) / s.wind_sigma;
        const double u2 = (-dx * sw + dy * cw) / wind_minor;
        v += s.wind_amplitude * std::exp(-0.5 * (u1 * u1 + u2 * u2));
      }
      for (double t : speckle_angles) {
        const double ex = dx - s.ao_cutoff_radius * std::cos(t);
        const double ey = dy - s.ao_cutoff_radius * std::sin(t);
        v += s.speckle_amplitude * std::exp(-0.5 * (ex * ex + ey * ey) / (s.speckle_sigma * s.speckle_sigma));
      }
      for (int k = 0; k < s.spike_count; ++k) {
        const double t = s.spike_angle + 2.0 * kPi * k / s.spike_count;
        const double along = dx * std::cos(t) + dy * std::sin(t);
        if (along <= 0.0 || s.spike_amplitude == 0.0) continue;
        const double across = -dx * std::sin(t) + dy * std::cos(t);
        v += s.spike_amplitude * std::pow(1.0 + along / s.spike_scale, -s.spike_slope) *
             std::exp(-0.5 * across * across / (s.spike_width * s.spike_width));
      }
      psf(x, y) += a * v;
    }
  }
  const double total = sum(psf);
  psf = (1.0 / total) * psf;
  const double floor = 1e-14 * max_value(psf);
  bool floored = false;
  for (double& v : psf) {
    if (v < floor) {
      v = floor;
      floored = true;
    }
  }
  if (floored) psf = (1.0 / sum(psf)) * psf;
  return psf;
}

void validate(const NuisanceSpec& s) {
  try {
    validate(s.noise);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("noise: ") + e.what());
  }
  if (!(s.salt_pepper_fraction >= 0.0 && s.salt_pepper_fraction <= 1.0)) {
    throw ConfigError("salt_pepper_fraction must lie in [0, 1]");
  }
  if (!(s.salt_level > 0.0)) throw ConfigError("salt_level must be positive");
  if (s.n_cosmic_rays < 0) throw ConfigError("n_cosmic_rays must be >= 0");
  if (!(s.cosmic_length_min >= 1.0 && s.cosmic_length_max >= s.cosmic_length_min)) {
    throw ConfigError("cosmic ray lengths must satisfy 1 <= min <= max");
  }
  if (!(s.cosmic_amplitude_min > 0.0 && s.cosmic_amplitude_max >= s.cosmic_amplitude_min)) {
    throw ConfigError("cosmic ray amplitudes must satisfy 0 < min <= max");
  }
  for (const MoonSpec& m : s.moons) {
    if (!(m.contrast > 0.0) || !std::isfinite(m.dx) || !std::isfinite(m.dy)) {
      throw ConfigError("moon contrast must be positive and offsets finite");
    }
  }
}

Image2D render_moon(const Image2D& psf, const MoonSpec& moon, double clean_peak) {
  const double scale = moon.contrast * clean_peak / max_value(psf);
  return scale * shift_image(psf, moon.dx, moon.dy);
}

Dataset make_dataset(const Image2D& obj_true, const Image2D& psf_true, const NuisanceSpec& nuisance,
                     std::uint64_t seed) {
  require_same_shape(obj_true, psf_true, "make_dataset");
  validate(nuisance);
  if (std::any_of(obj_true.begin(), obj_true.end(), [](double v) { return !(v >= 0.0); })) {
    throw std::invalid_argument("make_dataset: object must be non-negative");
  }
  const int w = obj_true.width();
  const int h = obj_true.height();
  const Pixel c = grid_center(w, h);

  Dataset ds;
  TruthBundle& t = ds.truth;
  t.clean = convolve(obj_true, psf_true);
  t.clean_peak = max_value(t.clean);
  t.moons = Image2D(w, h);
  for (const MoonSpec& m : nuisance.moons) {
    const double mx = c.x + m.dx;
    const double my = c.y + m.dy;
    if (!(mx >= 0.0 && my >= 0.0 && mx <= w - 1 && my <= h - 1)) throw ConfigError("moon outside grid");
    t.moons = t.moons + render_moon(psf_true, m, t.clean_peak);
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  t.noise = Image2D(w, h);
  for (std::size_t i = 0; i < t.noise.size(); ++i) {
    const double var = nuisance.noise.variance(t.clean[i] + t.moons[i]);
    t.noise[i] = std::sqrt(var) * gauss(rng);
  }

  t.cosmic = Image2D(w, h);
  Mask2D hit(w, h, 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < nuisance.n_cosmic_rays; ++k) {
    const double x0 = unit(rng) * (w - 1);
    const double y0 = unit(rng) * (h - 1);
    const double len =
        nuisance.cosmic_length_min + unit(rng) * (nuisance.cosmic_length_max - nuisance.cosmic_length_min);
    const double ang = unit(rng) * 2.0 * kPi;
    const double amp = t.clean_peak * (nuisance.cosmic_amplitude_min +
                                       unit(rng) * (nuisance.cosmic_amplitude_max - nuisance.cosmic_amplitude_min));
    const int steps = static_cast<int>(std::ceil(len));
    for (int s = 0; s <= steps; ++s) {
      const double f = len * s / steps;
      const int x = static_cast<int>(std::lround(x0 + f * std::cos(ang)));
      const int y = static_cast<int>(std::lround(y0 + f * std::sin(ang)));
      if (!hit.contains(x, y) || hit(x, y)) continue;
      hit(x, y) = 1;
      t.cosmic(x, y) = amp;
      t.cosmic_pixels.push_back({x, y});
    }
  }

  Image2D partial = t.clean + t.moons;
  partial = partial + t.noise;
  partial = partial + t.cosmic;

  t.defects = Image2D(w, h);
  const auto n_bad = static_cast<std::size_t>(std::llround(nuisance.salt_pepper_fraction * w * h));
  std::uniform_int_distribution<int> px(0, w - 1), py(0, h - 1);
  std::size_t placed = 0;
  while (placed < n_bad && placed + count(hit) < static_cast<std::size_t>(w) * h) {
    const int x = px(rng);
    const int y = py(rng);
    if (hit(x, y)) continue;
    hit(x, y) = 1;
    const bool salt = placed % 2 == 0;
    const double target = salt ? nuisance.salt_level * t.clean_peak : 0.0;
    t.defects(x, y) = target - partial(x, y);
    (salt ? t.salt_pixels : t.pepper_pixels).push_back({x, y});
    ++placed;
  }
  ds.data = partial + t.defects;
  return ds;
}

Image2D make_scenario_object(int width, int height, double radius, double level) {
  constexpr int kSub = 4;
  const Pixel c = grid_center(width, height);
  Image2D obj(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int sy = 0; sy < kSub; ++sy) {
        for (int sx = 0; sx < kSub; ++sx) {
          const double u = x - c.x + (sx + 0.5) / kSub - 0.5;
          const double v = y - c.y + (sy + 0.5) / kSub - 0.5;
          const double phi = std::atan2(v, u);
          const double edge = radius * (1.0 + 0.12 * std::cos(2.0 * phi + 0.5) + 0.06 * std::cos(3.0 * phi + 1.3));
          if (std::hypot(u, v) > edge) continue;
          const double crater = std::hypot(u - 0.3 * radius, v + 0.2 * radius);
          double tex = 1.0 + 0.08 * std::sin(2.0 * kPi * u / 19.0) * std::cos(2.0 * kPi * v / 27.0) +
                       0.06 * std::cos(2.0 * kPi * (u + v) / 13.0);
          if (crater < 0.18 * radius) tex *= 0.7;
          acc += tex;
        }
      }
      obj(x, y) = level * acc / (kSub * kSub);
    }
  }
  return obj;
}

Scenario reference_scenario(std::uint64_t seed) {
  constexpr int kSize = 256;
  Scenario s;
  s.seed = seed;
  s.psf_true = make_synthetic_psf(kSize, kSize, s.psf_spec, seed);
  s.obj_true = make_scenario_object(kSize, kSize, 30.0, 1e4);
  s.nuisance.noise = NoiseModel{1.0, 4.0};
  s.nuisance.salt_pepper_fraction = 0.002;
  s.nuisance.n_cosmic_rays = 5;
  const double seps[3] = {55.0, 75.0, 100.0};
  const double angles[3] = {2.75, 4.3, 5.9};
  const double contrasts[3] = {1e-2, 3e-3, 1e-3};
  for (int k = 0; k < 3; ++k) {
    s.nuisance.moons.push_back({seps[k] * std::cos(angles[k]), seps[k] * std::sin(angles[k]), contrasts[k]});
  }
  s.dataset = make_dataset(s.obj_true, s.psf_true, s.nuisance, seed);
  return s;
}

namespace {

nlohmann::json pixels_json(const std::vector<Pixel>& px) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Pixel& p : px) arr.push_back({p.x, p.y});
  return arr;
}

}  // namespace

void write_scenario(const std::filesystem::path& dir, const Scenario& s) {
  std::filesystem::create_directories(dir);
  write_img1(dir / "data.img1", s.dataset.data);
  write_img1(dir / "obj_true.img1", s.obj_true);
  write_img1(dir / "psf_true.img1", s.psf_true);

  nlohmann::json j;
  j["seed"] = s.seed;
  j["noise"] = to_json(s.nuisance.noise);
  j["clean_peak"] = s.dataset.truth.clean_peak;
  j["moons"] = nlohmann::json::array();
  const Pixel c = grid_center(s.dataset.data);
  for (const MoonSpec& m : s.nuisance.moons) {
    j["moons"].push_back({{"dx", m.dx}, {"dy", m.dy}, {"x", c.x + m.dx}, {"y", c.y + m.dy}, {"contrast", m.contrast}});
  }
  j["cosmic_pixels"] = pixels_json(s.dataset.truth.cosmic_pixels);
  j["salt_pixels"] = pixels_json(s.dataset.truth.salt_pixels);
  j["pepper_pixels"] = pixels_json(s.dataset.truth.pepper_pixels);
  write_json_file(dir / "truth.json", j);
}

}  // namespace aobd
