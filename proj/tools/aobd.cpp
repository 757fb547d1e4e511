// SPDX-License-Identifier: Apache-2.0
// Command-line front end: simulate, fit-noise, fit-core, deconvolve, export.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "aobd/core_fit.hpp"
#include "aobd/errors.hpp"
#include "aobd/evaluate.hpp"
#include "aobd/image_ops.hpp"
#include "aobd/io_json.hpp"
#include "aobd/noise_model.hpp"
#include "aobd/pipeline.hpp"
#include "aobd/raster_io.hpp"
#include "aobd/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace aobd;

namespace {

struct RunConfig {
  fs::path config_path;
  fs::path out_dir;
  fs::path in_dir;
  std::uint64_t seed = 1;
  int count = 1;
  int jobs = 1;
  std::optional<double> mu_obj, mu_psf, eps_obj, wrob_threshold;
  std::optional<int> n_alt;
  std::string stretch;

  PipelineConfig pipeline;
  std::optional<NoiseModel> noise_override;
  ArcGeometry arcs;
  StretchOptions export_stretch;

  fs::path input() const { return in_dir.empty() ? out_dir : in_dir; }
};

void load_config(RunConfig& rc) {
  if (!rc.config_path.empty()) {
    const json j = read_json_file(rc.config_path);
    if (!j.is_object()) throw ConfigError("config: expected an object");
    json pipeline = json::object();
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.key() == "noise") {
        rc.noise_override = noise_model_from_json(*it);
      } else if (it.key() == "arcs") {
        rc.arcs = arc_geometry_from_json(*it);
      } else if (it.key() == "stretch") {
        if (!it->is_string()) throw ConfigError("config.stretch: expected a string");
        rc.export_stretch.kind = parse_stretch(it->get<std::string>());
      } else {
        pipeline[it.key()] = *it;
      }
    }
    rc.pipeline = pipeline_config_from_json(pipeline);
  }
  DeconvConfig& d = rc.pipeline.deconv;
  if (rc.mu_obj) d.mu_obj = *rc.mu_obj;
  if (rc.mu_psf) d.mu_psf = *rc.mu_psf;
  if (rc.eps_obj) d.eps_obj = *rc.eps_obj;
  if (rc.n_alt) {
    d.n_alt = *rc.n_alt;
    d.n_wgt = std::min(d.n_wgt, d.n_alt);
  }
  if (rc.wrob_threshold) rc.pipeline.robust.w_rob_threshold = *rc.wrob_threshold;
  if (!rc.stretch.empty()) rc.export_stretch.kind = parse_stretch(rc.stretch);
  validate(rc.pipeline.deconv);
  validate(rc.pipeline.segmentation);
  validate(rc.pipeline.robust);
  if (rc.jobs < 1) throw ConfigError("--jobs must be >= 1");
  if (rc.count < 1) throw ConfigError("--count must be >= 1");
}

fs::path require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw DataError("missing input file: " + p.string());
  return p;
}

// Writes into a sibling temporary directory and renames it onto `target`.
template <typename F>
void write_atomically(const fs::path& target, F&& fill) {
  const fs::path parent = target.has_parent_path() ? target.parent_path() : fs::path(".");
  if (!fs::is_directory(parent)) throw DataError("output parent directory does not exist: " + parent.string());
  std::random_device rd;
  const fs::path tmp = parent / (target.filename().string() + ".tmp-" + std::to_string(rd()));
  std::error_code ec;
  try {
    fs::create_directory(tmp);
    fill(tmp);
    fs::remove_all(target, ec);
    fs::rename(tmp, target);
  } catch (const fs::filesystem_error& e) {
    fs::remove_all(tmp, ec);
    throw DataError(std::string("cannot write output: ") + e.what());
  } catch (...) {
    fs::remove_all(tmp, ec);
    throw;
  }
}

fs::path normalized(const fs::path& p) {
  fs::path out = p.lexically_normal();
  if (out.has_filename()) return out;
  return out.parent_path();
}

int cmd_simulate(const RunConfig& rc) {
  const fs::path out = normalized(rc.out_dir);
  if (rc.count == 1) {
    const Scenario s = reference_scenario(rc.seed);
    write_atomically(out, [&](const fs::path& dir) { write_scenario(dir, s); });
    std::cout << "wrote scenario seed " << rc.seed << " to " << out.string() << '\n';
    return 0;
  }
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw DataError("cannot create " + out.string() + ": " + ec.message());
  std::atomic<int> next{0};
  std::mutex err_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    for (int k = next++; k < rc.count; k = next++) {
      try {
        const std::uint64_t seed = rc.seed + static_cast<std::uint64_t>(k);
        const Scenario s = reference_scenario(seed);
        write_atomically(out / ("seed_" + std::to_string(seed)), [&](const fs::path& dir) { write_scenario(dir, s); });
      } catch (...) {
        std::lock_guard lock(err_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int j = 0; j < std::min(rc.jobs, rc.count); ++j) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  std::cout << "wrote " << rc.count << " scenarios to " << out.string() << '\n';
  return 0;
}

Pixel brightest_pixel(const Image2D& data) {
  const Image2D med = median_filter(data, 5);
  const auto it = std::max_element(med.begin(), med.end());
  const auto i = static_cast<std::size_t>(it - med.begin());
  return {static_cast<int>(i % med.width()), static_cast<int>(i / med.width())};
}

int cmd_fit_noise(const RunConfig& rc) {
  const Image2D data = read_img1(require_file(rc.input() / "data.img1"));
  const NoiseFit fit = fit_noise_model(data, brightest_pixel(data), rc.arcs);
  fs::create_directories(rc.out_dir);
  write_json_file(rc.out_dir / "noise.json", to_json(fit.model));
  std::cout << "eta " << fit.model.eta << " v_ron " << fit.model.v_ron << " valid_arcs " << fit.valid_arcs << '\n';
  return 0;
}

NoiseModel load_noise(const RunConfig& rc) {
  if (rc.noise_override) return *rc.noise_override;
  return noise_model_from_json(read_json_file(require_file(rc.input() / "noise.json")));
}

int cmd_fit_core(const RunConfig& rc) {
  const Image2D data = read_img1(require_file(rc.input() / "data.img1"));
  const NoiseModel noise = load_noise(rc);
  const CoreFitResult core = fit_core(data, noise);
  fs::create_directories(rc.out_dir);
  write_json_file(rc.out_dir / "core.json", to_json(core));
  write_img1(rc.out_dir / "core_mask.img1", mask_to_image(core.binary_object));
  const MoffatParams& m = core.moffat;
  std::cout << "d_bar " << core.d_bar << " alpha " << m.alpha1 << ' ' << m.alpha2 << " beta " << m.beta << " theta "
            << m.theta << " center " << m.x0 << ' ' << m.y0 << '\n';
  return 0;
}

void write_costlog(const fs::path& path, const std::vector<RoundLog>& log) {
  std::ofstream os(path);
  os.precision(17);
  os << "round,obj_data_term,obj_reg,obj_iterations,psf_data_term,psf_reg,psf_iterations,psf_sum,excluded\n";
  for (const RoundLog& r : log) {
    os << r.round << ',' << r.obj_data_term << ',' << r.obj_reg << ',' << r.obj_iterations << ',' << r.psf_data_term
       << ',' << r.psf_reg << ',' << r.psf_iterations << ',' << r.psf_sum << ',' << r.excluded << '\n';
  }
  if (!os) throw DataError("write failed: " + path.string());
}

int cmd_deconvolve(const RunConfig& rc) {
  const fs::path in = rc.input();
  const Image2D data = read_img1(require_file(in / "data.img1"));
  const NoiseModel noise = load_noise(rc);
  CoreFitResult core = core_fit_from_json(read_json_file(require_file(in / "core.json")));
  core.binary_object = image_to_mask(read_img1(require_file(in / "core_mask.img1")));

  const PipelineResult result = run_pipeline(data, noise, core, rc.pipeline, [](const RoundLog& r, const Image2D&) {
    std::cout << "round " << r.round << " obj " << r.obj_data_term << " psf " << r.psf_data_term << " excluded "
              << r.excluded << '\n';
  });

  json metrics;
  metrics["config"] = to_json(rc.pipeline);
  metrics["noise"] = to_json(noise);
  metrics["rounds"] = result.cost_log.size();
  if (!result.cost_log.empty()) {
    const RoundLog& last = result.cost_log.back();
    metrics["final"] = {{"obj_data_term", last.obj_data_term}, {"obj_reg", last.obj_reg},
                        {"psf_data_term", last.psf_data_term}, {"psf_reg", last.psf_reg},
                        {"psf_sum", last.psf_sum},             {"excluded", last.excluded}};
  }
  if (fs::is_regular_file(in / "obj_true.img1") && fs::is_regular_file(in / "psf_true.img1")) {
    const RecoveryMetrics m = evaluate_recovery(read_img1(in / "obj_true.img1"), read_img1(in / "psf_true.img1"), result);
    metrics["kappa"] = m.kappa;
  }

  fs::create_directories(rc.out_dir);
  write_atomically(rc.out_dir / "result", [&](const fs::path& dir) {
    write_img1(dir / "object.img1", result.object);
    write_img1(dir / "psf.img1", result.psf);
    write_img1(dir / "model.img1", result.data_model);
    write_img1(dir / "residuals.img1", result.halo_residuals);
    write_img1(dir / "robust_weights.img1", result.robust_weights);
    write_img1(dir / "excluded.img1", mask_to_image(result.excluded_mask));
    write_json_file(dir / "metrics.json", metrics);
    write_costlog(dir / "costlog.csv", result.cost_log);
  });
  if (metrics.contains("kappa")) std::cout << "kappa " << metrics["kappa"].get<double>() << '\n';
  return 0;
}

int cmd_export(const RunConfig& rc) {
  const fs::path in = rc.input();
  const fs::path result = in / "result";
  const std::vector<std::string> names = {"object", "psf", "model", "residuals", "robust_weights", "excluded"};
  for (const auto& n : names) require_file(result / (n + ".img1"));
  fs::create_directories(rc.out_dir / "export");
  for (const auto& n : names) {
    write_pgm16(rc.out_dir / "export" / (n + ".pgm"), read_img1(result / (n + ".img1")), rc.export_stretch);
  }
  if (fs::is_regular_file(in / "data.img1")) {
    write_pgm16(rc.out_dir / "export" / "data.pgm", read_img1(in / "data.img1"), rc.export_stretch);
  }
  std::cout << "exported to " << (rc.out_dir / "export").string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blind deconvolution of adaptive-optics images"};
  app.require_subcommand(1);
  RunConfig rc;

  auto add_common = [&](CLI::App* sub, bool needs_in) {
    sub->add_option("--config", rc.config_path, "JSON run configuration");
    sub->add_option("--out", rc.out_dir, "output directory")->required();
    if (needs_in) sub->add_option("--in", rc.in_dir, "input directory (defaults to --out)");
    sub->add_option("--jobs", rc.jobs, "worker threads for independent frames");
  };

  CLI::App* sim = app.add_subcommand("simulate", "write a reference scenario bundle");
  add_common(sim, false);
  sim->add_option("--seed", rc.seed, "random seed");
  sim->add_option("--count", rc.count, "number of bundles (seed, seed+1, ...) written to OUT/seed_<n>");

  CLI::App* noise = app.add_subcommand("fit-noise", "fit the affine noise model");
  add_common(noise, true);

  CLI::App* core = app.add_subcommand("fit-core", "fit the PSF core and object threshold");
  add_common(core, true);

  CLI::App* deconv = app.add_subcommand("deconvolve", "alternate object / PSF deconvolution");
  add_common(deconv, true);
  deconv->add_option("--mu-obj", rc.mu_obj, "object regularization weight");
  deconv->add_option("--mu-psf", rc.mu_psf, "PSF regularization weight");
  deconv->add_option("--eps-obj", rc.eps_obj, "object edge-preservation threshold");
  deconv->add_option("--n-alt", rc.n_alt, "number of alternation rounds");
  deconv->add_option("--wrob-threshold", rc.wrob_threshold, "robust-weight exclusion threshold");

  CLI::App* exp = app.add_subcommand("export", "render result images as 16-bit PGM");
  add_common(exp, true);
  exp->add_option("--stretch", rc.stretch, "linear, sqrt or dual")
      ->check(CLI::IsMember({"linear", "sqrt", "dual"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    load_config(rc);
    if (sim->parsed()) return cmd_simulate(rc);
    if (noise->parsed()) return cmd_fit_noise(rc);
    if (core->parsed()) return cmd_fit_core(rc);
    if (deconv->parsed()) return cmd_deconvolve(rc);
    if (exp->parsed()) return cmd_export(rc);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
