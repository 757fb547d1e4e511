// SPDX-License-Identifier: Apache-2.0
#include "aobd/io_json.hpp"

#include <fstream>
#include <map>
#include <string>

#include "aobd/errors.hpp"

namespace aobd {

using nlohmann::json;

namespace {

// Binds JSON keys of one object to fields and rejects unknown keys.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  Fields& num(const char* key, double& out) {
    known_.emplace(key, true);
    if (auto it = j_.find(key); it != j_.end()) {
      if (!it->is_number()) throw ConfigError(where_ + "." + key + ": expected a number");
      out = it->get<double>();
    }
    return *this;
  }

  Fields& integer(const char* key, int& out) {
    known_.emplace(key, true);
    if (auto it = j_.find(key); it != j_.end()) {
      if (!it->is_number_integer()) throw ConfigError(where_ + "." + key + ": expected an integer");
      out = it->get<int>();
    }
    return *this;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!known_.count(it.key())) throw ConfigError(where_ + ": unknown key '" + it.key() + "'");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::map<std::string, bool> known_;
};

template <typename F>
void rethrow_as_config(const std::string& where, F&& f) {
  try {
    f();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

}  // namespace

json to_json(const NoiseModel& m) { return {{"eta", m.eta}, {"v_ron", m.v_ron}}; }

NoiseModel noise_model_from_json(const json& j) {
  NoiseModel m;
  Fields(j, "noise").num("eta", m.eta).num("v_ron", m.v_ron).finish();
  try {
    validate(m);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("noise: ") + e.what());
  }
  return m;
}

json to_json(const MoffatParams& p) {
  return {{"x0", p.x0},         {"y0", p.y0},       {"alpha1", p.alpha1}, {"alpha2", p.alpha2},
          {"beta", p.beta},     {"theta", p.theta}, {"gamma", p.gamma}};
}

MoffatParams moffat_from_json(const json& j) {
  MoffatParams p;
  Fields(j, "moffat")
      .num("x0", p.x0)
      .num("y0", p.y0)
      .num("alpha1", p.alpha1)
      .num("alpha2", p.alpha2)
      .num("beta", p.beta)
      .num("theta", p.theta)
      .num("gamma", p.gamma)
      .finish();
  rethrow_as_config("moffat", [&] { validate(p); });
  return p;
}

json to_json(const CoreFitResult& r) {
  return {{"d_bar", r.d_bar}, {"moffat", to_json(r.moffat)}, {"final_cost", r.final_cost},
          {"cost_history", r.cost_history}};
}

CoreFitResult core_fit_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("core: expected an object");
  CoreFitResult r;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k == "d_bar" || k == "final_cost") {
      if (!it->is_number()) throw ConfigError("core." + k + ": expected a number");
      (k == "d_bar" ? r.d_bar : r.final_cost) = it->get<double>();
    } else if (k == "moffat") {
      r.moffat = moffat_from_json(*it);
    } else if (k == "cost_history") {
      if (!it->is_array()) throw ConfigError("core.cost_history: expected an array");
      for (const json& v : *it) {
        if (!v.is_number()) throw ConfigError("core.cost_history: expected numbers");
        r.cost_history.push_back(v.get<double>());
      }
    } else {
      throw ConfigError("core: unknown key '" + k + "'");
    }
  }
  if (!j.contains("moffat")) throw ConfigError("core: missing key 'moffat'");
  return r;
}

json to_json(const ArcGeometry& g) {
  return {{"width", g.width}, {"length", g.length}, {"min_pixels", g.min_pixels}};
}

ArcGeometry arc_geometry_from_json(const json& j) {
  ArcGeometry g;
  Fields(j, "arcs").num("width", g.width).num("length", g.length).integer("min_pixels", g.min_pixels).finish();
  if (!(g.width > 0.0) || !(g.length > 0.0) || g.min_pixels < 1) {
    throw ConfigError("arcs: width and length must be positive, min_pixels >= 1");
  }
  return g;
}

json to_json(const PipelineConfig& c) {
  const DeconvConfig& d = c.deconv;
  return {
      {"deconv",
       {{"mu_obj", d.mu_obj},
        {"eps_obj", d.eps_obj},
        {"mu_psf", d.mu_psf},
        {"h_min_frac", d.h_min_frac},
        {"n_alt", d.n_alt},
        {"n_wgt", d.n_wgt},
        {"max_iter", d.max_iter}}},
      {"segmentation",
       {{"d_sup_frac", c.segmentation.d_sup_frac},
        {"dilation_radius", c.segmentation.dilation_radius},
        {"protect_radius", c.segmentation.protect_radius}}},
      {"robust",
       {{"gamma_cauchy", c.robust.gamma_cauchy},
        {"w_rob_threshold", c.robust.w_rob_threshold},
        {"w_rob_body_threshold", c.robust.w_rob_body_threshold}}},
  };
}

PipelineConfig pipeline_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected an object");
  PipelineConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k == "deconv") {
      DeconvConfig& d = c.deconv;
      Fields(*it, "deconv")
          .num("mu_obj", d.mu_obj)
          .num("eps_obj", d.eps_obj)
          .num("mu_psf", d.mu_psf)
          .num("h_min_frac", d.h_min_frac)
          .integer("n_alt", d.n_alt)
          .integer("n_wgt", d.n_wgt)
          .integer("max_iter", d.max_iter)
          .finish();
    } else if (k == "segmentation") {
      SegmentationConfig& s = c.segmentation;
      Fields(*it, "segmentation")
          .num("d_sup_frac", s.d_sup_frac)
          .integer("dilation_radius", s.dilation_radius)
          .integer("protect_radius", s.protect_radius)
          .finish();
    } else if (k == "robust") {
      RobustConfig& r = c.robust;
      Fields(*it, "robust")
          .num("gamma_cauchy", r.gamma_cauchy)
          .num("w_rob_threshold", r.w_rob_threshold)
          .num("w_rob_body_threshold", r.w_rob_body_threshold)
          .finish();
    } else {
      throw ConfigError("config: unknown key '" + k + "'");
    }
  }
  validate(c.deconv);
  validate(c.segmentation);
  validate(c.robust);
  return c;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("missing file: " + path.string());
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": malformed JSON: " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path.string());
  os << j.dump(2) << '\n';
  if (!os) throw DataError("write failed: " + path.string());
}

}  // namespace aobd
