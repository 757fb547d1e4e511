// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include <json.hpp>

#include "aobd/core_fit.hpp"
#include "aobd/moffat.hpp"
#include "aobd/noise_model.hpp"
#include "aobd/pipeline.hpp"

namespace aobd {

// Readers throw ConfigError naming the offending key on unknown keys,
// wrong types or values rejected by the matching validate().
// Missing keys keep their default values.

nlohmann::json to_json(const NoiseModel& m);
NoiseModel noise_model_from_json(const nlohmann::json& j);

nlohmann::json to_json(const MoffatParams& p);
MoffatParams moffat_from_json(const nlohmann::json& j);

/// Scalars of a core fit; the binary object is stored separately as a mask image.
nlohmann::json to_json(const CoreFitResult& r);
CoreFitResult core_fit_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ArcGeometry& g);
ArcGeometry arc_geometry_from_json(const nlohmann::json& j);

/// {"deconv": {...}, "segmentation": {...}, "robust": {...}}
nlohmann::json to_json(const PipelineConfig& cfg);
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);

/// Parse a JSON file; DataError when it is missing, ConfigError when malformed.
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace aobd
