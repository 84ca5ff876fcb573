// Copyright 2026 The cfpose Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "cfpose/experiments.hpp"
#include "cfpose/features.hpp"
#include "cfpose/geometry.hpp"
#include "cfpose/simgen.hpp"

namespace cfpose {

using Json = nlohmann::ordered_json;

// Parses JSON text; syntax errors become ConfigError (is_config) or
// CorruptFile messages of the form "<name>:<line>:<column>: <reason>".
Json parse_json(std::string_view text, const std::string& name, bool is_config);
Json read_json_file(const std::filesystem::path& path, bool is_config);
// Pretty-printed with a trailing newline.
void write_json_file(const std::filesystem::path& path, const Json& value);
void write_text_file(const std::filesystem::path& path, std::string_view text);

// Point-set files: {"dim": 2|3, "points": [[u, v], ...] or [[x, y, z], ...],
// "gray": [...] (optional), "source": {...} (optional)}. 2D points may also
// be written as [u, v, 1].
Json point_set_to_json(const PointSet& set, const Json& source = Json::object());
PointSet point_set_from_json(const Json& value, const std::string& name);
void write_point_set(const std::filesystem::path& path, const PointSet& set,
                     const Json& source = Json::object());
PointSet read_point_set(const std::filesystem::path& path);

// {"yaw": .., "pitch": .., "roll": .., "translation": [x, y, z]}
Json pose_to_json(const PoseParams& pose);
PoseParams pose_from_json(const Json& value, const std::string& where);

// {"kind": "homography", "plane_normal": [..], "plane_offset": d}; plane
// fields only for the homography model.
Json model_to_json(const CorrespondenceModel& model);
CorrespondenceModel model_from_json(const Json& value, const std::string& where);

struct OracleFile {
  CorrespondenceModel model;
  PoseParams theta_star;
  OraclePermutation oracle;
};
Json oracle_to_json(const Scene& scene);
OracleFile oracle_from_json(const Json& value, const std::string& name);

// {"name": .., "functions": [{"name": .., "terms": {"x": a, "sin": b, ...}}]}
// with term names const, x, x2, sin, cos, sin2, cos2, x_sin, x_cos.
FeatureBasis basis_from_json(const Json& value, const std::string& name);
Json basis_to_json(const FeatureBasis& basis);
// A built-in name ("paper18", "identity") or a path to a basis file.
FeatureBasis load_basis(const std::string& name_or_path);

// Scene description consumed by `cfpose simulate`. Unknown keys are
// rejected so typos surface as errors.
struct SimulateConfig {
  SceneConfig scene = default_scene_config(ModelKind::kBearing3D2D);
  NoiseConfig noise;
  std::optional<OcclusionConfig> occlusion;
};
SimulateConfig simulate_config_from_json(const Json& value, const std::string& name);
Json simulate_config_to_json(const SimulateConfig& config);

Json solver_config_to_json(const SolverConfig& config);
Json trial_spec_to_json(const TrialSpec& spec);
Json trial_report_to_json(const TrialReport& report);
Json benchmark_summary_to_json(const BenchmarkSummary& summary, const Protocol& protocol,
                               bool include_trials);
// One row per cell: protocol, label, the grid parameters, trials,
// successes, mean/median error, mean runtime and iterations.
std::string benchmark_summary_csv(const BenchmarkSummary& summary);

}  // namespace cfpose
