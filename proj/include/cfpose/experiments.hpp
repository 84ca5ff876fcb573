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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cfpose/features.hpp"
#include "cfpose/geometry.hpp"
#include "cfpose/robust.hpp"
#include "cfpose/simgen.hpp"
#include "cfpose/solver.hpp"

namespace cfpose {

// Everything the estimate pipeline does besides the plain solve.
struct EstimateOptions {
  FeatureBasis basis;
  ProblemOptions problem;
  SolverConfig solver;
  std::optional<RansacConfig> ransac;
  // Gray-level k-means occlusion filter: cluster count and kept pairs
  // (default k - 1).
  std::optional<int> occlusion_clusters;
  std::optional<std::size_t> occlusion_keep;
  // Extra starts drawn as theta0 + multistart_scale * randn; the lowest
  // objective wins (ties: earliest start).
  int multistart = 1;
  double multistart_scale = 0.2;
  std::uint64_t seed = 1;

  EstimateOptions();
};

struct OcclusionDiagnostics {
  std::size_t p_kept = 0;
  std::size_t q_kept = 0;
  std::vector<GrayCluster> p_clusters;
  std::vector<GrayCluster> q_clusters;
  ClusterPairing pairing;
};

struct RansacDiagnostics {
  PoseParams initial_theta;
  double threshold = 0.0;
  std::size_t p_inliers = 0;
  std::size_t q_inliers = 0;
  int best_hypothesis = -1;
  std::size_t best_inlier_count = 0;
  std::vector<bool> p_mask;
  std::vector<bool> q_mask;
};

struct EstimateOutcome {
  Estimate estimate;
  int chosen_start = 0;
  std::optional<OcclusionDiagnostics> occlusion;
  std::optional<RansacDiagnostics> ransac;
};

// Occlusion filter (optional) -> plain solve or RANSAC, from each start.
EstimateOutcome estimate_pose(const CorrespondenceModel& model, const PointSet& p,
                              const PointSet& q, const PoseParams& theta0,
                              const EstimateOptions& options);

// Pose error used by the trial reports: ||theta - theta*|| on the 6-vector.
// For the epipolar model the translation sign is unobservable, so the
// smaller of the errors for +T and -T is taken.
double pose_error(const PoseParams& estimate, const PoseParams& truth, ModelKind model);
// Angle of R_hat^T R* in degrees.
double rotation_error_deg(const PoseParams& estimate, const PoseParams& truth);
// Angle between translation directions in degrees, up to sign.
double direction_error_deg(const PoseParams& estimate, const PoseParams& truth);

inline constexpr double kSuccessThreshold = 0.1;

struct TrialSpec {
  SceneConfig scene;
  NoiseConfig noise;
  Perturbation perturbation = Perturbation::kNormal;
  std::optional<OcclusionConfig> occlusion;
  std::string basis = "paper18";
  ProblemOptions problem;
  SolverConfig solver;
  std::optional<RansacConfig> ransac;
  std::optional<int> occlusion_clusters;
  std::optional<std::size_t> occlusion_keep;
  int multistart = 1;
};

struct TrialReport {
  std::uint64_t seed = 0;
  PoseParams theta_star;
  PoseParams theta0;
  PoseParams theta_hat;
  double error = 0.0;
  bool success = false;
  int iterations = 0;
  std::string reason;
  double runtime_ms = 0.0;
  std::size_t p_size = 0;
  std::size_t q_size = 0;
  double rotation_error_deg = 0.0;
  double direction_error_deg = 0.0;
  // Set for RANSAC trials: error of the plain solve before outlier removal.
  std::optional<double> pre_ransac_error;
  // Outliers injected into Q and how many of them RANSAC rejected.
  std::optional<std::size_t> outliers_injected;
  std::optional<std::size_t> outliers_rejected;
  // Set when the estimation itself threw (no consensus, degenerate data).
  std::optional<std::string> failure;
};

// Builds the scene for `seed`, applies noise, draws theta0 and estimates.
// Scene, noise and theta0 use derived streams of the same seed, so two
// specs that differ only in noise levels see the same curve and draws.
TrialReport run_trial(const TrialSpec& spec, std::uint64_t seed);

struct CellSpec {
  std::string label;
  // Grid coordinates of the cell, e.g. {"b_i", 0.1}, {"b_p", 0.01}.
  std::vector<std::pair<std::string, double>> params;
  TrialSpec trial;
  int trials = 100;
};

struct Protocol {
  std::string name;
  std::vector<CellSpec> cells;
  // Timing protocols run trials one at a time on all cores; the others run
  // trials concurrently, one per core.
  bool timing = false;
};

std::vector<std::string> protocol_names();
// Named presets; `trials` overrides the per-cell trial count.
Protocol preset_protocol(std::string_view name, std::optional<int> trials = std::nullopt);

struct CellResult {
  std::string label;
  std::vector<std::pair<std::string, double>> params;
  int trials = 0;
  int successes = 0;
  double mean_error = 0.0;
  double median_error = 0.0;
  double mean_runtime_ms = 0.0;
  double mean_iterations = 0.0;
  std::optional<double> median_pre_ransac_error;
  std::vector<TrialReport> reports;
};

struct BenchmarkSummary {
  std::string protocol;
  std::uint64_t seed = 0;
  std::vector<CellResult> cells;
};

// Trial t of every cell uses seed derive_seed(seed, t). Results are reduced
// by trial index, so output is independent of scheduling.
BenchmarkSummary run_protocol(const Protocol& protocol, std::uint64_t seed);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace cfpose
