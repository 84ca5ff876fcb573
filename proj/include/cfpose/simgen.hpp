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
#include <limits>
#include <random>
#include <string_view>
#include <vector>

#include "cfpose/geometry.hpp"

namespace cfpose {

// SplitMix64 mix of (seed, stream); gives independent generator seeds for
// the separate random stages of a trial.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

enum class CurveKind {
  // Closed planar curve r(t) = a + b cos 3t + c sin 2t about an offset center.
  kLimacon,
  // Same outline with sinusoidal depth relief, for non-planar scenes.
  kSpaceLimacon,
};

std::string_view curve_name(CurveKind c);
CurveKind curve_from_name(std::string_view name);

struct SceneConfig {
  ModelKind model = ModelKind::kBearing3D2D;
  // Pixels. Image coordinates are pixel / focal_length; only rasterization
  // uses this directly.
  double focal_length = 800.0;
  // Latent depth lambda of the pattern plane in the first camera.
  double depth = 4.0;
  CurveKind curve = CurveKind::kLimacon;
  // Multiplies the curve's extent in the image (normalized units).
  double curve_scale = 1.0;
  int n_points = 3142;
  PoseParams theta_star;
  std::uint64_t seed = 1;

  // Throws InvalidArgument unless f_c > 0, lambda > 0 and N >= 5.
  void validate() const;
};

// Ground-truth pose used by the presets for each model.
PoseParams default_theta_star(ModelKind model);
SceneConfig default_scene_config(ModelKind model);
// A random but well-posed ground truth for property tests.
PoseParams random_theta_star(ModelKind model, std::mt19937_64& rng);

struct OutlierBox {
  double u0 = -0.6;
  double v0 = -0.4;
  double width = 0.05;
  double height = 0.05;
};

struct NoiseConfig {
  // Std-dev of additive noise on Q image coordinates (normalized units).
  double b_p = 0.0;
  // Std-dev (or uniform scale) of the initial-condition perturbation.
  double b_i = 0.0;
  // Q point kept iff |randn| <= b_m.
  double b_m = std::numeric_limits<double>::infinity();
  int outlier_count = 0;
  OutlierBox outlier_box;

  void validate() const;
};

// True correspondences. correspondence[k] is the Q index of P point k's
// image, or kNone when it has none (dropped, occluded, or a distractor).
struct OraclePermutation {
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> correspondence;
  std::vector<bool> q_outlier;
};

struct Scene {
  CorrespondenceModel model;
  PointSet p;
  PointSet q;
  OraclePermutation oracle;
  PoseParams theta_star;
};

// P: the curve seen at the reference pose; Q: its images after theta*,
// shuffled. Points that land behind the second camera are dropped with their
// partner; more than 1% of them is an error.
Scene gen_scene(const SceneConfig& config);

// Adds b_p * randn to each image coordinate of a 2D set (all three
// coordinates of a 3D set).
PointSet perturb(const PointSet& set, double b_p, std::uint64_t seed);

struct Subsample {
  PointSet set;
  std::vector<std::size_t> kept;
};
// Keeps each point iff |randn| <= b_m (probability erf(b_m / sqrt 2)).
Subsample subsample_mismatch(const PointSet& set, double b_m, std::uint64_t seed);

struct WithOutliers {
  PointSet set;
  std::vector<bool> outlier;
};
// Appends `count` 2D points uniform in the box.
WithOutliers inject_outliers(const PointSet& set, int count,
                             const OutlierBox& box, std::uint64_t seed);

enum class Perturbation { kNormal, kUniform };
// theta* + scale * randn(6) (or rand(6)) on [angles; translation]; the
// epipolar translation is renormalized to a unit direction.
PoseParams perturb_initial(const PoseParams& theta_star, ModelKind model,
                           double scale, std::uint64_t seed,
                           Perturbation kind = Perturbation::kNormal);

// perturb -> subsample_mismatch -> inject_outliers on Q, keeping the oracle
// consistent.
void apply_noise(Scene& scene, const NoiseConfig& noise, std::uint64_t seed);

struct OcclusionConfig {
  // Distinct gray levels painted along arcs of the curve.
  int gray_levels = 4;
  // Fraction of pattern points replaced by occluder points, per image.
  double p_fraction = 0.2;
  double q_fraction = 0.2;
  double p_occluder_gray = 0.05;
  double q_occluder_gray = 0.12;
  double gray_noise = 0.005;
};

// A scene with gray values. In each image a random fraction of the pattern
// is hidden and the same number of occluder points of a distinct gray is
// scattered over the pattern's bounding box.
Scene gen_occlusion_scene(const SceneConfig& config,
                          const OcclusionConfig& occlusion);

}  // namespace cfpose
