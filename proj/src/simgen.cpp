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

#include "cfpose/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "cfpose/errors.hpp"

namespace cfpose {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::string_view curve_name(CurveKind c) {
  return c == CurveKind::kLimacon ? "limacon" : "space_limacon";
}

CurveKind curve_from_name(std::string_view name) {
  if (name == "limacon") return CurveKind::kLimacon;
  if (name == "space_limacon") return CurveKind::kSpaceLimacon;
  throw InvalidArgument("unknown curve '" + std::string(name) + "'");
}

void SceneConfig::validate() const {
  if (!(focal_length > 0)) throw InvalidArgument("focal_length must be > 0");
  if (!(depth > 0)) throw InvalidArgument("depth must be > 0");
  if (!(curve_scale > 0)) throw InvalidArgument("curve_scale must be > 0");
  if (n_points < 5) throw InvalidArgument("n_points must be at least 5");
  if (!theta_star.as_vector6().allFinite()) {
    throw InvalidArgument("theta_star must be finite");
  }
  if (model == ModelKind::kEpipolar2D2D &&
      std::abs(theta_star.translation.norm() - 1.0) > 1e-9) {
    throw InvalidArgument("epipolar ground truth needs a unit translation");
  }
}

void NoiseConfig::validate() const {
  if (!(b_p >= 0) || !(b_i >= 0) || !(b_m >= 0) || outlier_count < 0 ||
      !(outlier_box.width >= 0) || !(outlier_box.height >= 0)) {
    throw InvalidArgument("noise parameters must be nonnegative");
  }
}

PoseParams default_theta_star(ModelKind model) {
  PoseParams t;
  switch (model) {
    case ModelKind::kRigid3D:
      t.angles = {0.3, -0.2, 0.25};
      t.translation = Vec3(0.5, -0.3, 0.4);
      break;
    case ModelKind::kBearing3D2D:
      t.angles = {0.1, -0.08, 0.12};
      t.translation = Vec3(0.15, -0.1, 0.2);
      break;
    case ModelKind::kHomography2D2D:
      // Scene units; the plane sits at the default depth 4.
      t.angles = {0.1, -0.08, 0.12};
      t.translation = Vec3(0.6, -0.4, 0.8);
      break;
    case ModelKind::kEpipolar2D2D:
      t.angles = {0.1, -0.08, 0.12};
      t.translation = Vec3(0.8, -0.3, 0.2).normalized();
      break;
  }
  return t;
}

SceneConfig default_scene_config(ModelKind model) {
  SceneConfig c;
  c.model = model;
  c.theta_star = default_theta_star(model);
  if (model == ModelKind::kRigid3D || model == ModelKind::kEpipolar2D2D) {
    c.curve = CurveKind::kSpaceLimacon;
  }
  return c;
}

PoseParams random_theta_star(ModelKind model, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(-0.2, 0.2);
  std::uniform_real_distribution<double> shift(-0.2, 0.2);
  PoseParams t;
  t.angles = {angle(rng), angle(rng), angle(rng)};
  switch (model) {
    case ModelKind::kRigid3D:
      t.translation = Vec3(shift(rng), shift(rng), shift(rng)) * 3.0;
      break;
    case ModelKind::kBearing3D2D:
      t.translation = Vec3(shift(rng), shift(rng), shift(rng));
      break;
    case ModelKind::kHomography2D2D:
      t.translation = Vec3(shift(rng), shift(rng), shift(rng)) * 4.0;
      break;
    case ModelKind::kEpipolar2D2D: {
      std::normal_distribution<double> n(0.0, 1.0);
      Vec3 d(n(rng), n(rng), 0.3 * n(rng));
      t.translation = d.normalized();
      break;
    }
  }
  return t;
}

namespace {

struct CurveSample {
  double x, y, relief;
};

CurveSample curve_at(CurveKind kind, double scale, double t) {
  constexpr double a = 0.49, b = 0.112, c = 0.07;
  const double r = a + b * std::cos(3 * t) + c * std::sin(2 * t);
  CurveSample s{scale * (0.07 + r * std::cos(t)), scale * (0.042 + r * std::sin(t)),
                0.0};
  if (kind == CurveKind::kSpaceLimacon) s.relief = 0.3 * std::sin(2 * t + 0.7);
  return s;
}

}  // namespace

Scene gen_scene(const SceneConfig& config) {
  config.validate();
  const ModelKind kind = config.model;
  const double lambda = config.depth;
  const Mat3 rot = rotation_from_euler(config.theta_star.angles);
  Vec3 shift = config.theta_star.translation;
  if (kind == ModelKind::kBearing3D2D) shift *= lambda;

  Scene scene;
  scene.theta_star = config.theta_star;
  scene.model.kind = kind;
  if (kind == ModelKind::kHomography2D2D) {
    scene.model = CorrespondenceModel::homography(Vec3::UnitZ(), lambda);
  }
  scene.p.dim = p_dimension(kind);
  scene.q.dim = q_dimension(kind);

  std::vector<Vec3> p, q;
  const int n = config.n_points;
  int behind = 0;
  for (int k = 0; k < n; ++k) {
    const double t = 2.0 * std::numbers::pi * k / n;
    const CurveSample c = curve_at(config.curve, config.curve_scale, t);
    const double z = kind == ModelKind::kHomography2D2D ? 1.0 : 1.0 + c.relief;
    const Vec3 scene_point = lambda * Vec3(c.x, c.y, z);
    const Vec3 moved = rot * scene_point + shift;
    if (kind != ModelKind::kRigid3D && !(moved.z() > 1e-6 * lambda)) {
      ++behind;
      continue;
    }
    switch (kind) {
      case ModelKind::kRigid3D:
        p.push_back(scene_point);
        q.push_back(moved);
        break;
      case ModelKind::kBearing3D2D:
        p.push_back(scene_point / lambda);
        q.push_back(moved / moved.z());
        break;
      case ModelKind::kHomography2D2D:
      case ModelKind::kEpipolar2D2D:
        p.push_back(scene_point / scene_point.z());
        q.push_back(moved / moved.z());
        break;
    }
  }
  if (behind * 100 > n) {
    throw InvalidArgument(std::to_string(behind) +
                          " scene points fall behind the second camera");
  }

  std::vector<std::size_t> perm(p.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(derive_seed(config.seed, 1));
  std::shuffle(perm.begin(), perm.end(), rng);

  scene.p.points = std::move(p);
  scene.q.points.resize(q.size());
  for (std::size_t k = 0; k < q.size(); ++k) scene.q.points[perm[k]] = q[k];
  scene.oracle.correspondence = std::move(perm);
  scene.oracle.q_outlier.assign(q.size(), false);
  return scene;
}

PointSet perturb(const PointSet& set, double b_p, std::uint64_t seed) {
  if (!(b_p >= 0)) throw InvalidArgument("b_p must be nonnegative");
  PointSet out = set;
  if (b_p == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const int comps = set.dim == 2 ? 2 : 3;
  for (auto& p : out.points) {
    for (int c = 0; c < comps; ++c) p[c] += b_p * noise(rng);
  }
  return out;
}

Subsample subsample_mismatch(const PointSet& set, double b_m, std::uint64_t seed) {
  if (!(b_m >= 0)) throw InvalidArgument("b_m must be nonnegative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> draw(0.0, 1.0);
  std::vector<std::size_t> kept;
  kept.reserve(set.size());
  for (std::size_t k = 0; k < set.size(); ++k) {
    if (std::abs(draw(rng)) <= b_m) kept.push_back(k);
  }
  Subsample out{set.select(kept), kept};
  return out;
}

WithOutliers inject_outliers(const PointSet& set, int count,
                             const OutlierBox& box, std::uint64_t seed) {
  if (count < 0) throw InvalidArgument("outlier count must be nonnegative");
  WithOutliers out{set, std::vector<bool>(set.size(), false)};
  if (count == 0) return out;
  if (set.dim != 2) throw InvalidArgument("outlier boxes are defined for 2D sets");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < count; ++i) {
    const double u = box.u0 + box.width * unit(rng);
    const double v = box.v0 + box.height * unit(rng);
    out.set.points.emplace_back(u, v, 1.0);
    out.outlier.push_back(true);
  }
  if (out.set.gray) out.set.gray->resize(out.set.points.size(), 0.0);
  return out;
}

PoseParams perturb_initial(const PoseParams& theta_star, ModelKind model,
                           double scale, std::uint64_t seed, Perturbation kind) {
  std::mt19937_64 rng(seed);
  Eigen::Matrix<double, 6, 1> v = theta_star.as_vector6();
  if (kind == Perturbation::kNormal) {
    std::normal_distribution<double> d(0.0, 1.0);
    for (int i = 0; i < 6; ++i) v[i] += scale * d(rng);
  } else {
    std::uniform_real_distribution<double> d(0.0, 1.0);
    for (int i = 0; i < 6; ++i) v[i] += scale * d(rng);
  }
  PoseParams out = PoseParams::from_vector6(v);
  if (model == ModelKind::kEpipolar2D2D) {
    out.translation.normalize();
  }
  return out;
}

namespace {

// Rewrites correspondences after Q has been reduced to `kept` (old indices).
void remap_q(OraclePermutation& oracle, const std::vector<std::size_t>& kept,
             std::size_t old_size) {
  std::vector<std::size_t> to_new(old_size, OraclePermutation::kNone);
  for (std::size_t i = 0; i < kept.size(); ++i) to_new[kept[i]] = i;
  for (auto& c : oracle.correspondence) {
    if (c != OraclePermutation::kNone) c = to_new[c];
  }
  std::vector<bool> outlier(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    outlier[i] = oracle.q_outlier[kept[i]];
  }
  oracle.q_outlier = std::move(outlier);
}

}  // namespace

void apply_noise(Scene& scene, const NoiseConfig& noise, std::uint64_t seed) {
  noise.validate();
  scene.q = perturb(scene.q, noise.b_p, derive_seed(seed, 2));
  if (std::isfinite(noise.b_m)) {
    const std::size_t old = scene.q.size();
    Subsample sub = subsample_mismatch(scene.q, noise.b_m, derive_seed(seed, 3));
    scene.q = std::move(sub.set);
    remap_q(scene.oracle, sub.kept, old);
  }
  if (noise.outlier_count > 0) {
    WithOutliers w = inject_outliers(scene.q, noise.outlier_count,
                                     noise.outlier_box, derive_seed(seed, 4));
    scene.q = std::move(w.set);
    scene.oracle.q_outlier.resize(scene.q.size(), true);
  }
}

namespace {

// Hides `hidden` random points and scatters as many occluder points over
// the bounding box. Returns the surviving old indices in their new order.
std::vector<std::size_t> occlude(PointSet& set, std::vector<double>& gray,
                                 double fraction, double occluder_gray,
                                 double gray_noise, std::mt19937_64& rng) {
  const std::size_t n = set.size();
  const auto hidden = static_cast<std::size_t>(std::llround(fraction * n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> kept(order.begin() + hidden, order.end());
  std::sort(kept.begin(), kept.end());

  Eigen::Vector2d lo = set.points[0].head<2>(), hi = lo;
  for (const auto& p : set.points) {
    lo = lo.cwiseMin(p.head<2>());
    hi = hi.cwiseMax(p.head<2>());
  }
  PointSet out = set.select(kept);
  std::vector<double> out_gray;
  for (auto k : kept) out_gray.push_back(gray[k]);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gn(0.0, gray_noise);
  const double z = set.points[0].z();
  for (std::size_t i = 0; i < hidden; ++i) {
    const double u = lo.x() + (hi.x() - lo.x()) * unit(rng);
    const double v = lo.y() + (hi.y() - lo.y()) * unit(rng);
    out.points.emplace_back(u, v, z);
    out_gray.push_back(occluder_gray + gn(rng));
  }
  out.gray.reset();
  set = std::move(out);
  gray = std::move(out_gray);
  return kept;
}

}  // namespace

Scene gen_occlusion_scene(const SceneConfig& config,
                          const OcclusionConfig& occlusion) {
  if (config.model == ModelKind::kRigid3D) {
    throw InvalidArgument("occlusion scenes are image based");
  }
  auto bad_fraction = [](double f) { return !(f >= 0.0 && f < 1.0); };
  if (occlusion.gray_levels < 1 || bad_fraction(occlusion.p_fraction) ||
      bad_fraction(occlusion.q_fraction)) {
    throw InvalidArgument("bad occlusion configuration");
  }
  Scene scene = gen_scene(config);
  const std::size_t n = scene.p.size();
  std::mt19937_64 rng(derive_seed(config.seed, 5));
  std::normal_distribution<double> gn(0.0, occlusion.gray_noise);

  // Levels repeat over 2G arcs of the curve so each level is spread out.
  const int g = occlusion.gray_levels;
  auto level_gray = [&](std::size_t k) {
    const auto arc = static_cast<int>((2 * g * k) / n);
    const int level = arc % g;
    return g == 1 ? 0.65 : 0.4 + 0.5 * level / (g - 1);
  };
  std::vector<double> p_gray(n), q_gray(scene.q.size());
  for (std::size_t k = 0; k < n; ++k) {
    p_gray[k] = level_gray(k) + gn(rng);
    q_gray[scene.oracle.correspondence[k]] = level_gray(k) + gn(rng);
  }

  const std::size_t q_old = scene.q.size();
  const auto p_kept = occlude(scene.p, p_gray, occlusion.p_fraction,
                              occlusion.p_occluder_gray, occlusion.gray_noise, rng);
  const auto q_kept = occlude(scene.q, q_gray, occlusion.q_fraction,
                              occlusion.q_occluder_gray, occlusion.gray_noise, rng);

  std::vector<std::size_t> q_new(q_old, OraclePermutation::kNone);
  for (std::size_t i = 0; i < q_kept.size(); ++i) q_new[q_kept[i]] = i;
  std::vector<std::size_t> corr(scene.p.size(), OraclePermutation::kNone);
  for (std::size_t i = 0; i < p_kept.size(); ++i) {
    corr[i] = q_new[scene.oracle.correspondence[p_kept[i]]];
  }
  scene.oracle.correspondence = std::move(corr);
  scene.oracle.q_outlier.assign(scene.q.size(), false);
  for (std::size_t i = q_kept.size(); i < scene.q.size(); ++i) {
    scene.oracle.q_outlier[i] = true;
  }
  scene.p.gray = std::move(p_gray);
  scene.q.gray = std::move(q_gray);
  return scene;
}

}  // namespace cfpose
