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

#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "cfpose/errors.hpp"
#include "cfpose/simgen.hpp"

namespace cfpose {
namespace {

TEST(GenScene, DefaultCardinality) {
  const SceneConfig config = default_scene_config(ModelKind::kBearing3D2D);
  EXPECT_EQ(config.n_points, 3142);
  const Scene scene = gen_scene(config);
  EXPECT_EQ(scene.p.size(), 3142u);
  EXPECT_EQ(scene.q.size(), 3142u);
  EXPECT_EQ(scene.p.dim, 3);
  EXPECT_EQ(scene.q.dim, 2);
  EXPECT_NO_THROW(scene.p.validate());
  EXPECT_NO_THROW(scene.q.validate());
}

TEST(GenScene, BearingRelationHoldsPerTruePair) {
  SceneConfig config = default_scene_config(ModelKind::kBearing3D2D);
  config.seed = 229;
  const Scene scene = gen_scene(config);
  const Mat3 r = rotation_from_euler(scene.theta_star.angles);
  for (std::size_t k = 0; k < scene.p.size(); ++k) {
    const Vec3 lhs = (r * scene.p.points[k] + scene.theta_star.translation).normalized();
    const Vec3 q = scene.q.points[scene.oracle.correspondence[k]];
    EXPECT_LT((lhs - q.normalized()).norm(), 1e-12) << "point " << k;
  }
}

TEST(GenScene, OracleIsBijective) {
  for (ModelKind kind : {ModelKind::kRigid3D, ModelKind::kBearing3D2D,
                         ModelKind::kEpipolar2D2D, ModelKind::kHomography2D2D}) {
    SceneConfig config = default_scene_config(kind);
    config.n_points = 777;
    const Scene scene = gen_scene(config);
    std::vector<std::size_t> c = scene.oracle.correspondence;
    std::sort(c.begin(), c.end());
    std::vector<std::size_t> expect(scene.q.size());
    std::iota(expect.begin(), expect.end(), 0);
    EXPECT_EQ(c, expect) << model_name(kind);
    for (std::size_t k = 0; k < scene.p.size(); ++k) {
      const Vec3 h = apply_model(scene.model, scene.p.points[k], scene.theta_star);
      const Vec3 q = scene.q.points[scene.oracle.correspondence[k]];
      if (kind == ModelKind::kRigid3D) {
        EXPECT_LT((h - q).norm(), 1e-12);
      } else if (kind != ModelKind::kEpipolar2D2D) {
        EXPECT_LT((h - q.normalized()).norm(), 1e-12);
      }
    }
  }
}

TEST(GenScene, IdentityPoseGivesShuffledCopy) {
  SceneConfig config = default_scene_config(ModelKind::kHomography2D2D);
  config.theta_star = PoseParams{};
  config.n_points = 300;
  const Scene scene = gen_scene(config);
  auto key = [](const Vec3& a, const Vec3& b) {
    return std::tie(a.x(), a.y(), a.z()) < std::tie(b.x(), b.y(), b.z());
  };
  std::vector<Vec3> p = scene.p.points, q = scene.q.points;
  EXPECT_NE(p, q);
  std::sort(p.begin(), p.end(), key);
  std::sort(q.begin(), q.end(), key);
  for (std::size_t k = 0; k < p.size(); ++k) EXPECT_LT((p[k] - q[k]).norm(), 1e-15);
}

TEST(GenScene, DeterministicPerSeed) {
  SceneConfig config = default_scene_config(ModelKind::kEpipolar2D2D);
  config.seed = 233;
  const Scene a = gen_scene(config), b = gen_scene(config);
  EXPECT_EQ(a.p.points, b.p.points);
  EXPECT_EQ(a.q.points, b.q.points);
  EXPECT_EQ(a.oracle.correspondence, b.oracle.correspondence);
  config.seed = 234;
  EXPECT_NE(gen_scene(config).oracle.correspondence, a.oracle.correspondence);
}

TEST(GenScene, MinimalSceneAndValidation) {
  SceneConfig config = default_scene_config(ModelKind::kBearing3D2D);
  config.n_points = 5;
  EXPECT_EQ(gen_scene(config).p.size(), 5u);
  config.n_points = 4;
  EXPECT_THROW(gen_scene(config), InvalidArgument);
  config = default_scene_config(ModelKind::kBearing3D2D);
  config.focal_length = 0.0;
  EXPECT_THROW(gen_scene(config), InvalidArgument);
  config = default_scene_config(ModelKind::kBearing3D2D);
  config.depth = -1.0;
  EXPECT_THROW(gen_scene(config), InvalidArgument);
}

TEST(GenScene, PointsBehindCameraRejected) {
  SceneConfig config = default_scene_config(ModelKind::kBearing3D2D);
  config.theta_star.angles.pitch = 3.0;
  EXPECT_THROW(gen_scene(config), InvalidArgument);
}

TEST(Perturb, ZeroNoiseIsIdentity) {
  const Scene scene = gen_scene(default_scene_config(ModelKind::kBearing3D2D));
  EXPECT_EQ(perturb(scene.q, 0.0, 5).points, scene.q.points);
}

TEST(Perturb, SampleVarianceMatchesScale) {
  const Scene scene = gen_scene(default_scene_config(ModelKind::kBearing3D2D));
  const double b_p = 0.02;
  const PointSet noisy = perturb(scene.q, b_p, 239);
  double ss = 0.0;
  for (std::size_t k = 0; k < noisy.size(); ++k) {
    const Vec3 d = noisy.points[k] - scene.q.points[k];
    EXPECT_EQ(d.z(), 0.0);
    ss += d.x() * d.x() + d.y() * d.y();
  }
  const double var = ss / (2.0 * double(noisy.size()));
  EXPECT_NEAR(var / (b_p * b_p), 1.0, 0.1);
}

TEST(SubsampleMismatch, InfiniteThresholdKeepsAll) {
  const Scene scene = gen_scene(default_scene_config(ModelKind::kBearing3D2D));
  const Subsample s =
      subsample_mismatch(scene.q, std::numeric_limits<double>::infinity(), 3);
  EXPECT_EQ(s.set.size(), scene.q.size());
}

TEST(SubsampleMismatch, SurvivorsWithinBinomialBand) {
  const Scene scene = gen_scene(default_scene_config(ModelKind::kBearing3D2D));
  const double n = double(scene.q.size());
  for (double b_m : {0.5, 1.0, 1.5}) {
    const double p = std::erf(b_m / std::sqrt(2.0));
    const double mean = n * p, sd = std::sqrt(n * p * (1 - p));
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const double kept = double(subsample_mismatch(scene.q, b_m, seed).set.size());
      EXPECT_LE(std::abs(kept - mean), 3.0 * sd) << "b_m=" << b_m;
    }
  }
}

TEST(SubsampleMismatch, ReportedCountsFallInBand) {
  // Survivor counts reported for 3142 points at b_m = 0.5, 1, 1.5.
  const double n = 3142.0;
  const double reported[] = {1239, 2149, 2734};
  const double b_m[] = {0.5, 1.0, 1.5};
  for (int i = 0; i < 3; ++i) {
    const double p = std::erf(b_m[i] / std::sqrt(2.0));
    const double mean = n * p, sd = std::sqrt(n * p * (1 - p));
    EXPECT_LE(std::abs(reported[i] - mean), 3.0 * sd) << "b_m=" << b_m[i];
  }
  EXPECT_NEAR(n * std::erf(1.0 / std::sqrt(2.0)), 2145.0, 1.0);
}

TEST(InjectOutliers, CountAndBox) {
  const Scene scene = gen_scene(default_scene_config(ModelKind::kBearing3D2D));
  const OutlierBox box;
  EXPECT_EQ(inject_outliers(scene.q, 0, box, 1).set.points, scene.q.points);
  const WithOutliers w = inject_outliers(scene.q, 150, box, 241);
  ASSERT_EQ(w.set.size(), scene.q.size() + 150);
  ASSERT_EQ(w.outlier.size(), w.set.size());
  EXPECT_EQ(std::count(w.outlier.begin(), w.outlier.end(), true), 150);
  for (std::size_t k = 0; k < w.set.size(); ++k) {
    if (!w.outlier[k]) continue;
    const Vec3& v = w.set.points[k];
    EXPECT_GE(v.x(), box.u0);
    EXPECT_LE(v.x(), box.u0 + box.width);
    EXPECT_GE(v.y(), box.v0);
    EXPECT_LE(v.y(), box.v0 + box.height);
    EXPECT_EQ(v.z(), 1.0);
  }
}

TEST(ApplyNoise, OracleTracksSubsampleAndOutliers) {
  Scene scene = gen_scene(default_scene_config(ModelKind::kBearing3D2D));
  const Scene clean = scene;
  NoiseConfig noise;
  noise.b_m = 1.0;
  noise.outlier_count = 20;
  apply_noise(scene, noise, 251);
  EXPECT_EQ(std::count(scene.oracle.q_outlier.begin(), scene.oracle.q_outlier.end(), true), 20);
  std::size_t surviving = 0;
  for (std::size_t k = 0; k < scene.p.size(); ++k) {
    const std::size_t c = scene.oracle.correspondence[k];
    if (c == OraclePermutation::kNone) continue;
    ++surviving;
    EXPECT_FALSE(scene.oracle.q_outlier[c]);
    EXPECT_EQ(scene.q.points[c], clean.q.points[clean.oracle.correspondence[k]]);
  }
  EXPECT_EQ(surviving + 20, scene.q.size());
}

TEST(PerturbInitial, NormalAndUniformScales) {
  const PoseParams truth = default_theta_star(ModelKind::kBearing3D2D);
  EXPECT_LT(pose_distance(perturb_initial(truth, ModelKind::kBearing3D2D, 0.0, 1), truth),
            1e-15);
  double ss = 0.0;
  for (std::uint64_t s = 0; s < 400; ++s) {
    const auto d = perturb_initial(truth, ModelKind::kBearing3D2D, 0.2, s).as_vector6() -
                   truth.as_vector6();
    ss += d.squaredNorm();
  }
  EXPECT_NEAR(ss / (400 * 6) / 0.04, 1.0, 0.1);
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto d = perturb_initial(truth, ModelKind::kBearing3D2D, 0.2, s,
                                   Perturbation::kUniform).as_vector6() -
                   truth.as_vector6();
    EXPECT_GE(d.minCoeff(), 0.0);
    EXPECT_LE(d.maxCoeff(), 0.2 + 1e-15);
  }
}

TEST(PerturbInitial, EpipolarStaysOnSphere) {
  const PoseParams truth = default_theta_star(ModelKind::kEpipolar2D2D);
  for (std::uint64_t s = 0; s < 50; ++s) {
    EXPECT_NEAR(perturb_initial(truth, ModelKind::kEpipolar2D2D, 0.3, s).translation.norm(),
                1.0, 1e-15);
  }
}

TEST(OcclusionScene, FractionsAndGray) {
  SceneConfig config = default_scene_config(ModelKind::kBearing3D2D);
  config.n_points = 2000;
  const OcclusionConfig occ;
  const Scene scene = gen_occlusion_scene(config, occ);
  ASSERT_TRUE(scene.p.gray && scene.q.gray);
  EXPECT_EQ(scene.p.gray->size(), scene.p.size());
  std::size_t p_occ = 0, q_occ = 0;
  for (double g : *scene.p.gray) p_occ += std::abs(g - occ.p_occluder_gray) < 0.03;
  for (std::size_t i = 0; i < scene.q.size(); ++i) q_occ += scene.oracle.q_outlier[i];
  EXPECT_NEAR(double(p_occ) / scene.p.size(), occ.p_fraction, 0.03);
  EXPECT_NEAR(double(q_occ) / scene.q.size(), occ.q_fraction, 0.03);
}

TEST(DeriveSeed, DistinctStreams) {
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
}

TEST(CurveName, RoundTrip) {
  for (CurveKind c : {CurveKind::kLimacon, CurveKind::kSpaceLimacon}) {
    EXPECT_EQ(curve_from_name(curve_name(c)), c);
  }
  EXPECT_THROW(curve_from_name("spiral"), InvalidArgument);
}

}  // namespace
}  // namespace cfpose
