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

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "cfpose/errors.hpp"
#include "cfpose/experiments.hpp"

namespace cfpose {
namespace {

PoseParams pose(double a, double b, double c, Vec3 t) {
  PoseParams p;
  p.angles = {a, b, c};
  p.translation = t;
  return p;
}

TEST(PoseError, EuclideanOnParameterVector) {
  const PoseParams truth = pose(0.1, 0.2, 0.3, Vec3(1, 2, 3));
  const PoseParams est = pose(0.1, 0.2, 0.3 + 0.03, Vec3(1, 2, 3 + 0.04));
  EXPECT_NEAR(pose_error(est, truth, ModelKind::kBearing3D2D), 0.05, 1e-15);
  EXPECT_EQ(pose_error(truth, truth, ModelKind::kRigid3D), 0.0);
}

TEST(PoseError, EpipolarAcceptsEitherTranslationSign) {
  const PoseParams truth = pose(0.1, -0.2, 0.05, Vec3(0.6, 0, 0.8));
  PoseParams flipped = truth;
  flipped.translation = -truth.translation;
  EXPECT_EQ(pose_error(flipped, truth, ModelKind::kEpipolar2D2D), 0.0);
  EXPECT_NEAR(pose_error(flipped, truth, ModelKind::kHomography2D2D), 2.0, 1e-15);
}

TEST(PoseError, RotationAndDirectionDegrees) {
  const PoseParams truth = pose(0.0, 0.0, 0.0, Vec3(1, 0, 0));
  const PoseParams est = pose(std::numbers::pi / 6, 0.0, 0.0, Vec3(1, 1, 0));
  EXPECT_NEAR(rotation_error_deg(est, truth), 30.0, 1e-10);
  EXPECT_NEAR(direction_error_deg(est, truth), 45.0, 1e-10);
  PoseParams opposite = truth;
  opposite.translation = Vec3(-2, 0, 0);
  EXPECT_NEAR(direction_error_deg(opposite, truth), 0.0, 1e-6);
  EXPECT_EQ(direction_error_deg(pose(0, 0, 0, Vec3::Zero()), truth), 180.0);
}

TEST(Presets, GridShapes) {
  EXPECT_EQ(preset_protocol("table1a").cells.size(), 6u);
  EXPECT_EQ(preset_protocol("table1b").cells.size(), 3u);
  EXPECT_EQ(preset_protocol("noiseless").cells.size(), 1u);
  const Protocol runtime = preset_protocol("runtime");
  EXPECT_TRUE(runtime.timing);
  ASSERT_EQ(runtime.cells.size(), 6u);
  EXPECT_EQ(runtime.cells.front().trial.scene.n_points, 500);
  EXPECT_EQ(runtime.cells.back().trial.scene.n_points, 16000);
  EXPECT_EQ(preset_protocol("table1a").cells[0].trials, 100);
  EXPECT_EQ(preset_protocol("table1a", 7).cells[5].trials, 7);
  for (const auto& name : protocol_names()) EXPECT_NO_THROW(preset_protocol(name)) << name;
  EXPECT_THROW(preset_protocol("table2"), InvalidArgument);
  EXPECT_THROW(preset_protocol("table1a", 0), InvalidArgument);
}

TEST(Presets, Table1aCellParameters) {
  const Protocol p = preset_protocol("table1a");
  const auto& last = p.cells.back();
  EXPECT_EQ(last.trial.noise.b_i, 0.2);
  EXPECT_EQ(last.trial.noise.b_p, 0.03);
  EXPECT_EQ(last.trial.scene.n_points, 3142);
  EXPECT_EQ(last.trial.scene.model, ModelKind::kBearing3D2D);
}

TEST(RunTrial, DeterministicForSeed) {
  TrialSpec spec = preset_protocol("table1a").cells[0].trial;
  spec.scene.n_points = 600;
  const TrialReport a = run_trial(spec, 77);
  const TrialReport b = run_trial(spec, 77);
  EXPECT_EQ(pose_distance(a.theta_hat, b.theta_hat), 0.0);
  EXPECT_EQ(pose_distance(a.theta0, b.theta0), 0.0);
  EXPECT_EQ(a.iterations, b.iterations);
  const TrialReport c = run_trial(spec, 78);
  EXPECT_GT(pose_distance(a.theta0, c.theta0), 0.0);
}

TEST(RunTrial, NoiselessRecoversTruth) {
  TrialSpec spec = preset_protocol("noiseless").cells[0].trial;
  spec.noise.b_i = 0.05;
  const TrialReport r = run_trial(spec, 12);
  EXPECT_TRUE(r.success) << r.error;
  EXPECT_LT(r.error, 1e-6);
  EXPECT_FALSE(r.failure.has_value());
}

TEST(RunTrial, NoConsensusIsReportedNotThrown) {
  TrialSpec spec = preset_protocol("outliers150").cells[0].trial;
  spec.scene.n_points = 400;
  spec.ransac->inlier_threshold = 1e-9;
  spec.ransac->min_inlier_fraction = 0.5;
  const TrialReport r = run_trial(spec, 4);
  ASSERT_TRUE(r.failure.has_value());
  EXPECT_FALSE(r.success);
  EXPECT_TRUE(std::isinf(r.error));
}

TEST(EstimatePose, MultistartPicksLowestObjective) {
  SceneConfig config = default_scene_config(ModelKind::kBearing3D2D);
  config.n_points = 800;
  const Scene scene = gen_scene(config);
  const PoseParams theta0 =
      perturb_initial(scene.theta_star, scene.model.kind, 0.1, 5, Perturbation::kNormal);
  EstimateOptions single;
  const EstimateOutcome one = estimate_pose(scene.model, scene.p, scene.q, theta0, single);
  EstimateOptions multi;
  multi.multistart = 4;
  const EstimateOutcome four = estimate_pose(scene.model, scene.p, scene.q, theta0, multi);
  EXPECT_LE(four.estimate.objective, one.estimate.objective);
  EXPECT_GE(four.chosen_start, 0);
  EXPECT_LT(four.chosen_start, 4);
  EXPECT_EQ(one.chosen_start, 0);
  EXPECT_FALSE(one.occlusion.has_value());
  EXPECT_FALSE(one.ransac.has_value());
}

TEST(EstimatePose, OcclusionDiagnostics) {
  SceneConfig config = default_scene_config(ModelKind::kBearing3D2D);
  config.n_points = 16000;
  config.seed = 31;
  const Scene scene = gen_occlusion_scene(config, OcclusionConfig{});
  EstimateOptions options;
  options.occlusion_clusters = 5;
  const PoseParams theta0 =
      perturb_initial(scene.theta_star, scene.model.kind, 0.05, 6, Perturbation::kNormal);
  const EstimateOutcome out = estimate_pose(scene.model, scene.p, scene.q, theta0, options);
  ASSERT_TRUE(out.occlusion.has_value());
  EXPECT_EQ(out.occlusion->p_clusters.size(), 5u);
  EXPECT_EQ(out.occlusion->q_clusters.size(), 5u);
  EXPECT_EQ(out.occlusion->pairing.pairs.size(), 4u);
  EXPECT_LT(out.occlusion->p_kept, scene.p.size());
  EXPECT_LT(out.occlusion->q_kept, scene.q.size());
  EXPECT_LT(pose_error(out.estimate.theta, scene.theta_star, scene.model.kind), 0.1);
}

TEST(RunProtocol, SummaryStatistics) {
  Protocol protocol = preset_protocol("noiseless", 3);
  protocol.cells[0].trial.scene.n_points = 400;
  const BenchmarkSummary s = run_protocol(protocol, 2);
  ASSERT_EQ(s.cells.size(), 1u);
  const CellResult& c = s.cells[0];
  EXPECT_EQ(c.trials, 3);
  ASSERT_EQ(c.reports.size(), 3u);
  int successes = 0;
  double sum = 0.0;
  for (const auto& r : c.reports) {
    successes += r.success;
    sum += r.error;
  }
  EXPECT_EQ(c.successes, successes);
  EXPECT_NEAR(c.mean_error, sum / 3.0, 1e-15);
  for (int t = 0; t < 3; ++t) {
    EXPECT_EQ(c.reports[static_cast<std::size_t>(t)].seed,
              derive_seed(2, static_cast<std::uint64_t>(t)));
  }
}

TEST(FitLine, ExactAndDegenerate) {
  const LinearFit f = fit_line({1, 2, 3, 4}, {3, 5, 7, 9});
  EXPECT_NEAR(f.slope, 2.0, 1e-14);
  EXPECT_NEAR(f.intercept, 1.0, 1e-14);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-14);
  EXPECT_THROW(fit_line({1}, {1}), InvalidArgument);
  EXPECT_THROW(fit_line({2, 2}, {1, 3}), InvalidArgument);
  EXPECT_THROW(fit_line({1, 2}, {1}), InvalidArgument);
}

}  // namespace
}  // namespace cfpose
