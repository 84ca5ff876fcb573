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
#include <span>
#include <vector>

#include "cfpose/features.hpp"
#include "cfpose/geometry.hpp"
#include "cfpose/solver.hpp"

namespace cfpose {

// Exact nearest-neighbor distances over a fixed 3D point list. Points are
// swept along their widest axis; queries stop once that axis alone exceeds
// the best distance found.
class NearestNeighborIndex {
 public:
  explicit NearestNeighborIndex(std::vector<Vec3> points);
  std::size_t size() const { return sorted_.size(); }
  double distance(const Vec3& query) const;

 private:
  int axis_ = 0;
  std::vector<Vec3> sorted_;
  std::vector<double> keys_;
};

// Residual of each P point: min over Q of ||h(p_k) - q~||, where q~ is the
// Q-side representation (unit bearing, raw 3D point, or +-g(q) for the
// epipolar model). Degenerate points get +infinity.
std::vector<double> per_point_residual(const PoseParams& theta,
                                       const PointSet& p, const PointSet& q,
                                       const CorrespondenceModel& model);
// The same distance measured from each Q point to the mapped P set.
std::vector<double> per_point_residual_q(const PoseParams& theta,
                                         const PointSet& p, const PointSet& q,
                                         const CorrespondenceModel& model);

// How hypothesis subsets are drawn. kHalfSpace keeps the points on one side
// of a random plane through the Q-side representation (P is mapped with the
// initial estimate first), so a spatially clustered group of outliers is
// left out entirely by some hypotheses. kUniform samples points
// independently of position.
enum class SubsetKind { kHalfSpace, kUniform };

struct RansacConfig {
  double subset_fraction = 0.5;
  SubsetKind subset_kind = SubsetKind::kHalfSpace;
  int hypotheses = 50;
  // Fixed inlier distance. Unset: 3 * MAD of the residuals of both sets at
  // the initial full-set fit, floored at threshold_floor.
  std::optional<double> inlier_threshold;
  double threshold_floor = 1e-8;
  // The refit keeps points within this multiple of the scoring threshold.
  // Trimming at the scoring threshold itself cuts the noisy tail of one set
  // unevenly, which biases the set averages.
  double refit_threshold_scale = 1.5;
  double min_inlier_fraction = 0.1;
  // Inlier-set refits repeated until the masks stop changing.
  int refine_rounds = 3;
  std::uint64_t seed = 1;

  void validate() const;
};

// Everything needed to build a Problem on arbitrary subsets of P and Q.
struct RobustInput {
  CorrespondenceModel model;
  PointSet p;
  PointSet q;
  FeatureBasis basis;
  ProblemOptions options;
};

struct RansacResult {
  Estimate estimate;
  // Plain solve on all points from theta0.
  Estimate initial;
  std::vector<bool> p_inliers;
  std::vector<bool> q_inliers;
  double threshold = 0.0;
  PoseParams hypothesis_theta;
  int best_hypothesis = -1;
  std::size_t best_inlier_count = 0;
};

// Hypotheses are fitted on random subsets of both sets and scored by their
// inlier count over the full sets (ties: lower objective, then lower
// index). The winner's inliers are refitted. Throws NoConsensus when the
// best hypothesis keeps fewer than min_inlier_fraction of all points.
RansacResult ransac_solve(const RobustInput& input, const PoseParams& theta0,
                          const RansacConfig& ransac,
                          const SolverConfig& solver = {});

struct GrayCluster {
  std::vector<std::size_t> members;  // ascending indices into the gray list
  double mean = 0.0;
};

// 1D k-means with k-means++ seeding, Lloyd iterations (centroid shift
// < 1e-9 or 100 rounds) and a single-point-move polish. Clusters come back
// sorted by mean and are never empty.
std::vector<GrayCluster> kmeans_gray(std::span<const double> grays, int k,
                                     std::uint64_t seed);

struct ClusterPair {
  std::size_t p_cluster = 0;
  std::size_t q_cluster = 0;
  double distance = 0.0;
};

struct ClusterPairing {
  std::vector<ClusterPair> pairs;  // ascending distance
};

// Greedy one-to-one matching on |mean_P - mean_Q|; the first `keep` pairs.
ClusterPairing pair_clusters(const std::vector<GrayCluster>& sp,
                             const std::vector<GrayCluster>& sq,
                             std::size_t keep);

struct OcclusionFilter {
  PointSet p;
  PointSet q;
  std::vector<std::size_t> p_indices;
  std::vector<std::size_t> q_indices;
  std::vector<GrayCluster> p_clusters;
  std::vector<GrayCluster> q_clusters;
  ClusterPairing pairing;
};

// Clusters both gray lists into k groups, pairs them and keeps the member
// points of the `keep` closest pairs (default k - 1).
OcclusionFilter occlusion_filter(const PointSet& p, const PointSet& q, int k,
                                 std::optional<std::size_t> keep,
                                 std::uint64_t seed);

}  // namespace cfpose
