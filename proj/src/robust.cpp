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

#include "cfpose/robust.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "cfpose/errors.hpp"
#include "cfpose/simgen.hpp"

namespace cfpose {

NearestNeighborIndex::NearestNeighborIndex(std::vector<Vec3> points)
    : sorted_(std::move(points)) {
  if (sorted_.empty()) throw InvalidArgument("nearest-neighbor index is empty");
  Vec3 lo = sorted_[0], hi = sorted_[0];
  for (const auto& p : sorted_) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  (hi - lo).maxCoeff(&axis_);
  std::sort(sorted_.begin(), sorted_.end(),
            [a = axis_](const Vec3& x, const Vec3& y) { return x[a] < y[a]; });
  keys_.reserve(sorted_.size());
  for (const auto& p : sorted_) keys_.push_back(p[axis_]);
}

double NearestNeighborIndex::distance(const Vec3& query) const {
  const double key = query[axis_];
  const auto start = std::lower_bound(keys_.begin(), keys_.end(), key) - keys_.begin();
  double best = std::numeric_limits<double>::infinity();
  const auto n = static_cast<std::ptrdiff_t>(sorted_.size());
  // Walk outward in both directions.
  for (std::ptrdiff_t i = start; i < n; ++i) {
    const double gap = keys_[i] - key;
    if (gap * gap >= best) break;
    best = std::min(best, (sorted_[i] - query).squaredNorm());
  }
  for (std::ptrdiff_t i = start - 1; i >= 0; --i) {
    const double gap = key - keys_[i];
    if (gap * gap >= best) break;
    best = std::min(best, (sorted_[i] - query).squaredNorm());
  }
  return std::sqrt(best);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Representation {
  std::vector<Vec3> points;
  std::vector<bool> degenerate;
};

Representation map_p_side(const PoseParams& theta, const PointSet& p,
                          const CorrespondenceModel& model) {
  const PoseMapping mapping(model, theta.to_vector(model.kind));
  Representation r;
  r.points.resize(p.size());
  r.degenerate.assign(p.size(), false);
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (!mapping.map_p(p.points[k], &r.points[k], nullptr)) r.degenerate[k] = true;
  }
  return r;
}

Representation map_q_side(const PoseParams& theta, const PointSet& q,
                          const CorrespondenceModel& model) {
  const PoseMapping mapping(model, theta.to_vector(model.kind));
  Representation r;
  r.points.resize(q.size());
  r.degenerate.assign(q.size(), false);
  for (std::size_t k = 0; k < q.size(); ++k) {
    const Vec3& v = q.points[k];
    switch (model.kind) {
      case ModelKind::kRigid3D:
        r.points[k] = v;
        break;
      case ModelKind::kBearing3D2D:
      case ModelKind::kHomography2D2D: {
        const double n = v.norm();
        if (n < kDegenerateNorm) {
          r.degenerate[k] = true;
        } else {
          r.points[k] = v / n;
        }
        break;
      }
      case ModelKind::kEpipolar2D2D:
        if (!mapping.map_q(v, &r.points[k], nullptr)) r.degenerate[k] = true;
        break;
    }
  }
  return r;
}

// Index over the usable targets; epipolar targets are added with both signs.
NearestNeighborIndex build_index(const Representation& target, bool both_signs) {
  std::vector<Vec3> pts;
  for (std::size_t k = 0; k < target.points.size(); ++k) {
    if (target.degenerate[k]) continue;
    pts.push_back(target.points[k]);
    if (both_signs) pts.push_back(-target.points[k]);
  }
  if (pts.empty()) throw InvalidArgument("no usable points to measure residuals against");
  return NearestNeighborIndex(std::move(pts));
}

std::vector<double> residuals_against(const Representation& query,
                                      const Representation& target,
                                      bool both_signs) {
  const NearestNeighborIndex index = build_index(target, both_signs);
  std::vector<double> out(query.points.size());
  const auto n = static_cast<std::ptrdiff_t>(query.points.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    out[k] = query.degenerate[k] ? kInf : index.distance(query.points[k]);
  }
  return out;
}

}  // namespace

std::vector<double> per_point_residual(const PoseParams& theta,
                                       const PointSet& p, const PointSet& q,
                                       const CorrespondenceModel& model) {
  const bool both = model.kind == ModelKind::kEpipolar2D2D;
  return residuals_against(map_p_side(theta, p, model), map_q_side(theta, q, model),
                           both);
}

std::vector<double> per_point_residual_q(const PoseParams& theta,
                                         const PointSet& p, const PointSet& q,
                                         const CorrespondenceModel& model) {
  const bool both = model.kind == ModelKind::kEpipolar2D2D;
  return residuals_against(map_q_side(theta, q, model), map_p_side(theta, p, model),
                           both);
}

void RansacConfig::validate() const {
  if (!(subset_fraction > 0.0 && subset_fraction <= 1.0)) {
    throw InvalidArgument("subset fraction must lie in (0, 1]");
  }
  if (hypotheses < 1) throw InvalidArgument("RANSAC needs at least one hypothesis");
  if (inlier_threshold && !(*inlier_threshold > 0.0)) {
    throw InvalidArgument("inlier threshold must be positive");
  }
  if (!(threshold_floor > 0.0)) throw InvalidArgument("threshold floor must be positive");
  if (!(min_inlier_fraction >= 0.0 && min_inlier_fraction <= 1.0)) {
    throw InvalidArgument("min inlier fraction must lie in [0, 1]");
  }
  if (!(refit_threshold_scale >= 1.0)) {
    throw InvalidArgument("refit threshold scale must be at least 1");
  }
  if (refine_rounds < 1) throw InvalidArgument("refine_rounds must be at least 1");
}

namespace {

double median_of(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double m = *mid;
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), mid));
  }
  return m;
}

double robust_threshold(const std::vector<double>& rp,
                        const std::vector<double>& rq, double floor) {
  std::vector<double> all;
  for (double r : rp) if (std::isfinite(r)) all.push_back(r);
  for (double r : rq) if (std::isfinite(r)) all.push_back(r);
  if (all.empty()) return floor;
  const double med = median_of(all);
  std::vector<double> dev;
  dev.reserve(all.size());
  for (double r : all) dev.push_back(std::abs(r - med));
  return std::max(3.0 * median_of(std::move(dev)), floor);
}

struct Masks {
  std::vector<bool> p, q;
  std::size_t count = 0;
};

Masks inlier_masks(const PoseParams& theta, const RobustInput& in, double tau) {
  const auto rp = per_point_residual(theta, in.p, in.q, in.model);
  const auto rq = per_point_residual_q(theta, in.p, in.q, in.model);
  Masks m;
  m.p.resize(rp.size());
  m.q.resize(rq.size());
  for (std::size_t k = 0; k < rp.size(); ++k) m.count += (m.p[k] = rp[k] <= tau);
  for (std::size_t k = 0; k < rq.size(); ++k) m.q[k] = rq[k] <= tau, m.count += m.q[k];
  return m;
}

std::vector<std::size_t> true_indices(const std::vector<bool>& mask) {
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < mask.size(); ++k) {
    if (mask[k]) idx.push_back(k);
  }
  return idx;
}

std::vector<std::size_t> random_subset(std::size_t n, double fraction,
                                       std::mt19937_64& rng) {
  const auto want = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n))),
      std::min<std::size_t>(n, 2), n);
  std::vector<std::size_t> all(n), out;
  std::iota(all.begin(), all.end(), std::size_t{0});
  out.reserve(want);
  std::sample(all.begin(), all.end(), std::back_inserter(out), want, rng);
  return out;
}

struct Subsets {
  std::vector<std::size_t> p, q;
};

// Points whose key u . v falls below the Q-side quantile at `fraction`.
// Epipolar representations are sign-ambiguous, so the key is |u . v| there.
Subsets half_space_subsets(const Representation& p_rep, const Representation& q_rep,
                           bool sign_free, double fraction, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vec3 u;
  do {
    u = Vec3(normal(rng), normal(rng), normal(rng));
  } while (u.norm() < 1e-6);
  u.normalize();
  auto key = [&](const Vec3& v) {
    const double k = u.dot(v);
    return sign_free ? std::abs(k) : k;
  };
  std::vector<double> q_keys;
  for (std::size_t k = 0; k < q_rep.points.size(); ++k) {
    if (!q_rep.degenerate[k]) q_keys.push_back(key(q_rep.points[k]));
  }
  Subsets out;
  if (q_keys.empty()) return out;
  auto cut = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(q_keys.size())));
  cut = std::clamp<std::size_t>(cut, 1, q_keys.size()) - 1;
  std::nth_element(q_keys.begin(), q_keys.begin() + static_cast<std::ptrdiff_t>(cut),
                   q_keys.end());
  const double t = q_keys[cut];
  for (std::size_t k = 0; k < q_rep.points.size(); ++k) {
    if (!q_rep.degenerate[k] && key(q_rep.points[k]) <= t) out.q.push_back(k);
  }
  for (std::size_t k = 0; k < p_rep.points.size(); ++k) {
    if (!p_rep.degenerate[k] && key(p_rep.points[k]) <= t) out.p.push_back(k);
  }
  return out;
}

}  // namespace

RansacResult ransac_solve(const RobustInput& input, const PoseParams& theta0,
                          const RansacConfig& ransac, const SolverConfig& solver) {
  ransac.validate();
  RansacResult result;
  {
    const Problem full(input.model, input.p, input.q, input.basis, input.options);
    result.initial = solve(full, theta0, solver);
  }
  const PoseParams& theta_init = result.initial.theta;
  result.threshold =
      ransac.inlier_threshold.value_or(robust_threshold(
          per_point_residual(theta_init, input.p, input.q, input.model),
          per_point_residual_q(theta_init, input.p, input.q, input.model),
          ransac.threshold_floor));

  struct Hypothesis {
    bool valid = false;
    std::size_t count = 0;
    double objective = kInf;
    PoseParams theta;
  };
  std::vector<Hypothesis> hyps(static_cast<std::size_t>(ransac.hypotheses));
  const bool half_space = ransac.subset_kind == SubsetKind::kHalfSpace;
  const bool sign_free = input.model.kind == ModelKind::kEpipolar2D2D;
  Representation p_rep, q_rep;
  if (half_space) {
    p_rep = map_p_side(theta_init, input.p, input.model);
    q_rep = map_q_side(theta_init, input.q, input.model);
  }
#pragma omp parallel for schedule(dynamic, 1)
  for (int h = 0; h < ransac.hypotheses; ++h) {
    std::mt19937_64 rng(derive_seed(ransac.seed, static_cast<std::uint64_t>(h)));
    try {
      Subsets subsets;
      if (half_space) {
        subsets = half_space_subsets(p_rep, q_rep, sign_free, ransac.subset_fraction, rng);
      } else {
        subsets.p = random_subset(input.p.size(), ransac.subset_fraction, rng);
        subsets.q = random_subset(input.q.size(), ransac.subset_fraction, rng);
      }
      if (subsets.p.size() < 2 || subsets.q.size() < 2) continue;
      const Problem sub(input.model, input.p.select(subsets.p),
                        input.q.select(subsets.q), input.basis, input.options);
      const Estimate e = solve(sub, theta_init, solver);
      Hypothesis& out = hyps[static_cast<std::size_t>(h)];
      out.count = inlier_masks(e.theta, input, result.threshold).count;
      out.objective = e.objective;
      out.theta = e.theta;
      out.valid = true;
    } catch (const Error&) {
      // An unusable subset simply loses.
    }
  }

  int best = -1;
  for (int h = 0; h < ransac.hypotheses; ++h) {
    const auto& c = hyps[static_cast<std::size_t>(h)];
    if (!c.valid) continue;
    if (best < 0) {
      best = h;
      continue;
    }
    const auto& b = hyps[static_cast<std::size_t>(best)];
    if (c.count > b.count || (c.count == b.count && c.objective < b.objective)) {
      best = h;
    }
  }
  if (best < 0) throw NoConsensus("no RANSAC hypothesis could be fitted");
  result.best_hypothesis = best;
  const Hypothesis& winner = hyps[static_cast<std::size_t>(best)];
  result.best_inlier_count = winner.count;
  const double total = static_cast<double>(input.p.size() + input.q.size());
  if (static_cast<double>(winner.count) < ransac.min_inlier_fraction * total) {
    throw NoConsensus("best hypothesis has " + std::to_string(winner.count) +
                      " inliers of " + std::to_string(input.p.size() + input.q.size()));
  }

  result.hypothesis_theta = winner.theta;
  // Each round refits on the current inlier sets, starting from the latest
  // accepted pose. A round that lowers the consensus count is discarded.
  const double refit_tau = result.threshold * ransac.refit_threshold_scale;
  Masks masks = inlier_masks(winner.theta, input, refit_tau);
  PoseParams start = winner.theta;
  for (int round = 0; round < ransac.refine_rounds; ++round) {
    const auto pi = true_indices(masks.p);
    const auto qi = true_indices(masks.q);
    if (pi.size() < 2 || qi.size() < 2) {
      throw NoConsensus("too few inliers left to refit");
    }
    const Problem inliers(input.model, input.p.select(pi), input.q.select(qi),
                          input.basis, input.options);
    Estimate refit = solve(inliers, start, solver);
    Masks next = inlier_masks(refit.theta, input, refit_tau);
    if (round > 0 && next.count < masks.count) break;
    result.estimate = std::move(refit);
    result.p_inliers = masks.p;
    result.q_inliers = masks.q;
    if (next.p == masks.p && next.q == masks.q) break;
    masks = std::move(next);
    start = result.estimate.theta;
  }
  return result;
}

std::vector<GrayCluster> kmeans_gray(std::span<const double> grays, int k,
                                     std::uint64_t seed) {
  const std::size_t n = grays.size();
  if (k < 1 || n < static_cast<std::size_t>(k)) {
    throw InvalidArgument("k-means needs 1 <= k <= number of values");
  }
  for (double g : grays) {
    if (!std::isfinite(g)) throw InvalidArgument("gray values must be finite");
  }
  // Work on values sorted ascending so the result depends only on the
  // multiset of values, not on input order.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return grays[a] < grays[b]; });
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = grays[order[i]];

  const auto ku = static_cast<std::size_t>(k);
  std::mt19937_64 rng(seed);
  std::vector<double> centers;
  centers.reserve(ku);
  centers.push_back(v[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
  std::vector<double> d2(n);
  while (centers.size() < ku) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = kInf;
      for (double c : centers) best = std::min(best, (v[i] - c) * (v[i] - c));
      d2[i] = best;
      total += best;
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double target = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (pick = 0; pick + 1 < n; ++pick) {
        target -= d2[pick];
        if (target < 0.0) break;
      }
    } else {
      pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    }
    centers.push_back(v[pick]);
  }

  std::vector<std::size_t> label(n, 0);
  std::vector<std::size_t> count(ku, 0);
  auto assign = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < ku; ++c) {
        if (std::abs(v[i] - centers[c]) < std::abs(v[i] - centers[best])) best = c;
      }
      label[i] = best;
    }
  };
  auto recompute = [&] {
    std::vector<double> sum(ku, 0.0);
    std::fill(count.begin(), count.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      sum[label[i]] += v[i];
      ++count[label[i]];
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < ku; ++c) {
      if (count[c] == 0) continue;
      const double m = sum[c] / static_cast<double>(count[c]);
      shift = std::max(shift, std::abs(m - centers[c]));
      centers[c] = m;
    }
    return shift;
  };

  for (int iter = 0; iter < 100; ++iter) {
    assign();
    double shift = recompute();
    // Reseed empty clusters with the point farthest from its centroid.
    for (std::size_t c = 0; c < ku; ++c) {
      if (count[c] != 0) continue;
      std::size_t far = 0;
      double worst = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (count[label[i]] < 2) continue;
        const double d = std::abs(v[i] - centers[label[i]]);
        if (d > worst) {
          worst = d;
          far = i;
        }
      }
      label[far] = c;
      shift = std::max(shift, std::abs(v[far] - centers[c]));
      recompute();
      shift = std::max(shift, 1.0);  // force another round
    }
    if (shift < 1e-9) break;
  }

  // Polish: move single points while that strictly lowers the total
  // within-cluster sum of squares.
  recompute();
  for (int pass = 0; pass < 100; ++pass) {
    bool moved = false;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t a = label[i];
      if (count[a] < 2) continue;
      const double na = static_cast<double>(count[a]);
      const double cost_out = na / (na - 1.0) * (v[i] - centers[a]) * (v[i] - centers[a]);
      std::size_t best = a;
      double best_gain = 0.0;
      for (std::size_t b = 0; b < ku; ++b) {
        if (b == a) continue;
        const double nb = static_cast<double>(count[b]);
        const double cost_in = nb / (nb + 1.0) * (v[i] - centers[b]) * (v[i] - centers[b]);
        const double gain = cost_out - cost_in;
        if (gain > best_gain + 1e-15 * (1.0 + cost_out)) {
          best_gain = gain;
          best = b;
        }
      }
      if (best == a) continue;
      const double nb = static_cast<double>(count[best]);
      centers[a] = (centers[a] * na - v[i]) / (na - 1.0);
      centers[best] = (centers[best] * nb + v[i]) / (nb + 1.0);
      --count[a];
      ++count[best];
      label[i] = best;
      moved = true;
    }
    if (!moved) break;
  }

  std::vector<GrayCluster> clusters(ku);
  for (std::size_t i = 0; i < n; ++i) clusters[label[i]].members.push_back(order[i]);
  for (auto& c : clusters) {
    std::sort(c.members.begin(), c.members.end());
    double s = 0.0;
    for (auto idx : c.members) s += grays[idx];
    c.mean = s / static_cast<double>(c.members.size());
  }
  std::sort(clusters.begin(), clusters.end(),
            [](const GrayCluster& a, const GrayCluster& b) {
              if (a.mean != b.mean) return a.mean < b.mean;
              return a.members.front() < b.members.front();
            });
  return clusters;
}

ClusterPairing pair_clusters(const std::vector<GrayCluster>& sp,
                             const std::vector<GrayCluster>& sq, std::size_t keep) {
  if (keep > std::min(sp.size(), sq.size())) {
    throw InvalidArgument("cannot keep more pairs than clusters");
  }
  std::vector<ClusterPair> all;
  all.reserve(sp.size() * sq.size());
  for (std::size_t i = 0; i < sp.size(); ++i) {
    for (std::size_t j = 0; j < sq.size(); ++j) {
      all.push_back({i, j, std::abs(sp[i].mean - sq[j].mean)});
    }
  }
  std::stable_sort(all.begin(), all.end(), [](const ClusterPair& a, const ClusterPair& b) {
    return a.distance < b.distance;
  });
  ClusterPairing out;
  std::vector<bool> used_p(sp.size(), false), used_q(sq.size(), false);
  for (const auto& pair : all) {
    if (out.pairs.size() == keep) break;
    if (used_p[pair.p_cluster] || used_q[pair.q_cluster]) continue;
    used_p[pair.p_cluster] = used_q[pair.q_cluster] = true;
    out.pairs.push_back(pair);
  }
  return out;
}

OcclusionFilter occlusion_filter(const PointSet& p, const PointSet& q, int k,
                                 std::optional<std::size_t> keep,
                                 std::uint64_t seed) {
  if (!p.gray || !q.gray) {
    throw InvalidArgument("occlusion filtering needs gray values on both sets");
  }
  if (k < 1) throw InvalidArgument("cluster count must be positive");
  OcclusionFilter out;
  out.p_clusters = kmeans_gray(*p.gray, k, derive_seed(seed, 11));
  out.q_clusters = kmeans_gray(*q.gray, k, derive_seed(seed, 12));
  const std::size_t kept = keep.value_or(static_cast<std::size_t>(k > 1 ? k - 1 : 1));
  out.pairing = pair_clusters(out.p_clusters, out.q_clusters, kept);
  for (const auto& pair : out.pairing.pairs) {
    const auto& pm = out.p_clusters[pair.p_cluster].members;
    const auto& qm = out.q_clusters[pair.q_cluster].members;
    out.p_indices.insert(out.p_indices.end(), pm.begin(), pm.end());
    out.q_indices.insert(out.q_indices.end(), qm.begin(), qm.end());
  }
  std::sort(out.p_indices.begin(), out.p_indices.end());
  std::sort(out.q_indices.begin(), out.q_indices.end());
  if (out.p_indices.empty() || out.q_indices.empty()) {
    throw InvalidArgument("cluster pairing kept no points");
  }
  out.p = p.select(out.p_indices);
  out.q = q.select(out.q_indices);
  return out;
}

}  // namespace cfpose
