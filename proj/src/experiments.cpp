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

#include "cfpose/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>

#include "cfpose/errors.hpp"

namespace cfpose {

EstimateOptions::EstimateOptions() : basis(default_basis_18()) {}

namespace {

struct Candidate {
  Estimate estimate;
  std::size_t consensus = 0;
  std::optional<RansacDiagnostics> ransac;
};

bool better(const Candidate& a, const Candidate& b) {
  if (a.consensus != b.consensus) return a.consensus > b.consensus;
  return a.estimate.objective < b.estimate.objective;
}

std::size_t count_true(const std::vector<bool>& v) {
  return static_cast<std::size_t>(std::count(v.begin(), v.end(), true));
}

}  // namespace

EstimateOutcome estimate_pose(const CorrespondenceModel& model, const PointSet& p,
                              const PointSet& q, const PoseParams& theta0,
                              const EstimateOptions& options) {
  if (options.multistart < 1) throw InvalidArgument("multistart must be at least 1");
  options.solver.validate();
  EstimateOutcome outcome;
  const PointSet* pp = &p;
  const PointSet* qq = &q;
  std::optional<OcclusionFilter> filtered;
  if (options.occlusion_clusters) {
    filtered = occlusion_filter(p, q, *options.occlusion_clusters, options.occlusion_keep,
                                derive_seed(options.seed, 21));
    pp = &filtered->p;
    qq = &filtered->q;
    outcome.occlusion = OcclusionDiagnostics{filtered->p.size(), filtered->q.size(),
                                             filtered->p_clusters, filtered->q_clusters,
                                             filtered->pairing};
  }

  std::vector<PoseParams> starts{theta0};
  for (int i = 1; i < options.multistart; ++i) {
    starts.push_back(perturb_initial(theta0, model.kind, options.multistart_scale,
                                     derive_seed(options.seed, 100 + static_cast<std::uint64_t>(i))));
  }

  std::optional<Problem> problem;
  if (!options.ransac) problem.emplace(model, *pp, *qq, options.basis, options.problem);

  std::optional<Candidate> best;
  std::exception_ptr last_error;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    Candidate c;
    try {
      if (options.ransac) {
        const RobustInput input{model, *pp, *qq, options.basis, options.problem};
        RansacResult r = ransac_solve(input, starts[s], *options.ransac, options.solver);
        c.consensus = count_true(r.p_inliers) + count_true(r.q_inliers);
        c.ransac = RansacDiagnostics{r.initial.theta,       r.threshold,
                                     count_true(r.p_inliers), count_true(r.q_inliers),
                                     r.best_hypothesis,     r.best_inlier_count,
                                     r.p_inliers,           r.q_inliers};
        c.estimate = std::move(r.estimate);
      } else {
        c.estimate = solve(*problem, starts[s], options.solver);
      }
    } catch (const NoConsensus&) {
      throw;
    } catch (const Error&) {
      // A start that lands on a degenerate pose is skipped while others
      // remain.
      if (starts.size() == 1) throw;
      last_error = std::current_exception();
      continue;
    }
    if (!best || better(c, *best)) {
      best = std::move(c);
      outcome.chosen_start = static_cast<int>(s);
    }
  }
  if (!best) std::rethrow_exception(last_error);
  outcome.estimate = std::move(best->estimate);
  outcome.ransac = std::move(best->ransac);
  return outcome;
}

double pose_error(const PoseParams& estimate, const PoseParams& truth, ModelKind model) {
  double e = pose_distance(estimate, truth);
  if (model == ModelKind::kEpipolar2D2D) {
    PoseParams flipped = estimate;
    flipped.translation = -flipped.translation;
    e = std::min(e, pose_distance(flipped, truth));
  }
  return e;
}

double rotation_error_deg(const PoseParams& estimate, const PoseParams& truth) {
  const Mat3 d = rotation_from_euler(estimate.angles).transpose() *
                 rotation_from_euler(truth.angles);
  const double c = std::clamp((d.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

double direction_error_deg(const PoseParams& estimate, const PoseParams& truth) {
  const double ne = estimate.translation.norm(), nt = truth.translation.norm();
  if (ne < kDegenerateNorm || nt < kDegenerateNorm) return 180.0;
  const double c = std::min(1.0, std::abs(estimate.translation.dot(truth.translation)) / (ne * nt));
  return std::acos(c) * 180.0 / std::numbers::pi;
}

TrialReport run_trial(const TrialSpec& spec, std::uint64_t seed) {
  SceneConfig scene_config = spec.scene;
  scene_config.seed = seed;
  Scene scene = spec.occlusion ? gen_occlusion_scene(scene_config, *spec.occlusion)
                               : gen_scene(scene_config);
  apply_noise(scene, spec.noise, derive_seed(seed, 2));

  TrialReport report;
  report.seed = seed;
  report.theta_star = scene.theta_star;
  report.theta0 = perturb_initial(scene.theta_star, scene.model.kind, spec.noise.b_i,
                                  derive_seed(seed, 9), spec.perturbation);
  report.p_size = scene.p.size();
  report.q_size = scene.q.size();

  EstimateOptions options;
  options.basis = basis_by_name(spec.basis);
  options.problem = spec.problem;
  options.solver = spec.solver;
  options.ransac = spec.ransac;
  if (options.ransac) options.ransac->seed = derive_seed(seed, 3);
  options.occlusion_clusters = spec.occlusion_clusters;
  options.occlusion_keep = spec.occlusion_keep;
  options.multistart = spec.multistart;
  options.seed = derive_seed(seed, 4);

  const auto t0 = std::chrono::steady_clock::now();
  try {
    const EstimateOutcome out =
        estimate_pose(scene.model, scene.p, scene.q, report.theta0, options);
    report.runtime_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    report.theta_hat = out.estimate.theta;
    report.iterations = out.estimate.iterations;
    report.reason = std::string(convergence_name(out.estimate.reason));
    if (out.ransac) {
      report.pre_ransac_error =
          pose_error(out.ransac->initial_theta, scene.theta_star, scene.model.kind);
      std::size_t injected = 0, rejected = 0;
      for (std::size_t k = 0; k < scene.q.size(); ++k) {
        if (!scene.oracle.q_outlier[k]) continue;
        ++injected;
        rejected += !out.ransac->q_mask[k];
      }
      report.outliers_injected = injected;
      report.outliers_rejected = rejected;
    }
  } catch (const Error& e) {
    report.runtime_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    report.failure = e.what();
    report.theta_hat = report.theta0;
    report.reason = "failed";
    report.error = std::numeric_limits<double>::infinity();
    report.rotation_error_deg = 180.0;
    report.direction_error_deg = 180.0;
    return report;
  }
  report.runtime_ms = std::max(report.runtime_ms, 1e-6);
  report.error = pose_error(report.theta_hat, scene.theta_star, scene.model.kind);
  report.success = report.error <= kSuccessThreshold;
  report.rotation_error_deg = rotation_error_deg(report.theta_hat, scene.theta_star);
  report.direction_error_deg = direction_error_deg(report.theta_hat, scene.theta_star);
  return report;
}

namespace {

TrialSpec bearing_spec() {
  TrialSpec t;
  t.scene = default_scene_config(ModelKind::kBearing3D2D);
  return t;
}

CellSpec cell(std::string label, std::vector<std::pair<std::string, double>> params,
              TrialSpec trial, int trials) {
  return CellSpec{std::move(label), std::move(params), std::move(trial), trials};
}

std::string fmt(double v) {
  std::string s = std::to_string(v);
  s.erase(s.find_last_not_of('0') + 1);
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

}  // namespace

std::vector<std::string> protocol_names() {
  return {"table1a", "table1b", "noiseless", "runtime", "outliers150", "occlusion",
          "epipolar"};
}

Protocol preset_protocol(std::string_view name, std::optional<int> trials) {
  if (trials && *trials < 1) throw InvalidArgument("trial count must be positive");
  auto count = [&](int fallback) { return trials.value_or(fallback); };
  Protocol p;
  p.name = std::string(name);
  if (name == "table1a") {
    for (double bi : {0.1, 0.2}) {
      for (double bp : {0.01, 0.02, 0.03}) {
        TrialSpec t = bearing_spec();
        t.noise.b_i = bi;
        t.noise.b_p = bp;
        p.cells.push_back(cell("b_i=" + fmt(bi) + " b_p=" + fmt(bp),
                               {{"b_i", bi}, {"b_p", bp}}, t, count(100)));
      }
    }
  } else if (name == "table1b") {
    for (double bm : {0.5, 1.0, 1.5}) {
      TrialSpec t = bearing_spec();
      t.noise.b_i = 0.1;
      t.noise.b_m = bm;
      p.cells.push_back(
          cell("b_i=0.1 b_m=" + fmt(bm), {{"b_i", 0.1}, {"b_m", bm}}, t, count(100)));
    }
  } else if (name == "noiseless") {
    TrialSpec t = bearing_spec();
    t.noise.b_i = 0.2;
    p.cells.push_back(cell("b_i=0.2 b_p=0", {{"b_i", 0.2}, {"b_p", 0.0}}, t, count(100)));
  } else if (name == "runtime") {
    p.timing = true;
    for (int n : {500, 1000, 2000, 4000, 8000, 16000}) {
      TrialSpec t = bearing_spec();
      t.scene.n_points = n;
      t.noise.b_i = 0.1;
      p.cells.push_back(cell("N=" + std::to_string(n), {{"N", n}}, t, count(10)));
    }
  } else if (name == "outliers150") {
    TrialSpec t = bearing_spec();
    t.scene.n_points = 3124;
    t.noise.b_p = 0.02;
    t.noise.b_i = 0.2;
    t.noise.outlier_count = 150;
    t.perturbation = Perturbation::kUniform;
    t.ransac = RansacConfig{};
    p.cells.push_back(cell("outliers=150 b_p=0.02", {{"outliers", 150}, {"b_p", 0.02}}, t,
                           count(20)));
  } else if (name == "occlusion") {
    TrialSpec t = bearing_spec();
    t.scene.n_points = 16000;
    t.noise.b_i = 0.1;
    t.occlusion = OcclusionConfig{};
    t.occlusion_clusters = 5;
    t.occlusion_keep = 4;
    p.cells.push_back(
        cell("occluded=0.2 k=5 keep=4", {{"occluded", 0.2}, {"k", 5}, {"keep", 4}}, t,
             count(100)));
  } else if (name == "epipolar") {
    TrialSpec t;
    t.scene = default_scene_config(ModelKind::kEpipolar2D2D);
    t.noise.b_i = 0.1;
    t.solver.max_iters = 1000;
    p.cells.push_back(cell("epipolar b_i=0.1", {{"b_i", 0.1}}, t, count(100)));
  } else {
    throw InvalidArgument("unknown protocol '" + std::string(name) + "'");
  }
  return p;
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

BenchmarkSummary run_protocol(const Protocol& protocol, std::uint64_t seed) {
  BenchmarkSummary summary;
  summary.protocol = protocol.name;
  summary.seed = seed;
  struct Job {
    std::size_t cell;
    int trial;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < protocol.cells.size(); ++c) {
    for (int t = 0; t < protocol.cells[c].trials; ++t) jobs.push_back({c, t});
  }
  std::vector<std::vector<TrialReport>> reports(protocol.cells.size());
  for (std::size_t c = 0; c < protocol.cells.size(); ++c) {
    reports[c].resize(static_cast<std::size_t>(protocol.cells[c].trials));
  }
  auto run = [&](const Job& job) {
    reports[job.cell][static_cast<std::size_t>(job.trial)] =
        run_trial(protocol.cells[job.cell].trial,
                  derive_seed(seed, static_cast<std::uint64_t>(job.trial)));
  };
  if (protocol.timing) {
    for (const Job& job : jobs) run(job);
  } else {
    const auto n = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t j = 0; j < n; ++j) run(jobs[static_cast<std::size_t>(j)]);
  }

  for (std::size_t c = 0; c < protocol.cells.size(); ++c) {
    CellResult r;
    r.label = protocol.cells[c].label;
    r.params = protocol.cells[c].params;
    r.trials = protocol.cells[c].trials;
    std::vector<double> errors, pre;
    double runtime = 0.0, iterations = 0.0, finite_error = 0.0;
    std::size_t finite = 0;
    for (const auto& rep : reports[c]) {
      r.successes += rep.success;
      errors.push_back(rep.error);
      if (std::isfinite(rep.error)) {
        finite_error += rep.error;
        ++finite;
      }
      runtime += rep.runtime_ms;
      iterations += rep.iterations;
      if (rep.pre_ransac_error) pre.push_back(*rep.pre_ransac_error);
    }
    const double n = static_cast<double>(r.trials);
    r.mean_error = finite ? finite_error / static_cast<double>(finite)
                          : std::numeric_limits<double>::infinity();
    r.median_error = median(errors);
    r.mean_runtime_ms = runtime / n;
    r.mean_iterations = iterations / n;
    if (!pre.empty()) r.median_pre_ransac_error = median(pre);
    r.reports = std::move(reports[c]);
    summary.cells.push_back(std::move(r));
  }
  return summary;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw InvalidArgument("line fit needs at least two (x, y) pairs");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw InvalidArgument("line fit needs distinct x values");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += e * e;
  }
  f.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return f;
}

}  // namespace cfpose
