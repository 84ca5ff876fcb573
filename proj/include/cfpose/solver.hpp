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

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "cfpose/features.hpp"
#include "cfpose/geometry.hpp"
#include "cfpose/kernels.hpp"

namespace cfpose {

enum class JacobianMode { kAnalytic, kForwardDiff, kCentralDiff };
enum class Convergence { kGradient, kStep, kMaxIters, kStalled };

std::string_view convergence_name(Convergence c);

struct SolverConfig {
  int max_iters = 200;
  // Largest |J_j^T r| / (||J_j|| ||r||) accepted as stationary.
  double gradient_tolerance = 1e-10;
  // Stop when ||dx|| < step_tolerance * (||x|| + step_tolerance).
  double step_tolerance = 1e-12;
  double initial_damping = 1.0;
  double damping_increase = 10.0;
  double damping_decrease = 0.1;
  JacobianMode jacobian_mode = JacobianMode::kAnalytic;

  void validate() const;
};

// Residual vector r(x) minimized in the least-squares sense.
class LeastSquaresObjective {
 public:
  virtual ~LeastSquaresObjective() = default;

  virtual int parameter_count() const = 0;
  virtual int residual_count() const = 0;
  // Throws DegenerateDirection when x maps a point to a zero direction.
  virtual Eigen::VectorXd residual(const ParamVector& x) const = 0;
  virtual Eigen::MatrixXd analytic_jacobian(const ParamVector& x) const = 0;

  Eigen::MatrixXd jacobian(const ParamVector& x, JacobianMode mode) const;
};

struct LmResult {
  ParamVector x;
  double objective = 0.0;
  int iterations = 0;
  Convergence reason = Convergence::kMaxIters;
  Eigen::VectorXd residual;
  // Objective at x0 followed by every accepted step.
  std::vector<double> accepted_objectives;
};

// Levenberg-Marquardt with multiplicative Marquardt damping. Throws
// NonFinite if the objective at x0 (or a Jacobian at an accepted point) is
// not finite; trial steps that are degenerate or non-finite are rejected.
LmResult minimize(const LeastSquaresObjective& objective, const ParamVector& x0,
                  const SolverConfig& config);

struct ProblemOptions {
  // Normalize both sides with the Q-side stats. Defaults to true for the
  // bearing model and false otherwise; not available for the epipolar model.
  std::optional<bool> normalize;
};

// min_theta || F_p(theta) - F_q(theta) ||^2 for one correspondence model.
// Points are stored in a canonical (lexicographic) order, so the residual
// and Jacobian are bitwise independent of the input order.
class Problem : public LeastSquaresObjective {
 public:
  Problem(CorrespondenceModel model, const PointSet& p, const PointSet& q,
          FeatureBasis basis, ProblemOptions options = {});

  int parameter_count() const override;
  int residual_count() const override;
  Eigen::VectorXd residual(const ParamVector& x) const override;
  Eigen::MatrixXd analytic_jacobian(const ParamVector& x) const override;

  const CorrespondenceModel& model() const { return model_; }
  const FeatureBasis& basis() const { return basis_; }
  const std::optional<NormalizationStats>& stats() const { return stats_; }
  bool q_depends_on_theta() const {
    return model_.kind == ModelKind::kEpipolar2D2D;
  }
  // P points and the Q-side representation (unit bearings for the bearing
  // and homography models), in canonical order.
  std::span<const Vec3> p_points() const { return p_; }
  std::span<const Vec3> q_points() const { return q_; }

  void set_execution(kernels::Execution e) { exec_ = e; }

 private:
  kernels::MappedMeans side_means(std::span<const Vec3> pts, kernels::Side side,
                                  const ParamVector& x, bool jac) const;

  CorrespondenceModel model_;
  FeatureBasis basis_;
  std::vector<Vec3> p_;
  std::vector<Vec3> q_;
  std::optional<NormalizationStats> stats_;
  Eigen::VectorXd fixed_q_features_;
  kernels::Execution exec_ = kernels::Execution::kParallel;
};

struct Estimate {
  PoseParams theta;
  ParamVector x;
  double objective = 0.0;
  int iterations = 0;
  Convergence reason = Convergence::kMaxIters;
  Eigen::VectorXd residual;
  std::vector<double> accepted_objectives;
};

Estimate solve(const Problem& problem, const PoseParams& theta0,
               const SolverConfig& config = {});

// One-parameter scale model h(p, theta) = theta * p on scalar sets.
class ScalarScaleProblem : public LeastSquaresObjective {
 public:
  ScalarScaleProblem(std::vector<double> p, std::vector<double> q,
                     FeatureBasis basis);

  int parameter_count() const override { return 1; }
  int residual_count() const override { return static_cast<int>(basis_.size()); }
  Eigen::VectorXd residual(const ParamVector& x) const override;
  Eigen::MatrixXd analytic_jacobian(const ParamVector& x) const override;

 private:
  std::vector<double> p_;
  FeatureBasis basis_;
  Eigen::VectorXd q_features_;
};

}  // namespace cfpose
