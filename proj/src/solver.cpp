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

#include "cfpose/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "cfpose/errors.hpp"

namespace cfpose {

std::string_view convergence_name(Convergence c) {
  switch (c) {
    case Convergence::kGradient:
      return "gradient";
    case Convergence::kStep:
      return "step";
    case Convergence::kMaxIters:
      return "max_iters";
    case Convergence::kStalled:
      return "stalled";
  }
  return "unknown";
}

void SolverConfig::validate() const {
  if (max_iters < 1) throw InvalidArgument("max_iters must be at least 1");
  if (!(gradient_tolerance > 0) || !(step_tolerance > 0) ||
      !(initial_damping > 0) || !(damping_increase > 1) ||
      !(damping_decrease > 0 && damping_decrease < 1)) {
    throw InvalidArgument("solver tolerances and damping must be positive");
  }
}

Eigen::MatrixXd LeastSquaresObjective::jacobian(const ParamVector& x,
                                                JacobianMode mode) const {
  if (mode == JacobianMode::kAnalytic) return analytic_jacobian(x);
  const int m = parameter_count();
  Eigen::MatrixXd jac(residual_count(), m);
  if (mode == JacobianMode::kForwardDiff) {
    const Eigen::VectorXd r0 = residual(x);
    for (int j = 0; j < m; ++j) {
      const double h = 1.5e-8 * std::max(1.0, std::abs(x[j]));
      ParamVector xp = x;
      xp[j] += h;
      jac.col(j) = (residual(xp) - r0) / h;
    }
    return jac;
  }
  for (int j = 0; j < m; ++j) {
    constexpr double h = 1e-6;
    ParamVector xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    jac.col(j) = (residual(xp) - residual(xm)) / (2.0 * h);
  }
  return jac;
}

namespace {

std::vector<double> to_std(const ParamVector& x) {
  return {x.data(), x.data() + x.size()};
}

bool stationary(const Eigen::MatrixXd& jac, const Eigen::VectorXd& r,
                double tol) {
  const double rn = r.norm();
  if (rn == 0.0) return true;
  for (Eigen::Index j = 0; j < jac.cols(); ++j) {
    const double cn = jac.col(j).norm();
    if (cn == 0.0) continue;
    if (std::abs(jac.col(j).dot(r)) / (cn * rn) > tol) return false;
  }
  return true;
}

}  // namespace

LmResult minimize(const LeastSquaresObjective& objective, const ParamVector& x0,
                  const SolverConfig& config) {
  config.validate();
  if (x0.size() != objective.parameter_count() || !x0.allFinite()) {
    throw InvalidArgument("initial parameters are not finite or mis-sized");
  }
  if (objective.residual_count() < objective.parameter_count()) {
    throw InvalidArgument("basis yields fewer equations than unknowns");
  }
  LmResult out;
  out.x = x0;
  out.residual = objective.residual(x0);
  out.objective = out.residual.squaredNorm();
  if (!std::isfinite(out.objective)) {
    throw NonFinite("objective is not finite at the initial point", to_std(x0));
  }
  out.accepted_objectives.push_back(out.objective);

  Eigen::MatrixXd jac = objective.jacobian(out.x, config.jacobian_mode);
  if (!jac.allFinite()) {
    throw NonFinite("Jacobian is not finite", to_std(out.x));
  }
  double damping = config.initial_damping;
  const int m = objective.parameter_count();

  if (stationary(jac, out.residual, config.gradient_tolerance)) {
    out.reason = Convergence::kGradient;
    return out;
  }

  out.reason = Convergence::kMaxIters;
  for (out.iterations = 1; out.iterations <= config.max_iters;
       ++out.iterations) {
    const Eigen::MatrixXd normal = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * out.residual;
    bool accepted = false;
    bool done = false;
    while (!accepted) {
      Eigen::MatrixXd damped = normal;
      for (int j = 0; j < m; ++j) {
        damped(j, j) += damping * std::max(normal(j, j), 1e-12);
      }
      const Eigen::VectorXd step = damped.ldlt().solve(-grad);
      if (!step.allFinite()) {
        damping *= config.damping_increase;
      } else if (step.norm() < config.step_tolerance *
                                   (out.x.norm() + config.step_tolerance)) {
        out.reason = Convergence::kStep;
        done = true;
        break;
      } else {
        const ParamVector trial = out.x + step;
        Eigen::VectorXd r;
        double f = std::numeric_limits<double>::infinity();
        try {
          r = objective.residual(trial);
          f = r.squaredNorm();
        } catch (const DegenerateDirection&) {
        }
        if (std::isfinite(f) && f < out.objective) {
          out.x = trial;
          out.residual = std::move(r);
          out.objective = f;
          out.accepted_objectives.push_back(f);
          damping = std::max(damping * config.damping_decrease, 1e-15);
          accepted = true;
        } else {
          damping *= config.damping_increase;
        }
      }
      if (!accepted && damping > 1e16) {
        out.reason = Convergence::kStalled;
        done = true;
        break;
      }
    }
    if (done) break;
    jac = objective.jacobian(out.x, config.jacobian_mode);
    if (!jac.allFinite()) {
      throw NonFinite("Jacobian is not finite", to_std(out.x));
    }
    if (stationary(jac, out.residual, config.gradient_tolerance)) {
      out.reason = Convergence::kGradient;
      break;
    }
  }
  out.iterations = std::min(out.iterations, config.max_iters);
  return out;
}

namespace {

void canonicalize(std::vector<Vec3>& pts) {
  for (auto& p : pts) p = p.array() + 0.0;  // folds -0.0 into +0.0
  std::sort(pts.begin(), pts.end(), [](const Vec3& a, const Vec3& b) {
    if (a.x() != b.x()) return a.x() < b.x();
    if (a.y() != b.y()) return a.y() < b.y();
    return a.z() < b.z();
  });
}

bool dims_match(ModelKind kind, int p_dim, int q_dim) {
  switch (kind) {
    case ModelKind::kRigid3D:
      return p_dim == 3 && q_dim == 3;
    case ModelKind::kBearing3D2D:
      // An image point [u v 1] is a scene point at unit depth.
      return q_dim == 2;
    case ModelKind::kEpipolar2D2D:
    case ModelKind::kHomography2D2D:
      return p_dim == 2 && q_dim == 2;
  }
  return false;
}

}  // namespace

Problem::Problem(CorrespondenceModel model, const PointSet& p,
                 const PointSet& q, FeatureBasis basis, ProblemOptions options)
    : model_(model), basis_(std::move(basis)) {
  model_.validate();
  if (basis_.empty()) throw InvalidArgument("feature basis is empty");
  p.validate();
  q.validate();
  if (!dims_match(model_.kind, p.dim, q.dim)) {
    throw InvalidArgument("point set dimensions (" + std::to_string(p.dim) +
                          ", " + std::to_string(q.dim) +
                          ") do not fit model '" +
                          std::string(model_name(model_.kind)) + "'");
  }
  p_ = p.points;
  q_.reserve(q.size());
  const bool bearings = model_.kind == ModelKind::kBearing3D2D ||
                        model_.kind == ModelKind::kHomography2D2D;
  for (std::size_t k = 0; k < q.size(); ++k) {
    if (bearings) {
      const double n = q.points[k].norm();
      if (!(n >= kDegenerateNorm)) {
        throw DegenerateDirection("Q point has zero length", k);
      }
      q_.push_back(q.points[k] / n);
    } else {
      q_.push_back(q.points[k]);
    }
  }
  canonicalize(p_);
  canonicalize(q_);

  const bool normalize =
      options.normalize.value_or(model_.kind == ModelKind::kBearing3D2D);
  if (normalize) {
    if (q_depends_on_theta()) {
      throw InvalidArgument("normalization is not defined for the epipolar model");
    }
    stats_ = compute_stats(q_);
  }
  if (!q_depends_on_theta()) {
    const PoseMapping identity(model_, ParamVector::Zero(parameter_count()));
    fixed_q_features_ =
        kernels::mapped_means(q_, identity, kernels::Side::kQ, basis_,
                              stats_ ? &*stats_ : nullptr, false, exec_)
            .features;
  }
}

int Problem::parameter_count() const { return cfpose::parameter_count(model_.kind); }

int Problem::residual_count() const { return static_cast<int>(basis_.size()) * 3; }

kernels::MappedMeans Problem::side_means(std::span<const Vec3> pts,
                                         kernels::Side side,
                                         const ParamVector& x, bool jac) const {
  const PoseMapping mapping(model_, x);
  return kernels::mapped_means(pts, mapping, side, basis_,
                               stats_ ? &*stats_ : nullptr, jac, exec_);
}

Eigen::VectorXd Problem::residual(const ParamVector& x) const {
  const auto p = side_means(p_, kernels::Side::kP, x, false);
  if (!q_depends_on_theta()) return p.features - fixed_q_features_;
  const auto q = side_means(q_, kernels::Side::kQ, x, false);
  return p.features - q.features;
}

Eigen::MatrixXd Problem::analytic_jacobian(const ParamVector& x) const {
  const auto p = side_means(p_, kernels::Side::kP, x, true);
  if (!q_depends_on_theta()) return p.jacobian;
  const auto q = side_means(q_, kernels::Side::kQ, x, true);
  return p.jacobian - q.jacobian;
}

Estimate solve(const Problem& problem, const PoseParams& theta0,
               const SolverConfig& config) {
  const ModelKind kind = problem.model().kind;
  const ParamVector x0 = theta0.to_vector(kind);
  LmResult r = minimize(problem, x0, config);
  Estimate e;
  e.theta = PoseParams::from_vector(kind, r.x);
  e.x = std::move(r.x);
  e.objective = r.objective;
  e.iterations = r.iterations;
  e.reason = r.reason;
  e.residual = std::move(r.residual);
  e.accepted_objectives = std::move(r.accepted_objectives);
  return e;
}

ScalarScaleProblem::ScalarScaleProblem(std::vector<double> p,
                                       std::vector<double> q,
                                       FeatureBasis basis)
    : p_(std::move(p)), basis_(std::move(basis)) {
  if (basis_.empty()) throw InvalidArgument("feature basis is empty");
  if (p_.empty() || q.empty()) throw InvalidArgument("scalar sets are empty");
  q_features_ = aggregate_scalars(q, basis_).values;
}

Eigen::VectorXd ScalarScaleProblem::residual(const ParamVector& x) const {
  std::vector<double> mapped(p_.size());
  for (std::size_t k = 0; k < p_.size(); ++k) mapped[k] = x[0] * p_[k];
  return aggregate_scalars(mapped, basis_).values - q_features_;
}

Eigen::MatrixXd ScalarScaleProblem::analytic_jacobian(const ParamVector& x) const {
  const auto l = static_cast<Eigen::Index>(basis_.size());
  kernels::RowMatrix table(static_cast<Eigen::Index>(p_.size()), l);
  std::vector<double> vals(basis_.size()), ders(basis_.size());
  for (std::size_t k = 0; k < p_.size(); ++k) {
    basis_.evaluate(x[0] * p_[k], vals.data(), ders.data());
    for (Eigen::Index i = 0; i < l; ++i) {
      table(static_cast<Eigen::Index>(k), i) = ders[i] * p_[k];
    }
  }
  return kernels::sorted_column_means(table, kernels::Execution::kSerial);
}

}  // namespace cfpose
