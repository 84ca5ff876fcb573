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

#include "cfpose/features.hpp"

#include <cmath>
#include <numbers>

#include "cfpose/errors.hpp"
#include "cfpose/kernels.hpp"

namespace cfpose {

namespace {

constexpr std::array<std::string_view, kTermCount> kTermNames = {
    "const", "x", "x2", "sin", "cos", "sin2", "cos2", "x_sin", "x_cos"};

struct TrigAt {
  double x, s, c;
  explicit TrigAt(double v)
      : x(v), s(std::sin(std::numbers::pi * v)), c(std::cos(std::numbers::pi * v)) {}
};

double series_value(const TermSeries& t, const TrigAt& a) {
  const auto& k = t.coeff;
  return k[0] + k[1] * a.x + k[2] * a.x * a.x + k[3] * a.s + k[4] * a.c +
         k[5] * a.s * a.s + k[6] * a.c * a.c + k[7] * a.x * a.s +
         k[8] * a.x * a.c;
}

double series_derivative(const TermSeries& t, const TrigAt& a) {
  constexpr double pi = std::numbers::pi;
  const auto& k = t.coeff;
  return k[1] + 2.0 * k[2] * a.x + pi * k[3] * a.c - pi * k[4] * a.s +
         2.0 * pi * (k[5] - k[6]) * a.s * a.c + k[7] * (a.s + pi * a.x * a.c) +
         k[8] * (a.c - pi * a.x * a.s);
}

}  // namespace

std::string_view term_name(Term t) { return kTermNames[static_cast<int>(t)]; }

std::optional<Term> term_from_name(std::string_view name) {
  for (int i = 0; i < kTermCount; ++i) {
    if (kTermNames[i] == name) return static_cast<Term>(i);
  }
  return std::nullopt;
}

double TermSeries::value(double x) const { return series_value(*this, TrigAt(x)); }

double TermSeries::derivative(double x) const {
  return series_derivative(*this, TrigAt(x));
}

FeatureFunction FeatureFunction::series(std::string name, TermSeries s) {
  FeatureFunction f;
  f.name_ = std::move(name);
  f.series_ = s;
  return f;
}

FeatureFunction FeatureFunction::custom(std::string name, Fn value,
                                        Fn derivative) {
  if (!value) throw InvalidArgument("feature function needs a value callable");
  FeatureFunction f;
  f.name_ = std::move(name);
  f.value_ = std::move(value);
  f.derivative_ = std::move(derivative);
  return f;
}

double FeatureFunction::value(double x) const {
  return series_ ? series_->value(x) : value_(x);
}

double FeatureFunction::derivative(double x) const {
  if (series_) return series_->derivative(x);
  if (!derivative_) {
    throw InvalidArgument("feature function '" + name_ + "' has no derivative");
  }
  return derivative_(x);
}

FeatureBasis::FeatureBasis(std::vector<FeatureFunction> funcs)
    : funcs_(std::move(funcs)) {
  if (funcs_.empty()) throw InvalidArgument("feature basis is empty");
  for (const auto& f : funcs_) {
    all_series_ = all_series_ && f.is_series();
    has_derivatives_ = has_derivatives_ && f.has_derivative();
  }
}

void FeatureBasis::evaluate(double x, double* values, double* derivs) const {
  if (all_series_) {
    const TrigAt a(x);
    for (std::size_t i = 0; i < funcs_.size(); ++i) {
      values[i] = series_value(funcs_[i].terms(), a);
      if (derivs) derivs[i] = series_derivative(funcs_[i].terms(), a);
    }
    return;
  }
  for (std::size_t i = 0; i < funcs_.size(); ++i) {
    values[i] = funcs_[i].value(x);
    if (derivs) derivs[i] = funcs_[i].derivative(x);
  }
}

FeatureBasis default_basis_18() {
  auto odd = [](double x, double sin, double x_cos) {
    return TermSeries{}
        .set(Term::kX, x)
        .set(Term::kSin, sin)
        .set(Term::kXCos, x_cos);
  };
  auto even = [](double x2, double sin2, double cos) {
    return TermSeries{}
        .set(Term::kX2, x2)
        .set(Term::kSin2, sin2)
        .set(Term::kCos, cos);
  };
  FeatureBasis basis({
      FeatureFunction::series("t1", odd(-0.6578, -1.058, 0.123)),
      FeatureFunction::series("t2", even(-0.2567, 0.3437, 1.286)),
      FeatureFunction::series("t3", even(-0.7620, -1.288, 0.1921)),
      FeatureFunction::series("t4", odd(1.245, -0.9539, -1.540)),
      FeatureFunction::series("t5", even(2.998, -1.620, 1.032)),
      FeatureFunction::series("t6", odd(-4.656, 2.290, -5.183)),
  });
  basis.set_name("paper18");
  return basis;
}

FeatureBasis identity_basis() {
  FeatureBasis basis(
      {FeatureFunction::series("x", TermSeries{}.set(Term::kX, 1.0))});
  basis.set_name("identity");
  return basis;
}

FeatureBasis basis_by_name(std::string_view name) {
  if (name == "paper18") return default_basis_18();
  if (name == "identity") return identity_basis();
  throw InvalidArgument("unknown basis '" + std::string(name) + "'");
}

NormalizationStats compute_stats(std::span<const Vec3> vectors) {
  const std::size_t n = vectors.size();
  if (n < 2) throw InvalidArgument("normalization needs at least two points");
  kernels::CompensatedSum sx, sy, sz;
  for (const auto& v : vectors) {
    sx.add(v.x());
    sy.add(v.y());
    sz.add(v.z());
  }
  NormalizationStats stats;
  stats.mean = Vec3(sx.result(), sy.result(), sz.result()) / double(n);
  kernels::CompensatedSum ss;
  for (const auto& v : vectors) ss.add((v - stats.mean).squaredNorm());
  stats.sigma = std::sqrt(ss.result() / double(n - 1));
  if (!(stats.sigma >= 1e-12)) {
    throw ZeroSpread("point set has no spread (sigma = " +
                     std::to_string(stats.sigma) + ")");
  }
  return stats;
}

std::pair<PointSet, NormalizationStats> normalize_bearing_set(
    const PointSet& raw) {
  raw.validate();
  std::vector<Vec3> unit;
  unit.reserve(raw.size());
  for (std::size_t k = 0; k < raw.size(); ++k) {
    const double n = raw.points[k].norm();
    if (!(n >= kDegenerateNorm)) {
      throw DegenerateDirection("bearing has zero length", k);
    }
    unit.push_back(raw.points[k] / n);
  }
  const NormalizationStats stats = compute_stats(unit);
  PointSet out;
  out.dim = 3;
  out.gray = raw.gray;
  out.points.reserve(unit.size());
  for (const auto& u : unit) out.points.push_back(stats.apply(u));
  return {std::move(out), stats};
}

namespace {

AggregateFeatures aggregate_rows(const kernels::RowMatrix& comps,
                                 const FeatureBasis& basis) {
  if (basis.empty()) throw InvalidArgument("feature basis is empty");
  if (comps.rows() == 0) throw InvalidArgument("cannot aggregate an empty set");
  const auto exec = kernels::Execution::kParallel;
  const auto table = kernels::feature_table(comps, basis, exec);
  return {kernels::sorted_column_means(table, exec),
          static_cast<int>(comps.cols())};
}

}  // namespace

AggregateFeatures aggregate(const PointSet& set, const FeatureBasis& basis) {
  set.validate();
  kernels::RowMatrix comps(static_cast<Eigen::Index>(set.size()), 3);
  for (std::size_t k = 0; k < set.size(); ++k) {
    comps.row(static_cast<Eigen::Index>(k)) = set.points[k].transpose();
  }
  return aggregate_rows(comps, basis);
}

AggregateFeatures aggregate_scalars(std::span<const double> values,
                                    const FeatureBasis& basis) {
  kernels::RowMatrix comps(static_cast<Eigen::Index>(values.size()), 1);
  for (std::size_t k = 0; k < values.size(); ++k) {
    comps(static_cast<Eigen::Index>(k), 0) = values[k];
  }
  return aggregate_rows(comps, basis);
}

AggregateFeatures aggregate_mapped(
    const PointSet& set, const CorrespondenceModel& model,
    const PoseParams& theta, const FeatureBasis& basis,
    const std::optional<NormalizationStats>& stats) {
  set.validate();
  const PoseMapping mapping(model, theta.to_vector(model.kind));
  kernels::RowMatrix comps(static_cast<Eigen::Index>(set.size()), 3);
  for (std::size_t k = 0; k < set.size(); ++k) {
    Vec3 y;
    if (!mapping.map_p(set.points[k], &y, nullptr)) {
      throw DegenerateDirection("h(p, theta) has no direction", k);
    }
    if (stats) y = stats->apply(y);
    comps.row(static_cast<Eigen::Index>(k)) = y.transpose();
  }
  return aggregate_rows(comps, basis);
}

}  // namespace cfpose
