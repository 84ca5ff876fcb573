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

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "cfpose/geometry.hpp"

namespace cfpose {

// Building blocks of closed-form feature functions. Trigonometric terms use
// pi * x as their argument.
enum class Term : int {
  kConstant = 0,
  kX,
  kX2,
  kSin,
  kCos,
  kSin2,
  kCos2,
  kXSin,
  kXCos,
};
inline constexpr int kTermCount = 9;

std::string_view term_name(Term t);
std::optional<Term> term_from_name(std::string_view name);

// Linear combination of Terms; value and derivative are closed form.
struct TermSeries {
  std::array<double, kTermCount> coeff{};

  TermSeries& set(Term t, double c) {
    coeff[static_cast<int>(t)] = c;
    return *this;
  }
  double operator[](Term t) const { return coeff[static_cast<int>(t)]; }
  double value(double x) const;
  double derivative(double x) const;
};

// Scalar function R -> R applied to single coordinate components.
class FeatureFunction {
 public:
  using Fn = std::function<double(double)>;

  static FeatureFunction series(std::string name, TermSeries s);
  // A user supplied function. Without a derivative only finite-difference
  // Jacobians are available.
  static FeatureFunction custom(std::string name, Fn value, Fn derivative = {});

  const std::string& name() const { return name_; }
  bool is_series() const { return series_.has_value(); }
  const TermSeries& terms() const { return *series_; }
  bool has_derivative() const { return series_ || derivative_; }

  double value(double x) const;
  double derivative(double x) const;

 private:
  std::string name_;
  std::optional<TermSeries> series_;
  Fn value_;
  Fn derivative_;
};

// Ordered list of L scalar feature functions. Applied to C coordinate
// components this yields L*C aggregate entries, laid out function-major:
// entry i*C + c is function i on component c.
class FeatureBasis {
 public:
  FeatureBasis() = default;
  explicit FeatureBasis(std::vector<FeatureFunction> funcs);

  std::size_t size() const { return funcs_.size(); }
  bool empty() const { return funcs_.empty(); }
  const FeatureFunction& operator[](std::size_t i) const { return funcs_[i]; }
  const std::string& name() const { return name_; }
  void set_name(std::string n) { name_ = std::move(n); }

  bool has_derivatives() const { return has_derivatives_; }

  // Writes f_i(x) into values[0..L) and, when derivs is non-null, f_i'(x)
  // into derivs[0..L). Series-only bases share one sin/cos evaluation.
  void evaluate(double x, double* values, double* derivs) const;

 private:
  std::string name_ = "custom";
  std::vector<FeatureFunction> funcs_;
  bool all_series_ = true;
  bool has_derivatives_ = true;
};

// Six scalar templates, 18 aggregate entries over three components:
//   a x + b sin(pi x) + c x cos(pi x)          (templates 1, 4, 6)
//   a x^2 + b sin^2(pi x) + c cos(pi x)        (templates 2, 3, 5)
// The bare "x" in the x cos(pi x) terms is read as the component x_i.
FeatureBasis default_basis_18();
// f(x) = x; the plain mean.
FeatureBasis identity_basis();
// "paper18" or "identity".
FeatureBasis basis_by_name(std::string_view name);

struct NormalizationStats {
  Vec3 mean = Vec3::Zero();
  double sigma = 1.0;

  // (y - mean) / (2 sigma)
  Vec3 apply(const Vec3& y) const { return (y - mean) / (2.0 * sigma); }
};

// Mean and spread of a set of vectors: sigma^2 = sum ||v - mean||^2 / (N-1).
// Throws ZeroSpread when sigma < 1e-12 and InvalidArgument when N < 2.
NormalizationStats compute_stats(std::span<const Vec3> vectors);

// Projects each point to the unit sphere, then centers and scales with the
// stats of that set. Returns the normalized set (dim 3) and its stats.
std::pair<PointSet, NormalizationStats> normalize_bearing_set(
    const PointSet& raw);

struct AggregateFeatures {
  Eigen::VectorXd values;
  int components = 3;
};

// (1/N) sum_k f_i((q_k)_c) for every function i and component c. Summands
// are sorted before compensated summation, so the result does not depend on
// point order at all.
AggregateFeatures aggregate(const PointSet& set, const FeatureBasis& basis);
AggregateFeatures aggregate_scalars(std::span<const double> values,
                                    const FeatureBasis& basis);

// Aggregate of h(p_k, theta), normalized by `stats` when given, averaged
// over this set's own cardinality. Throws DegenerateDirection carrying the
// offending point index.
AggregateFeatures aggregate_mapped(const PointSet& set,
                                   const CorrespondenceModel& model,
                                   const PoseParams& theta,
                                   const FeatureBasis& basis,
                                   const std::optional<NormalizationStats>& stats);

}  // namespace cfpose
