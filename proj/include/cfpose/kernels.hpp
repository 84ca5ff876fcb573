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

#include <span>

#include <Eigen/Core>

#include "cfpose/features.hpp"
#include "cfpose/geometry.hpp"

// Data-parallel aggregation kernels. Every kernel has a serial path and an
// OpenMP path that produce bitwise identical results: per-point work is
// independent, and reductions always run in a fixed order per column.
namespace cfpose::kernels {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Execution { kSerial, kParallel };

// Neumaier-compensated running sum.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x);
  double result() const { return sum + carry; }
};

// Total order on doubles that places -0.0 before +0.0.
bool total_less(double a, double b);

// Row k holds the C components of point k; the result row k holds
// f_i(component c) at column i*C + c.
RowMatrix feature_table(const RowMatrix& components, const FeatureBasis& basis,
                        Execution exec);

// Column means where each column's entries are sorted before summation.
Eigen::VectorXd sorted_column_means(const RowMatrix& table, Execution exec);

// Column means accumulated in row order.
Eigen::VectorXd ordered_column_means(const RowMatrix& table, Execution exec);

enum class Side { kP, kQ };

struct MappedMeans {
  // (1/N) sum_k f_i(z_kc), length L*3.
  Eigen::VectorXd features;
  // (1/N) sum_k f_i'(z_kc) dz_kc/dtheta, (L*3) x parameter_count. Empty
  // unless requested.
  Eigen::MatrixXd jacobian;
};

// Maps every point through h (Side::kP) or g (Side::kQ), optionally
// normalizes by `stats`, evaluates the basis per component and averages in
// point order. Throws DegenerateDirection naming the lowest degenerate index.
MappedMeans mapped_means(std::span<const Vec3> points,
                         const PoseMapping& mapping, Side side,
                         const FeatureBasis& basis,
                         const NormalizationStats* stats, bool with_jacobian,
                         Execution exec);

}  // namespace cfpose::kernels
