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

#include "cfpose/kernels.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <omp.h>

#include "cfpose/errors.hpp"

namespace cfpose::kernels {

void CompensatedSum::add(double x) {
  const double t = sum + x;
  if (std::abs(sum) >= std::abs(x)) {
    carry += (sum - t) + x;
  } else {
    carry += (x - t) + sum;
  }
  sum = t;
}

bool total_less(double a, double b) {
  if (a < b) return true;
  if (b < a) return false;
  return std::signbit(a) && !std::signbit(b);
}

RowMatrix feature_table(const RowMatrix& components, const FeatureBasis& basis,
                        Execution exec) {
  const Eigen::Index n = components.rows();
  const Eigen::Index c = components.cols();
  const Eigen::Index l = static_cast<Eigen::Index>(basis.size());
  RowMatrix table(n, l * c);
  auto fill_row = [&](Eigen::Index k) {
    double values[64];
    std::vector<double> spill;
    double* buf = values;
    if (l > 64) {
      spill.resize(static_cast<std::size_t>(l));
      buf = spill.data();
    }
    for (Eigen::Index comp = 0; comp < c; ++comp) {
      basis.evaluate(components(k, comp), buf, nullptr);
      for (Eigen::Index i = 0; i < l; ++i) table(k, i * c + comp) = buf[i];
    }
  };
  if (exec == Execution::kParallel) {
#pragma omp parallel for schedule(static)
    for (Eigen::Index k = 0; k < n; ++k) fill_row(k);
  } else {
    for (Eigen::Index k = 0; k < n; ++k) fill_row(k);
  }
  return table;
}

Eigen::VectorXd sorted_column_means(const RowMatrix& table, Execution exec) {
  const Eigen::Index n = table.rows();
  const Eigen::Index w = table.cols();
  Eigen::VectorXd means(w);
  auto column = [&](Eigen::Index j) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) v[k] = table(k, j);
    std::sort(v.begin(), v.end(), total_less);
    CompensatedSum s;
    for (double x : v) s.add(x);
    means[j] = s.result() / static_cast<double>(n);
  };
  if (exec == Execution::kParallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (Eigen::Index j = 0; j < w; ++j) column(j);
  } else {
    for (Eigen::Index j = 0; j < w; ++j) column(j);
  }
  return means;
}

Eigen::VectorXd ordered_column_means(const RowMatrix& table, Execution exec) {
  const Eigen::Index n = table.rows();
  const Eigen::Index w = table.cols();
  Eigen::VectorXd means(w);
  // Each worker owns a contiguous column slice and walks all rows, so the
  // per-column summation order never depends on the thread count.
  auto slice = [&](Eigen::Index begin, Eigen::Index end) {
    std::vector<CompensatedSum> sums(static_cast<std::size_t>(end - begin));
    for (Eigen::Index k = 0; k < n; ++k) {
      const double* row = table.data() + k * w;
      for (Eigen::Index j = begin; j < end; ++j) sums[j - begin].add(row[j]);
    }
    for (Eigen::Index j = begin; j < end; ++j) {
      means[j] = sums[j - begin].result() / static_cast<double>(n);
    }
  };
  if (exec == Execution::kParallel && w > 1) {
#pragma omp parallel
    {
      const Eigen::Index threads = omp_get_num_threads();
      const Eigen::Index id = omp_get_thread_num();
      const Eigen::Index chunk = (w + threads - 1) / threads;
      const Eigen::Index begin = std::min(w, id * chunk);
      const Eigen::Index end = std::min(w, begin + chunk);
      if (begin < end) slice(begin, end);
    }
  } else {
    slice(0, w);
  }
  return means;
}

MappedMeans mapped_means(std::span<const Vec3> points,
                         const PoseMapping& mapping, Side side,
                         const FeatureBasis& basis,
                         const NormalizationStats* stats, bool with_jacobian,
                         Execution exec) {
  const auto n = static_cast<Eigen::Index>(points.size());
  const auto l = static_cast<Eigen::Index>(basis.size());
  const int m = mapping.parameter_count();
  const Eigen::Index features = l * 3;
  const Eigen::Index width = features * (with_jacobian ? 1 + m : 1);
  if (n == 0) throw InvalidArgument("cannot aggregate an empty point set");
  if (with_jacobian && !basis.has_derivatives()) {
    throw InvalidArgument("basis lacks derivatives for an analytic Jacobian");
  }

  RowMatrix table(n, width);
  const double scale = stats ? 1.0 / (2.0 * stats->sigma) : 1.0;
  constexpr auto kNone = std::numeric_limits<Eigen::Index>::max();
  Eigen::Index first_bad = kNone;

  auto fill_row = [&](Eigen::Index k) -> bool {
    Vec3 y;
    PointJacobian jac;
    PointJacobian* jp = with_jacobian ? &jac : nullptr;
    const bool ok = side == Side::kP ? mapping.map_p(points[k], &y, jp)
                                     : mapping.map_q(points[k], &y, jp);
    if (!ok) return false;
    if (stats) {
      y = stats->apply(y);
      if (jp) jac *= scale;
    }
    double vals[64], ders[64];
    std::vector<double> spill;
    double* vb = vals;
    double* db = ders;
    if (l > 64) {
      spill.resize(2 * static_cast<std::size_t>(l));
      vb = spill.data();
      db = spill.data() + l;
    }
    double* row = table.data() + k * width;
    for (int c = 0; c < 3; ++c) {
      basis.evaluate(y[c], vb, with_jacobian ? db : nullptr);
      for (Eigen::Index i = 0; i < l; ++i) {
        const Eigen::Index f = i * 3 + c;
        row[f] = vb[i];
        if (with_jacobian) {
          double* jrow = row + features + f * m;
          for (int j = 0; j < m; ++j) jrow[j] = db[i] * jac(c, j);
        }
      }
    }
    return true;
  };

  if (exec == Execution::kParallel) {
#pragma omp parallel for schedule(static) reduction(min : first_bad)
    for (Eigen::Index k = 0; k < n; ++k) {
      if (!fill_row(k)) first_bad = std::min(first_bad, k);
    }
  } else {
    for (Eigen::Index k = 0; k < n; ++k) {
      if (!fill_row(k)) {
        first_bad = k;
        break;
      }
    }
  }
  if (first_bad != kNone) {
    throw DegenerateDirection("mapped point has no direction",
                              static_cast<std::size_t>(first_bad));
  }

  const Eigen::VectorXd means = ordered_column_means(table, exec);
  MappedMeans out;
  out.features = means.head(features);
  if (with_jacobian) {
    out.jacobian.resize(features, m);
    for (Eigen::Index f = 0; f < features; ++f) {
      for (int j = 0; j < m; ++j) out.jacobian(f, j) = means[features + f * m + j];
    }
  }
  return out;
}

}  // namespace cfpose::kernels
