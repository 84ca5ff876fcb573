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

// Serial vs OpenMP timings of the aggregation kernels and a full solve.

#include <benchmark/benchmark.h>

#include <vector>

#include "cfpose/features.hpp"
#include "cfpose/geometry.hpp"
#include "cfpose/kernels.hpp"
#include "cfpose/simgen.hpp"
#include "cfpose/solver.hpp"

namespace {

using cfpose::kernels::Execution;

cfpose::Scene make_scene(int n) {
  auto cfg = cfpose::default_scene_config(cfpose::ModelKind::kBearing3D2D);
  cfg.n_points = n;
  return cfpose::gen_scene(cfg);
}

Execution exec_of(const benchmark::State& state) {
  return state.range(1) ? Execution::kParallel : Execution::kSerial;
}

void BM_MappedMeans(benchmark::State& state) {
  const auto scene = make_scene(static_cast<int>(state.range(0)));
  const auto basis = cfpose::default_basis_18();
  const cfpose::PoseMapping mapping(scene.model,
                                    scene.theta_star.to_vector(scene.model.kind));
  const Execution exec = exec_of(state);
  for (auto _ : state) {
    auto m = cfpose::kernels::mapped_means(scene.p.points, mapping, cfpose::kernels::Side::kP,
                                           basis, nullptr, true, exec);
    benchmark::DoNotOptimize(m.jacobian.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SortedColumnMeans(benchmark::State& state) {
  const auto scene = make_scene(static_cast<int>(state.range(0)));
  const auto basis = cfpose::default_basis_18();
  cfpose::kernels::RowMatrix comps(static_cast<Eigen::Index>(scene.q.size()), 3);
  for (std::size_t k = 0; k < scene.q.size(); ++k) {
    comps.row(static_cast<Eigen::Index>(k)) = scene.q.points[k].transpose();
  }
  const Execution exec = exec_of(state);
  const auto table = cfpose::kernels::feature_table(comps, basis, exec);
  for (auto _ : state) {
    auto means = cfpose::kernels::sorted_column_means(table, exec);
    benchmark::DoNotOptimize(means.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Solve(benchmark::State& state) {
  const auto scene = make_scene(static_cast<int>(state.range(0)));
  cfpose::Problem problem(scene.model, scene.p, scene.q, cfpose::default_basis_18());
  problem.set_execution(exec_of(state));
  const auto theta0 = cfpose::perturb_initial(scene.theta_star, scene.model.kind, 0.1, 7);
  for (auto _ : state) {
    auto e = cfpose::solve(problem, theta0);
    benchmark::DoNotOptimize(e.objective);
  }
}

void Args(benchmark::internal::Benchmark* b) {
  for (int n : {1000, 4000, 16000}) {
    b->Args({n, 0});
    b->Args({n, 1});
  }
  b->ArgNames({"N", "parallel"});
}

BENCHMARK(BM_MappedMeans)->Apply(Args)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SortedColumnMeans)->Apply(Args)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Solve)->Apply(Args)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
