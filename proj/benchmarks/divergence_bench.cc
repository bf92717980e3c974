// Copyright 2026 The gssd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include "gssd/divergences.hpp"
#include "gssd/estimator.hpp"
#include "gssd/rng.hpp"

namespace {

Eigen::VectorXd draws(std::uint64_t seed, Eigen::Index n, double scale) {
  return gssd::gaussian_noise(gssd::RngStream(seed), n, scale);
}

void BM_Wasserstein1d(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const Eigen::VectorXd x = draws(1, n, 3.0);
  const Eigen::VectorXd y = draws(2, n, 3.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(gssd::wasserstein_1d(x, y, 2.0));
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_Wasserstein1d)->Range(64, 16384)->Complexity();

void BM_Mmd1d(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const Eigen::VectorXd x = draws(1, n, 3.0);
  const Eigen::VectorXd y = draws(2, n, 3.0);
  gssd::DivergenceSpec spec;
  spec.kind = gssd::DivergenceKind::kMmd;
  for (auto _ : state) {
    benchmark::DoNotOptimize(gssd::mmd_1d(x, y, spec));
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_Mmd1d)->Range(64, 4096)->Complexity();

void BM_Sinkhorn1d(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const Eigen::VectorXd x = draws(1, n, 3.0);
  const Eigen::VectorXd y = draws(2, n, 3.0);
  gssd::DivergenceSpec spec;
  spec.kind = gssd::DivergenceKind::kSinkhorn;
  spec.sinkhorn_tol = 1e-6;
  for (auto _ : state) {
    benchmark::DoNotOptimize(gssd::sinkhorn_divergence_1d(x, y, spec));
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_Sinkhorn1d)->Range(32, 512)->Complexity();

void BM_EstimateGsswd(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const Eigen::Index d = 50;
  const gssd::RngStream gen(7);
  const gssd::SampleSet mu =
      gssd::gen_gaussian_isotropic(gen.child(1), n, d, 0.0, 1.0, 1);
  const gssd::SampleSet nu =
      gssd::gen_gaussian_isotropic(gen.child(2), n, d, 0.0, 1.0, 2);
  gssd::SmoothedSliceConfig cfg;
  cfg.sigma = 3.0;
  cfg.projections = 50;
  for (auto _ : state) {
    benchmark::DoNotOptimize(gssd::estimate_gssd(mu, nu, cfg));
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_EstimateGsswd)->Range(256, 4096)->Complexity();

}  // namespace
