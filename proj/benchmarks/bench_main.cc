// Copyright 2025 The dpfed Authors
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

#include <cstdint>

#include "dpfed/engine.h"
#include "dpfed/objectives.h"
#include "dpfed/rng.h"
#include "dpfed/vec.h"

namespace {

using namespace dpfed;

void BM_Axpy(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  Vector x(static_cast<std::size_t>(d), 1.0);
  Vector y(static_cast<std::size_t>(d), 2.0);
  for (auto _ : state) {
    axpy(0.5, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * d);
}
BENCHMARK(BM_Axpy)->Arg(50)->Arg(7850);

void BM_GaussianFill(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  RngStream stream(7, StreamPurpose::kNoise, 0);
  Vector out(static_cast<std::size_t>(d));
  for (auto _ : state) {
    stream.fill_gaussian(out, 1.0);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * d);
}
BENCHMARK(BM_GaussianFill)->Arg(50)->Arg(7850);

void BM_LogisticGradient(benchmark::State& state) {
  ProblemSpec spec;
  spec.family = ObjectiveFamily::kMnistLogistic;
  const auto problem = make_problem(spec, 1);

  RngStream stream(7, StreamPurpose::kData, 0);
  Sample z;
  z.features.resize(785);
  for (auto& f : z.features) {
    f = static_cast<float>(stream.next_double());
  }
  z.features.back() = 1.0f;
  z.label = 3;

  Vector x(static_cast<std::size_t>(problem->dim()), 0.0);
  for (auto _ : state) {
    Vector g = problem->gradient(0, x, z);
    benchmark::DoNotOptimize(g.data());
  }
}
BENCHMARK(BM_LogisticGradient);

// One full noiseless quadratic run; reports per-round cost.
void BM_QuadraticRun(benchmark::State& state) {
  ProblemSpec spec;
  RunConfig config;
  config.algorithm = Algorithm::kMu2Partial;
  config.T = 50;
  config.M = 10;
  config.m = 5;
  config.noise_enabled = false;
  config.eval_every = config.T;

  const auto problem = make_problem(spec, config.M);
  const auto* quad = dynamic_cast<const QuadraticProblem*>(problem.get());
  for (auto _ : state) {
    RunResult r = run_algorithm(config, *problem,
                                quad->make_datasets(config.T, config.seed));
    benchmark::DoNotOptimize(r.output.data());
  }
  state.SetItemsProcessed(state.iterations() * config.T);
}
BENCHMARK(BM_QuadraticRun);

}  // namespace

BENCHMARK_MAIN();
