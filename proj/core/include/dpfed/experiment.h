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

#ifndef DPFED_EXPERIMENT_H_
#define DPFED_EXPERIMENT_H_

#include <cmath>
#include <string>

#include "dpfed/config.h"
#include "dpfed/engine.h"

namespace dpfed {

// One finished experiment: the raw run plus the final-row metrics and the
// realized privacy cost pulled out for reporting. metrics_csv holds the exact
// bytes written to the output file (header plus one row per evaluated round).
struct ExperimentResult {
  RunResult run;
  std::string metrics_csv;
  double final_train_loss = std::nan("");
  double final_test_acc = std::nan("");
  double final_excess = std::nan("");
  double rho_spent = std::nan("");  // max over machines; NaN when non-private
  double epsilon = std::nan("");    // at the configured delta
  double wall_seconds = 0.0;
};

// Builds the objective, loads or synthesizes the per-machine data, runs the
// algorithm, and writes the metrics CSV when an output path is set. The whole
// pipeline is a deterministic function of the config (modulo wall_ms under
// `timing = on`). Quadratic runs with no per_machine provision get T samples
// per machine (ceil(m T / M) under experiment_mode). train_csv, test_csv and
// train_probe apply to mnist-logistic only; setting them elsewhere is an
// error.
ExperimentResult run_experiment(const ExperimentConfig& config);

// One human-readable line: algorithm, shape, the final metrics that exist,
// realized (rho, epsilon) for private runs, gradient count, wall time.
std::string experiment_summary(const ExperimentConfig& config,
                               const ExperimentResult& result);

// Grid file: `key = v1 v2 ...` per line (whitespace-separated values, `#`
// comments). Runs the base config once per point of the Cartesian product,
// each run with fresh RNG streams derived from its own seed, and returns an
// aggregate CSV: one column per grid axis (values verbatim) followed by
// train_loss,test_acc,excess_loss,rho_spent_max,grad_evals from each run's
// final row. Axis keys must be config keys; `out` is not sweepable and
// per-run metrics files are not written. An empty grid is an error.
std::string run_sweep(const ExperimentConfig& base,
                      const std::string& grid_text);

// Whole file as a string; throws std::runtime_error if unreadable.
std::string read_text_file(const std::string& path);

}  // namespace dpfed

#endif  // DPFED_EXPERIMENT_H_
