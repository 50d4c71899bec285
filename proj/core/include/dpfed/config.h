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

#ifndef DPFED_CONFIG_H_
#define DPFED_CONFIG_H_

#include <string>

#include "dpfed/engine.h"
#include "dpfed/objectives.h"

namespace dpfed {

// A full experiment description: the run parameters, the objective, and the
// data/probe/output plumbing around them.
struct ExperimentConfig {
  RunConfig run;
  ProblemSpec problem;
  std::string train_csv;  // mnist-logistic: training rows (label + features)
  std::string test_csv;   // held-out rows for test_acc; optional
  int per_machine = 0;    // samples per machine; 0 = rows/M (or T synthetic)
  int train_probe = 0;    // train-loss probe size; 0 disables the column
  std::string out_csv;    // metrics destination; empty = no file
};

// Flat `key = value` format, one pair per line, `#` comments, blank lines
// ignored. Every key is explicit; unknown or duplicate keys are errors (the
// point is to catch typos in sweep grids). Values:
//   algorithm        mu2-partial | mu2-trusted | noisy-sgd | mu2-delayed
//   objective        quadratic | mnist-logistic
//   rounds, machines, participants        positive integers
//   rho              positive real; delta  real in (0,1)
//   eta              `auto` or a positive real
//   seed             unsigned integer
//   noise, experiment_mode, record_trace, timing      on | off
//   eval_every       nonnegative integer (0 = ceil(rounds/50))
//   diameter         positive real
//   dim, smoothness, sigma, xi            quadratic objective parameters
//   train_csv, test_csv, out              paths (may be empty)
//   per_machine, train_probe              nonnegative integers
// Throws std::invalid_argument naming the offending line.
ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);

// Emits every key in a fixed order; parse_experiment_config() on the result
// reproduces the config exactly (eta is normalized to 0 under `auto`).
std::string serialize_experiment_config(const ExperimentConfig& config);

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

}  // namespace dpfed

#endif  // DPFED_CONFIG_H_
