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

#ifndef DPFED_METRICS_H_
#define DPFED_METRICS_H_

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

namespace dpfed {

// One row of the per-round metrics CSV. NaN fields render as empty cells;
// only the columns a run can meaningfully fill are filled (e.g. test_acc only
// for classification runs at the evaluation cadence, eps_err_sq only when the
// true momentum error is computable). All evaluated points are "what the
// algorithm would output if stopped after this row's round".
struct MetricsRow {
  int round = 0;
  double train_loss = std::nan("");
  double test_acc = std::nan("");
  double excess_loss = std::nan("");
  double eps_err_sq = std::nan("");
  double rho_spent_max = std::nan("");
  long long grad_evals = 0;
  double wall_ms = std::nan("");
};

// Fixed schema; order and spelling are load-bearing for downstream tooling.
inline constexpr const char* kMetricsHeader =
    "round,train_loss,test_acc,excess_loss,eps_err_sq,rho_spent_max,"
    "grad_evals,wall_ms";

// Serialization is deterministic: fixed shortest-round-trip formatting,
// empty cells for NaN. Reruns of the same config+seed produce identical bytes.
std::string format_metrics_row(const MetricsRow& row);
void write_metrics_csv(std::ostream& os, const std::vector<MetricsRow>& rows);

}  // namespace dpfed

#endif  // DPFED_METRICS_H_
