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

#include "dpfed/metrics.h"

#include <charconv>
#include <cstdio>

namespace dpfed {
namespace {

void append_real(std::string& out, double v) {
  if (std::isnan(v)) return;  // empty cell
  char buf[32];
  // Shortest round-trip decimal; identical across runs of the same binary
  // and across conforming from_chars/to_chars implementations.
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace

std::string format_metrics_row(const MetricsRow& row) {
  std::string out;
  out.reserve(96);
  out += std::to_string(row.round);
  out += ',';
  append_real(out, row.train_loss);
  out += ',';
  append_real(out, row.test_acc);
  out += ',';
  append_real(out, row.excess_loss);
  out += ',';
  append_real(out, row.eps_err_sq);
  out += ',';
  append_real(out, row.rho_spent_max);
  out += ',';
  out += std::to_string(row.grad_evals);
  out += ',';
  append_real(out, row.wall_ms);
  return out;
}

void write_metrics_csv(std::ostream& os, const std::vector<MetricsRow>& rows) {
  os << kMetricsHeader << '\n';
  for (const auto& r : rows) os << format_metrics_row(r) << '\n';
}

}  // namespace dpfed
