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

#include "dpfed/experiment.h"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "dpfed/dataset_io.h"
#include "dpfed/metrics.h"
#include "dpfed/privacy.h"

namespace dpfed {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' ||
                        s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                        s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

const char* objective_name(ObjectiveFamily family) {
  return family == ObjectiveFamily::kQuadratic ? "quadratic" : "mnist-logistic";
}

void check_labels(const std::vector<Sample>& rows, const std::string& path,
                  int num_classes) {
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].label >= num_classes) {
      throw std::runtime_error(path + " row " + std::to_string(r + 1) +
                               ": label " + std::to_string(rows[r].label) +
                               " exceeds num_classes - 1 = " +
                               std::to_string(num_classes - 1));
    }
  }
}

void append_real(std::string& out, double v) {
  if (std::isnan(v)) return;  // NaN renders as an empty cell
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  out.append(buf, ptr);
}

std::string short_real(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof(buf), "%.6g", v);
  return std::string(buf, buf + (n > 0 ? n : 0));
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open file: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig& rc = config.run;
  const auto problem = make_problem(config.problem, rc.M);

  std::vector<MachineDataset> datasets;
  std::vector<Sample> test_samples;
  std::vector<Sample> probe_samples;
  EvalData eval;

  if (config.problem.family == ObjectiveFamily::kMnistLogistic) {
    if (config.train_csv.empty()) {
      throw std::invalid_argument("mnist-logistic requires train_csv");
    }
    const int features = config.problem.feature_dim - 1;
    auto rows = load_csv_samples(config.train_csv, features);
    check_labels(rows, config.train_csv, config.problem.num_classes);
    if (config.train_probe > 0) {
      if (static_cast<std::size_t>(config.train_probe) > rows.size()) {
        throw std::runtime_error("train_probe exceeds the training row count");
      }
      probe_samples.assign(rows.begin(), rows.begin() + config.train_probe);
      eval.train_probe = &probe_samples;
    }
    datasets = partition_samples(std::move(rows), rc.M, config.per_machine,
                                 rc.seed);
    if (!config.test_csv.empty()) {
      test_samples = load_csv_samples(config.test_csv, features);
      check_labels(test_samples, config.test_csv, config.problem.num_classes);
      eval.test = &test_samples;
    }
  } else {
    if (!config.train_csv.empty() || !config.test_csv.empty() ||
        config.train_probe > 0) {
      throw std::invalid_argument(
          "train_csv/test_csv/train_probe apply to mnist-logistic only");
    }
    const auto* quad = dynamic_cast<const QuadraticProblem*>(problem.get());
    int per = config.per_machine;
    if (per == 0) {
      // Enough for every round: T per machine, or exactly the m T draws
      // spread over M machines when participation is capped by data.
      per = rc.experiment_mode
                ? static_cast<int>(
                      (static_cast<long long>(rc.m) * rc.T + rc.M - 1) / rc.M)
                : rc.T;
    }
    datasets = quad->make_datasets(per, rc.seed);
  }

  ExperimentResult result;
  result.run = run_algorithm(rc, *problem, std::move(datasets), eval);

  std::ostringstream csv;
  write_metrics_csv(csv, result.run.metrics);
  result.metrics_csv = csv.str();
  if (!config.out_csv.empty()) {
    std::ofstream out(config.out_csv, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot write metrics file: " + config.out_csv);
    }
    out << result.metrics_csv;
    out.flush();
    if (!out) {
      throw std::runtime_error("failed writing metrics file: " +
                               config.out_csv);
    }
  }

  const MetricsRow& last = result.run.metrics.back();
  result.final_train_loss = last.train_loss;
  result.final_test_acc = last.test_acc;
  result.final_excess = last.excess_loss;
  if (result.run.ledger) {
    result.rho_spent = result.run.ledger->max_spent();
    result.epsilon = zcdp_to_dp(result.rho_spent, rc.delta);
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return result;
}

std::string experiment_summary(const ExperimentConfig& config,
                               const ExperimentResult& result) {
  const RunConfig& rc = config.run;
  std::string s = std::string(algorithm_name(rc.algorithm)) + " " +
                  objective_name(config.problem.family) + " T=" +
                  std::to_string(rc.T) + " M=" + std::to_string(rc.M) +
                  " m=" + std::to_string(rc.m) + " seed=" +
                  std::to_string(rc.seed);
  if (!std::isnan(result.final_test_acc)) {
    s += " test_acc=" + short_real(result.final_test_acc);
  }
  if (!std::isnan(result.final_train_loss)) {
    s += " train_loss=" + short_real(result.final_train_loss);
  }
  if (!std::isnan(result.final_excess)) {
    s += " excess_loss=" + short_real(result.final_excess);
  }
  if (!std::isnan(result.rho_spent)) {
    s += " rho_spent=" + short_real(result.rho_spent) + " epsilon=" +
         short_real(result.epsilon) + " (delta=" + short_real(rc.delta) + ")";
  }
  s += " grad_evals=" + std::to_string(result.run.grad_evals);
  s += " wall=" + short_real(result.wall_seconds) + "s";
  return s;
}

std::string run_sweep(const ExperimentConfig& base,
                      const std::string& grid_text) {
  // Grid axes in file order.
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
  {
    std::istringstream in(grid_text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      std::string_view line = raw;
      if (const auto hash = line.find('#'); hash != std::string_view::npos) {
        line = line.substr(0, hash);
      }
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw std::invalid_argument("grid line " + std::to_string(line_no) +
                                    ": expected 'key = v1 v2 ...'");
      }
      const std::string key(trim(line.substr(0, eq)));
      if (key.empty()) {
        throw std::invalid_argument("grid line " + std::to_string(line_no) +
                                    ": empty key");
      }
      if (key == "out") {
        throw std::invalid_argument("grid line " + std::to_string(line_no) +
                                    ": 'out' is not sweepable");
      }
      for (const auto& axis : axes) {
        if (axis.first == key) {
          throw std::invalid_argument("grid line " + std::to_string(line_no) +
                                      ": duplicate key '" + key + "'");
        }
      }
      std::vector<std::string> values;
      std::string_view rest = line.substr(eq + 1);
      while (true) {
        rest = trim(rest);
        if (rest.empty()) break;
        auto ws = rest.find_first_of(" \t");
        if (ws == std::string_view::npos) ws = rest.size();
        values.emplace_back(rest.substr(0, ws));
        rest.remove_prefix(ws);
      }
      if (values.empty()) {
        throw std::invalid_argument("grid line " + std::to_string(line_no) +
                                    ": no values for key '" + key + "'");
      }
      axes.emplace_back(key, std::move(values));
    }
  }
  if (axes.empty()) {
    throw std::invalid_argument("empty sweep grid");
  }

  // The serialized base as an ordered key/value list; every valid key appears
  // exactly once, so overriding is a lookup and unknown grid keys surface
  // here.
  std::vector<std::pair<std::string, std::string>> base_kv;
  {
    std::istringstream in(serialize_experiment_config(base));
    std::string raw;
    while (std::getline(in, raw)) {
      const auto eq = raw.find('=');
      base_kv.emplace_back(std::string(trim(std::string_view(raw).substr(0, eq))),
                           std::string(trim(std::string_view(raw).substr(eq + 1))));
    }
  }
  for (const auto& axis : axes) {
    bool known = false;
    for (const auto& kv : base_kv) known = known || kv.first == axis.first;
    if (!known) {
      throw std::invalid_argument("sweep grid: unknown key '" + axis.first +
                                  "'");
    }
  }

  std::string out;
  for (const auto& axis : axes) {
    out += axis.first;
    out += ',';
  }
  out += "train_loss,test_acc,excess_loss,rho_spent_max,grad_evals\n";

  // Odometer over the Cartesian product, first axis slowest.
  std::vector<std::size_t> idx(axes.size(), 0);
  bool done = false;
  while (!done) {
    auto kv = base_kv;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      for (auto& pair : kv) {
        if (pair.first == axes[a].first) {
          pair.second = axes[a].second[idx[a]];
          break;
        }
      }
    }
    std::string text;
    for (const auto& pair : kv) {
      text += pair.first;
      text += " = ";
      text += pair.second;
      text += '\n';
    }
    ExperimentConfig cfg = parse_experiment_config(text);
    cfg.out_csv.clear();
    const ExperimentResult r = run_experiment(cfg);

    for (std::size_t a = 0; a < axes.size(); ++a) {
      out += axes[a].second[idx[a]];
      out += ',';
    }
    append_real(out, r.final_train_loss);
    out += ',';
    append_real(out, r.final_test_acc);
    out += ',';
    append_real(out, r.final_excess);
    out += ',';
    append_real(out, r.rho_spent);
    out += ',';
    out += std::to_string(r.run.grad_evals);
    out += '\n';

    std::size_t a = axes.size();
    done = true;
    while (a > 0) {
      --a;
      if (++idx[a] < axes[a].second.size()) {
        done = false;
        break;
      }
      idx[a] = 0;
    }
  }
  return out;
}

}  // namespace dpfed
