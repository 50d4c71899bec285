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

#include "dpfed/config.h"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

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

[[noreturn]] void fail(int line_no, const std::string& message) {
  throw std::invalid_argument("config line " + std::to_string(line_no) + ": " +
                              message);
}

double parse_real(std::string_view key, std::string_view value, int line_no) {
  double out = 0.0;
  const char* first = value.data();
  const char* last = first + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) {
    fail(line_no, std::string(key) + ": expected a number, got '" +
                      std::string(value) + "'");
  }
  return out;
}

long long parse_integer(std::string_view key, std::string_view value,
                        int line_no) {
  long long out = 0;
  const char* first = value.data();
  const char* last = first + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) {
    fail(line_no, std::string(key) + ": expected an integer, got '" +
                      std::string(value) + "'");
  }
  return out;
}

int parse_int_min(std::string_view key, std::string_view value, int line_no,
                  long long min) {
  const long long v = parse_integer(key, value, line_no);
  if (v < min || v > 1000000000LL) {
    fail(line_no, std::string(key) + ": value " + std::string(value) +
                      " out of range [" + std::to_string(min) + ", 1e9]");
  }
  return static_cast<int>(v);
}

double parse_positive(std::string_view key, std::string_view value,
                      int line_no) {
  const double v = parse_real(key, value, line_no);
  if (!(v > 0.0)) {
    fail(line_no, std::string(key) + ": must be positive, got '" +
                      std::string(value) + "'");
  }
  return v;
}

double parse_nonnegative(std::string_view key, std::string_view value,
                         int line_no) {
  const double v = parse_real(key, value, line_no);
  if (!(v >= 0.0)) {
    fail(line_no, std::string(key) + ": must be nonnegative, got '" +
                      std::string(value) + "'");
  }
  return v;
}

bool parse_switch(std::string_view key, std::string_view value, int line_no) {
  if (value == "on") return true;
  if (value == "off") return false;
  fail(line_no, std::string(key) + ": expected on|off, got '" +
                    std::string(value) + "'");
}

std::uint64_t parse_seed(std::string_view value, int line_no) {
  std::uint64_t out = 0;
  const char* first = value.data();
  const char* last = first + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) {
    fail(line_no, "seed: expected an unsigned integer, got '" +
                      std::string(value) + "'");
  }
  return out;
}

void append_real(std::string& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  out.append(buf, ptr);
}

void emit(std::string& out, const char* key, const std::string& value) {
  out += key;
  out += " = ";
  out += value;
  out += '\n';
}

void emit_real(std::string& out, const char* key, double v) {
  std::string value;
  append_real(value, v);
  emit(out, key, value);
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text) {
  ExperimentConfig cfg;
  std::set<std::string, std::less<>> seen;
  std::istringstream in(text);
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
      fail(line_no, "expected 'key = value'");
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) fail(line_no, "empty key");
    if (!seen.insert(std::string(key)).second) {
      fail(line_no, "duplicate key '" + std::string(key) + "'");
    }

    if (key == "algorithm") {
      if (value == "mu2-partial") {
        cfg.run.algorithm = Algorithm::kMu2Partial;
      } else if (value == "mu2-trusted") {
        cfg.run.algorithm = Algorithm::kMu2Trusted;
      } else if (value == "noisy-sgd") {
        cfg.run.algorithm = Algorithm::kNoisySgd;
      } else if (value == "mu2-delayed") {
        cfg.run.algorithm = Algorithm::kMu2Delayed;
      } else {
        fail(line_no,
             "algorithm: expected mu2-partial|mu2-trusted|noisy-sgd|"
             "mu2-delayed, got '" +
                 std::string(value) + "'");
      }
    } else if (key == "objective") {
      if (value == "quadratic") {
        cfg.problem.family = ObjectiveFamily::kQuadratic;
      } else if (value == "mnist-logistic") {
        cfg.problem.family = ObjectiveFamily::kMnistLogistic;
      } else {
        fail(line_no, "objective: expected quadratic|mnist-logistic, got '" +
                          std::string(value) + "'");
      }
    } else if (key == "rounds") {
      cfg.run.T = parse_int_min(key, value, line_no, 1);
    } else if (key == "machines") {
      cfg.run.M = parse_int_min(key, value, line_no, 1);
    } else if (key == "participants") {
      cfg.run.m = parse_int_min(key, value, line_no, 1);
    } else if (key == "rho") {
      cfg.run.rho = parse_positive(key, value, line_no);
    } else if (key == "delta") {
      cfg.run.delta = parse_real(key, value, line_no);
      if (!(cfg.run.delta > 0.0 && cfg.run.delta < 1.0)) {
        fail(line_no, "delta: must lie in (0, 1)");
      }
    } else if (key == "eta") {
      if (value == "auto") {
        cfg.run.eta_auto = true;
        cfg.run.eta = 0.0;
      } else {
        cfg.run.eta_auto = false;
        cfg.run.eta = parse_positive(key, value, line_no);
      }
    } else if (key == "seed") {
      cfg.run.seed = parse_seed(value, line_no);
    } else if (key == "noise") {
      cfg.run.noise_enabled = parse_switch(key, value, line_no);
    } else if (key == "experiment_mode") {
      cfg.run.experiment_mode = parse_switch(key, value, line_no);
    } else if (key == "record_trace") {
      cfg.run.record_trace = parse_switch(key, value, line_no);
    } else if (key == "timing") {
      cfg.run.timing = parse_switch(key, value, line_no);
    } else if (key == "eval_every") {
      cfg.run.eval_every = parse_int_min(key, value, line_no, 0);
    } else if (key == "diameter") {
      cfg.problem.diameter = parse_positive(key, value, line_no);
    } else if (key == "dim") {
      cfg.problem.dim = parse_int_min(key, value, line_no, 1);
    } else if (key == "smoothness") {
      cfg.problem.L = parse_positive(key, value, line_no);
    } else if (key == "sigma") {
      cfg.problem.sigma = parse_nonnegative(key, value, line_no);
    } else if (key == "xi") {
      cfg.problem.xi = parse_nonnegative(key, value, line_no);
    } else if (key == "train_csv") {
      cfg.train_csv = std::string(value);
    } else if (key == "test_csv") {
      cfg.test_csv = std::string(value);
    } else if (key == "out") {
      cfg.out_csv = std::string(value);
    } else if (key == "per_machine") {
      cfg.per_machine = parse_int_min(key, value, line_no, 0);
    } else if (key == "train_probe") {
      cfg.train_probe = parse_int_min(key, value, line_no, 0);
    } else {
      fail(line_no, "unknown key '" + std::string(key) + "'");
    }
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open config file: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config(buf.str());
}

std::string serialize_experiment_config(const ExperimentConfig& config) {
  std::string out;
  emit(out, "algorithm", algorithm_name(config.run.algorithm));
  emit(out, "objective",
       config.problem.family == ObjectiveFamily::kQuadratic
           ? "quadratic"
           : "mnist-logistic");
  emit(out, "rounds", std::to_string(config.run.T));
  emit(out, "machines", std::to_string(config.run.M));
  emit(out, "participants", std::to_string(config.run.m));
  emit_real(out, "rho", config.run.rho);
  emit_real(out, "delta", config.run.delta);
  if (config.run.eta_auto) {
    emit(out, "eta", "auto");
  } else {
    emit_real(out, "eta", config.run.eta);
  }
  emit(out, "seed", std::to_string(config.run.seed));
  emit(out, "noise", config.run.noise_enabled ? "on" : "off");
  emit(out, "experiment_mode", config.run.experiment_mode ? "on" : "off");
  emit(out, "record_trace", config.run.record_trace ? "on" : "off");
  emit(out, "timing", config.run.timing ? "on" : "off");
  emit(out, "eval_every", std::to_string(config.run.eval_every));
  emit_real(out, "diameter", config.problem.diameter);
  emit(out, "dim", std::to_string(config.problem.dim));
  emit_real(out, "smoothness", config.problem.L);
  emit_real(out, "sigma", config.problem.sigma);
  emit_real(out, "xi", config.problem.xi);
  emit(out, "train_csv", config.train_csv);
  emit(out, "test_csv", config.test_csv);
  emit(out, "per_machine", std::to_string(config.per_machine));
  emit(out, "train_probe", std::to_string(config.train_probe));
  emit(out, "out", config.out_csv);
  return out;
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return a.run.algorithm == b.run.algorithm && a.run.T == b.run.T &&
         a.run.M == b.run.M && a.run.m == b.run.m && a.run.rho == b.run.rho &&
         a.run.delta == b.run.delta && a.run.eta_auto == b.run.eta_auto &&
         a.run.eta == b.run.eta && a.run.seed == b.run.seed &&
         a.run.noise_enabled == b.run.noise_enabled &&
         a.run.experiment_mode == b.run.experiment_mode &&
         a.run.record_trace == b.run.record_trace &&
         a.run.timing == b.run.timing &&
         a.run.eval_every == b.run.eval_every &&
         a.problem.family == b.problem.family &&
         a.problem.diameter == b.problem.diameter &&
         a.problem.num_classes == b.problem.num_classes &&
         a.problem.feature_dim == b.problem.feature_dim &&
         a.problem.dim == b.problem.dim && a.problem.L == b.problem.L &&
         a.problem.sigma == b.problem.sigma && a.problem.xi == b.problem.xi &&
         a.train_csv == b.train_csv && a.test_csv == b.test_csv &&
         a.per_machine == b.per_machine && a.train_probe == b.train_probe &&
         a.out_csv == b.out_csv;
}

}  // namespace dpfed
