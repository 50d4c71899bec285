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

#include <cstdint>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dpfed/config.h"
#include "dpfed/experiment.h"
#include "dpfed/verify.h"

namespace {

// The verification suite is a fixed set of reproducible statistical checks;
// its seed is pinned so that repeated invocations agree with each other and
// with the documented reports.
constexpr std::uint64_t kVerifySeed = 1;

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write file: " + path);
  }
  out << text;
  out.flush();
  if (!out) {
    throw std::runtime_error("failed writing file: " + path);
  }
}

int run_command(const std::string& config_path, const CLI::Option* seed_opt,
                std::uint64_t seed, const CLI::Option* out_opt,
                const std::string& out_path) {
  dpfed::ExperimentConfig cfg = dpfed::load_experiment_config(config_path);
  if (seed_opt->count() > 0) cfg.run.seed = seed;
  if (out_opt->count() > 0) cfg.out_csv = out_path;
  const dpfed::ExperimentResult result = dpfed::run_experiment(cfg);
  std::cout << dpfed::experiment_summary(cfg, result) << "\n";
  return 0;
}

int verify_command(const std::string& check_name, const std::string& out_path) {
  std::vector<dpfed::CheckReport> reports =
      check_name.empty() ? dpfed::run_all_checks(kVerifySeed)
                         : dpfed::run_check(check_name, kVerifySeed);
  std::string csv = std::string(dpfed::kCheckReportHeader) + "\n";
  bool all_pass = true;
  for (const auto& report : reports) {
    csv += dpfed::format_check_report(report);
    csv += '\n';
    all_pass = all_pass && report.pass;
  }
  std::cout << csv;
  if (!out_path.empty()) write_file(out_path, csv);
  std::cout << (all_pass ? "all checks passed\n" : "CHECK FAILURES above\n");
  return all_pass ? 0 : 1;
}

int sweep_command(const std::string& config_path,
                  const std::string& grid_path) {
  const dpfed::ExperimentConfig base =
      dpfed::load_experiment_config(config_path);
  const std::string grid = dpfed::read_text_file(grid_path);
  std::cout << dpfed::run_sweep(base, grid);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "dpfed: differentially private federated momentum-SGD simulator"};
  app.require_subcommand(1);

  std::string run_config;
  std::uint64_t run_seed = 0;
  std::string run_out;
  CLI::App* run = app.add_subcommand("run", "Run one experiment");
  run->add_option("--config", run_config, "experiment config file")
      ->required();
  CLI::Option* seed_opt =
      run->add_option("--seed", run_seed, "override the config's seed");
  CLI::Option* out_opt =
      run->add_option("--out", run_out, "override the metrics CSV path");

  std::string check_name;
  std::string verify_out;
  CLI::App* verify =
      app.add_subcommand("verify", "Run the empirical verification checks");
  verify->add_option("--check", check_name,
                     "a single registered check (default: all)");
  verify->add_option("--out", verify_out, "also write the report CSV here");

  std::string sweep_config;
  std::string sweep_grid;
  CLI::App* sweep =
      app.add_subcommand("sweep", "Run a config across a parameter grid");
  sweep->add_option("--config", sweep_config, "base experiment config file")
      ->required();
  sweep->add_option("--grid", sweep_grid, "grid file: `key = v1 v2 ...`")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return run_command(run_config, seed_opt, run_seed, out_opt, run_out);
    }
    if (verify->parsed()) {
      return verify_command(check_name, verify_out);
    }
    return sweep_command(sweep_config, sweep_grid);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
