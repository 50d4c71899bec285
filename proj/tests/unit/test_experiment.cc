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

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "dpfed/config.h"
#include "dpfed/experiment.h"
#include "dpfed/metrics.h"
#include "oracles.h"

namespace {

using dpfed::ExperimentConfig;
using dpfed::ExperimentResult;
using dpfed::testing::TempFile;

std::string quadratic_text() {
  return
      "algorithm = mu2-partial\n"
      "objective = quadratic\n"
      "rounds = 20\n"
      "machines = 4\n"
      "participants = 2\n"
      "rho = 2\n"
      "eta = 1e-4\n"
      "seed = 5\n"
      "dim = 8\n"
      "smoothness = 10\n"
      "sigma = 0.1\n"
      "xi = 0.05\n"
      "eval_every = 5\n";
}

// Ten classes, 784 features plus bias: the one-hot column of the label.
std::string synthetic_mnist_csv(int rows) {
  std::string out;
  for (int r = 0; r < rows; ++r) {
    int label = r % 10;
    out += std::to_string(label);
    for (int j = 0; j < 784; ++j) {
      out += (j == label * 7) ? ",1" : ",0";
    }
    out += '\n';
  }
  return out;
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

TEST_CASE("quadratic experiment end to end") {
  ExperimentConfig config = dpfed::parse_experiment_config(quadratic_text());
  ExperimentResult result = dpfed::run_experiment(config);

  // 20 rounds at cadence 5 plus the final round (already on cadence).
  CHECK(count_lines(result.metrics_csv) == 1 + 4);
  CHECK(result.metrics_csv.rfind("round,train_loss", 0) == 0);
  CHECK(!std::isnan(result.final_excess));
  CHECK(result.final_excess >= 0.0);
  CHECK(std::isnan(result.final_test_acc));
  CHECK(std::isnan(result.final_train_loss));
  CHECK(result.run.grad_evals == 2LL * 2 * 20);
  CHECK(result.rho_spent <= 2.0 * (1.0 + 1e-12));
  CHECK(result.epsilon == dpfed::zcdp_to_dp(result.rho_spent, 1e-5));

  // Byte determinism across reruns.
  ExperimentResult again = dpfed::run_experiment(config);
  CHECK(again.metrics_csv == result.metrics_csv);

  // A different seed changes the bytes.
  ExperimentConfig other = config;
  other.run.seed = 6;
  CHECK(dpfed::run_experiment(other).metrics_csv != result.metrics_csv);
}

TEST_CASE("metrics file matches the returned bytes") {
  TempFile out_file;
  ExperimentConfig config = dpfed::parse_experiment_config(quadratic_text());
  config.out_csv = out_file.path();
  ExperimentResult result = dpfed::run_experiment(config);
  CHECK(out_file.read() == result.metrics_csv);
}

TEST_CASE("experiment summary mentions the headline numbers") {
  ExperimentConfig config = dpfed::parse_experiment_config(quadratic_text());
  ExperimentResult result = dpfed::run_experiment(config);
  std::string line = dpfed::experiment_summary(config, result);
  CHECK(line.find("mu2-partial") != std::string::npos);
  CHECK(line.find("quadratic") != std::string::npos);
  CHECK(line.find("excess_loss=") != std::string::npos);
  CHECK(line.find("rho_spent=") != std::string::npos);
  CHECK(line.find("grad_evals=") != std::string::npos);
}

TEST_CASE("quadratic configs reject dataset plumbing") {
  ExperimentConfig config = dpfed::parse_experiment_config(quadratic_text());
  config.train_csv = "some.csv";
  CHECK_THROWS_AS(dpfed::run_experiment(config), std::invalid_argument);
  config.train_csv.clear();
  config.train_probe = 5;
  CHECK_THROWS_AS(dpfed::run_experiment(config), std::invalid_argument);
}

TEST_CASE("logistic experiment end to end") {
  TempFile train(synthetic_mnist_csv(40));
  TempFile test(synthetic_mnist_csv(20));
  std::ostringstream cfg;
  cfg << "algorithm = mu2-partial\n"
         "objective = mnist-logistic\n"
         "rounds = 5\n"
         "machines = 4\n"
         "participants = 2\n"
         "rho = 8\n"
         "eta = auto\n"
         "seed = 3\n"
         "eval_every = 2\n"
         "train_probe = 8\n"
      << "train_csv = " << train.path() << "\n"
      << "test_csv = " << test.path() << "\n";
  ExperimentConfig config = dpfed::parse_experiment_config(cfg.str());
  ExperimentResult result = dpfed::run_experiment(config);

  // Rounds 2 and 4 plus the forced final round 5.
  CHECK(count_lines(result.metrics_csv) == 1 + 3);
  CHECK(!std::isnan(result.final_train_loss));
  CHECK(result.final_train_loss > 0.0);
  CHECK(!std::isnan(result.final_test_acc));
  CHECK(result.final_test_acc >= 0.0);
  CHECK(result.final_test_acc <= 1.0);
  CHECK(std::isnan(result.final_excess));  // no population oracle
  CHECK(result.run.grad_evals == 2LL * 2 * 5);
  CHECK(result.rho_spent <= 8.0 * (1.0 + 1e-12));

  ExperimentResult again = dpfed::run_experiment(config);
  CHECK(again.metrics_csv == result.metrics_csv);

  // The baseline pays one evaluation per participation.
  ExperimentConfig sgd = config;
  sgd.run.algorithm = dpfed::Algorithm::kNoisySgd;
  CHECK(dpfed::run_experiment(sgd).run.grad_evals == 1LL * 2 * 5);
}

TEST_CASE("logistic label range is validated") {
  // One bad row: label 12 with 784 zero features.
  std::string bad_row = "12";
  for (int j = 0; j < 784; ++j) bad_row += ",0";
  TempFile train2(synthetic_mnist_csv(30) + bad_row + "\n");
  std::ostringstream cfg;
  cfg << "objective = mnist-logistic\nrounds = 3\nmachines = 2\n"
         "participants = 1\nnoise = off\neta = 0.01\n"
      << "train_csv = " << train2.path() << "\n";
  ExperimentConfig config = dpfed::parse_experiment_config(cfg.str());
  CHECK_THROWS_AS(dpfed::run_experiment(config), std::runtime_error);
}

TEST_CASE("probe larger than the training set is rejected") {
  TempFile train(synthetic_mnist_csv(20));
  std::ostringstream cfg;
  cfg << "objective = mnist-logistic\nrounds = 3\nmachines = 2\n"
         "participants = 1\nnoise = off\neta = 0.01\ntrain_probe = 21\n"
      << "train_csv = " << train.path() << "\n";
  ExperimentConfig config = dpfed::parse_experiment_config(cfg.str());
  CHECK_THROWS_AS(dpfed::run_experiment(config), std::runtime_error);
}

TEST_CASE("sweep runs the cartesian product in grid order") {
  ExperimentConfig base = dpfed::parse_experiment_config(quadratic_text());
  std::string csv =
      dpfed::run_sweep(base, "participants = 1 2\nseed = 5 6\n");
  std::istringstream in(csv);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line ==
        "participants,seed,train_loss,test_acc,excess_loss,rho_spent_max,"
        "grad_evals");
  std::vector<std::string> rows;
  while (std::getline(in, line)) rows.push_back(line);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].rfind("1,5,", 0) == 0);
  CHECK(rows[1].rfind("1,6,", 0) == 0);
  CHECK(rows[2].rfind("2,5,", 0) == 0);
  CHECK(rows[3].rfind("2,6,", 0) == 0);
  // Synthetic runs leave the classifier columns empty: "m,seed,,,excess,...".
  CHECK(rows[0].find(",,,") != std::string::npos);

  // Same base and grid, same bytes.
  CHECK(dpfed::run_sweep(base, "participants = 1 2\nseed = 5 6\n") == csv);
}

TEST_CASE("sweep grid validation") {
  ExperimentConfig base = dpfed::parse_experiment_config(quadratic_text());
  CHECK_THROWS_AS(dpfed::run_sweep(base, ""), std::invalid_argument);
  CHECK_THROWS_AS(dpfed::run_sweep(base, "nonsense = 1\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(dpfed::run_sweep(base, "out = a.csv b.csv\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(dpfed::run_sweep(base, "seed = \n"), std::invalid_argument);
  CHECK_THROWS_AS(dpfed::run_sweep(base, "seed = 1\nseed = 2\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(dpfed::run_sweep(base, "rounds: 1 2\n"),
                  std::invalid_argument);
  // Values must survive the full config validation.
  CHECK_THROWS_AS(dpfed::run_sweep(base, "rho = 1 0\n"),
                  std::invalid_argument);
}

TEST_CASE("read_text_file round trips") {
  TempFile file("line one\nline two\n");
  CHECK(dpfed::read_text_file(file.path()) == "line one\nline two\n");
  CHECK_THROWS_AS(dpfed::read_text_file("/no/such/file.txt"),
                  std::runtime_error);
}

}  // namespace
