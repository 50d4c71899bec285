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

#ifndef DPFED_ENGINE_H_
#define DPFED_ENGINE_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "dpfed/metrics.h"
#include "dpfed/objectives.h"
#include "dpfed/privacy.h"
#include "dpfed/rng.h"
#include "dpfed/vec.h"

namespace dpfed {

enum class Algorithm {
  kMu2Partial,  // partial participation with per-machine noise cancellation
  kMu2Trusted,  // raw corrections; one fresh server-side noise draw per round
  kNoisySgd,    // one vanilla gradient per machine per round
  kMu2Delayed,  // local momenta updated with the delayed rule; non-private
};

const char* algorithm_name(Algorithm a);

struct RunConfig {
  Algorithm algorithm = Algorithm::kMu2Partial;
  int T = 100;
  int M = 1;
  int m = 1;
  double rho = 1.0;
  double delta = 1e-5;
  bool eta_auto = true;  // derived step size; explicit eta otherwise
  double eta = 0.0;
  std::uint64_t seed = 1;

  // false runs the exact algorithm with the noise identically zero
  // (verification mode). kMu2Delayed is non-private and never adds noise.
  bool noise_enabled = true;

  // Cap participation by data availability (the MNIST n=60000 reproduction
  // provisions n/M < T samples per machine). Machines whose remaining sample
  // count equals the number of remaining rounds are force-included, the rest
  // of the m slots are filled uniformly from machines with data; with the
  // zero-slack provision n = mT this consumes every sample exactly once. Off
  // by default, where each machine must hold at least T samples and sampling
  // is plain uniform.
  bool experiment_mode = false;

  bool record_trace = false;  // memory cost O(T * M * d); reduced scales only
  int eval_every = 0;         // 0 means ceil(T/50)
  bool timing = false;        // fill wall_ms (breaks byte determinism)
};

// Per-round record kept when record_trace is set. Per-participant vectors are
// aligned with `participants` (ascending machine id). Fields not produced by
// a variant stay empty: fresh_noise and retained_after are kMu2Partial with
// noise and kNoisySgd (noise only), server_noise is kMu2Trusted, and for
// kMu2Delayed raw_corrections holds the participants' local momenta.
struct RoundRecord {
  std::vector<int> participants;
  std::vector<int> sample_indices;
  std::vector<Vector> raw_corrections;  // s_{t,i} before noise
  std::vector<Vector> fresh_noise;      // y_{t,i}
  Vector server_noise;                  // the trusted server's Y_t
  std::vector<Vector> retained_after;   // Y_{t,i} for all M machines
  Vector q_tilde;                       // after the round's update
  Vector w;                             // w_{t+1}
  Vector x;                             // x_{t+1}
  Vector x_query;                       // the point this round's gradients saw
};

struct RunTrace {
  int T = 0, M = 0, m = 0;
  Vector x0;
  std::vector<RoundRecord> rounds;
};

struct RunResult {
  Vector output;  // x_T for mu2 variants, the final iterate for noisy-sgd
  long long grad_evals = 0;
  double max_correction_norm = 0.0;  // max over all ||s_{t,i}||
  double max_query_move = 0.0;       // max over alpha_{t-1} ||x_t - x_{t-1}||
  std::vector<MetricsRow> metrics;
  std::optional<BudgetLedger> ledger;  // absent for non-private runs
  std::optional<RunTrace> trace;
};

struct ServerState {
  Vector w;
  Vector x;
  Vector x_prev;
  Vector q_tilde;  // the accumulated estimate; raw q_t for the trusted variant
  int t = 0;       // completed rounds
  double eta = 0.0;
};

struct MachineState {
  int machine_id = 0;
  Vector retained_noise;  // Y_i, zero until the first noisy participation
  int n_participations = 0;
  std::vector<int> participation_rounds;
  MachineDataset dataset;

  // kMu2Delayed locals.
  Vector q_local;
  int last_round = 0;  // previous participation round, 0 if none
  Vector last_query;   // the x the machine saw then
};

struct RoundCorrection {
  Vector s;
  Vector s_tilde;
  Vector fresh_noise;
  int sample_index = -1;
};

// Uniformly random m-subset of {0..M-1}, ascending. Inclusion probability is
// m/M per machine and m(m-1)/(M(M-1)) per pair.
std::vector<int> sample_participants(int M, int m, RngStream& stream);

// Experiment-mode sampling: force-include machines with remaining ==
// rounds_left, fill uniformly from the rest with data. Throws
// std::runtime_error when infeasible (more forced machines than slots, or not
// enough machines with data).
std::vector<int> sample_participants_capped(int m, int rounds_left,
                                            std::span<const int> remaining,
                                            RngStream& stream);

// s = alpha_t grad f(x_t; z) - alpha_{t-1} grad f(x_{t-1}; z) on the machine's
// next unused sample; alpha_t = t, alpha_0 = 0. Always performs exactly two
// gradient evaluations (the t=1 factor is zero but the cost model is uniform).
// Throws std::runtime_error when the dataset is exhausted.
RoundCorrection storm_correction(const Problem& problem, MachineState& machine,
                                 const Vector& x_t, const Vector& x_prev,
                                 int t);

// s_tilde = s + y - Y_i with fresh y ~ N(0, I sigma_sq), then Y_i := y.
// Participation bookkeeping stays with the caller. Throws
// std::invalid_argument for nonpositive variance.
void privatize_correction(MachineState& machine, RoundCorrection& c,
                          double sigma_sq, RngStream& noise_stream);

// Aggregates exactly m corrections in the given (ascending machine id) order:
// q_tilde += mean, w = project(w - eta (q_tilde + step_noise)), x advances by
// the alpha_t = t weighted-average rule. step_noise, when non-null, perturbs
// only the step (trusted variant), leaving q_tilde raw.
void server_round(ServerState& server, std::span<const Vector> corrections,
                  int m, const Ball& k, const Vector* step_noise = nullptr);

// Optional held-out data for the metrics rows. `test` feeds test_acc
// (classifiers only); `train_probe` feeds train_loss as a mean over a fixed
// probe subset, so eval cost stays independent of the training-set size.
struct EvalData {
  const std::vector<Sample>* test = nullptr;
  const std::vector<Sample>* train_probe = nullptr;
};

// Runs T rounds and returns the algorithm's output point plus per-round
// metrics at the eval cadence. Datasets are consumed by the run (one fresh
// sample per participation). Each metrics row evaluates the point the run
// would output if stopped after that row's round; eps_err_sq (population
// oracle only) is ||u_t - alpha_t grad f(x_t)||^2 for the direction u_t the
// server actually stepped with (alpha_t = t for the momentum variants, 1 for
// noisy-sgd).
RunResult run_algorithm(const RunConfig& config, const Problem& problem,
                        std::vector<MachineDataset> datasets,
                        const EvalData& eval = {});

// Entry points that force the algorithm tag.
RunResult run_mu2_partial(RunConfig config, const Problem& problem,
                          std::vector<MachineDataset> datasets,
                          const EvalData& eval = {});
RunResult run_mu2_trusted(RunConfig config, const Problem& problem,
                          std::vector<MachineDataset> datasets,
                          const EvalData& eval = {});
RunResult run_noisy_sgd(RunConfig config, const Problem& problem,
                        std::vector<MachineDataset> datasets,
                        const EvalData& eval = {});
RunResult run_mu2_delayed(RunConfig config, const Problem& problem,
                          std::vector<MachineDataset> datasets,
                          const EvalData& eval = {});

// Fraction of eval_set classified correctly by x.
double classification_accuracy(const Problem& problem, const Vector& x,
                               const std::vector<Sample>& eval_set);

// Mean loss of x over the samples under machine 0's objective (intended for
// data-defined objectives, where the machine index is immaterial).
double mean_loss(const Problem& problem, const Vector& x,
                 const std::vector<Sample>& samples);

}  // namespace dpfed

#endif  // DPFED_ENGINE_H_
