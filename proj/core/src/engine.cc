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

#include "dpfed/engine.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>

namespace dpfed {

namespace {

// Completes round server.t + 1: w_{t+1} = Pi_K(w_t - eta (q_tilde + noise)),
// then the alpha_t = t anytime average x_{t+1} = (1 - frac) x_t + frac w_{t+1}
// with frac = alpha_{t+1} / sum_{s<=t+1} alpha_s = 2/(t+2).
void advance_server(ServerState& server, const Ball& k,
                    const Vector* step_noise) {
  const int t = server.t + 1;
  const std::size_t d = server.w.size();
  Vector w_next(d);
  if (step_noise == nullptr) {
    for (std::size_t j = 0; j < d; ++j) {
      w_next[j] = server.w[j] - server.eta * server.q_tilde[j];
    }
  } else {
    if (step_noise->size() != d) {
      throw std::invalid_argument("advance_server: step noise dim mismatch");
    }
    for (std::size_t j = 0; j < d; ++j) {
      w_next[j] = server.w[j] -
                  server.eta * (server.q_tilde[j] + (*step_noise)[j]);
    }
  }
  w_next = project(w_next, k);
  const double frac = 2.0 / static_cast<double>(t + 2);
  server.x_prev = server.x;
  for (std::size_t j = 0; j < d; ++j) {
    server.x[j] = (1.0 - frac) * server.x[j] + frac * w_next[j];
  }
  server.w = std::move(w_next);
  server.t = t;
}

}  // namespace

const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::kMu2Partial:
      return "mu2-partial";
    case Algorithm::kMu2Trusted:
      return "mu2-trusted";
    case Algorithm::kNoisySgd:
      return "noisy-sgd";
    case Algorithm::kMu2Delayed:
      return "mu2-delayed";
  }
  throw std::invalid_argument("algorithm_name: unknown algorithm");
}

std::vector<int> sample_participants(int M, int m, RngStream& stream) {
  if (m < 1 || m > M) {
    throw std::invalid_argument("sample_participants: need 1 <= m <= M");
  }
  std::vector<int> idx(M);
  std::iota(idx.begin(), idx.end(), 0);
  for (int j = 0; j < m; ++j) {
    const std::uint64_t r =
        static_cast<std::uint64_t>(j) +
        stream.next_below(static_cast<std::uint64_t>(M - j));
    std::swap(idx[j], idx[static_cast<std::size_t>(r)]);
  }
  idx.resize(m);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<int> sample_participants_capped(int m, int rounds_left,
                                            std::span<const int> remaining,
                                            RngStream& stream) {
  const int M = static_cast<int>(remaining.size());
  if (m < 1 || m > M) {
    throw std::invalid_argument(
        "sample_participants_capped: need 1 <= m <= M");
  }
  if (rounds_left < 1) {
    throw std::invalid_argument("sample_participants_capped: rounds_left < 1");
  }
  std::vector<int> chosen;
  std::vector<int> pool;
  for (int i = 0; i < M; ++i) {
    if (remaining[i] >= rounds_left) {
      chosen.push_back(i);
    } else if (remaining[i] > 0) {
      pool.push_back(i);
    }
  }
  if (static_cast<int>(chosen.size()) > m) {
    throw std::runtime_error(
        "participation cap infeasible: " + std::to_string(chosen.size()) +
        " machines must join every remaining round, only " +
        std::to_string(m) + " slots");
  }
  const int fill = m - static_cast<int>(chosen.size());
  if (static_cast<int>(pool.size()) < fill) {
    throw std::runtime_error("data exhausted: " + std::to_string(fill) +
                             " open slots but only " +
                             std::to_string(pool.size()) +
                             " machines still hold samples");
  }
  for (int j = 0; j < fill; ++j) {
    const std::uint64_t r =
        static_cast<std::uint64_t>(j) +
        stream.next_below(pool.size() - static_cast<std::uint64_t>(j));
    std::swap(pool[j], pool[static_cast<std::size_t>(r)]);
  }
  chosen.insert(chosen.end(), pool.begin(), pool.begin() + fill);
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

RoundCorrection storm_correction(const Problem& problem, MachineState& machine,
                                 const Vector& x_t, const Vector& x_prev,
                                 int t) {
  if (t < 1) throw std::invalid_argument("storm_correction: t < 1");
  RoundCorrection c;
  c.sample_index = machine.dataset.cursor;
  const Sample& z = machine.dataset.next();
  c.s = problem.gradient(machine.machine_id, x_t, z);
  scale(c.s, static_cast<double>(t));
  const Vector g_prev = problem.gradient(machine.machine_id, x_prev, z);
  axpy(-static_cast<double>(t - 1), g_prev, c.s);
  return c;
}

void privatize_correction(MachineState& machine, RoundCorrection& c,
                          double sigma_sq, RngStream& noise_stream) {
  if (!(sigma_sq > 0.0)) {
    throw std::invalid_argument("privatize_correction: variance must be > 0");
  }
  const std::size_t d = c.s.size();
  if (machine.retained_noise.empty()) {
    machine.retained_noise.assign(d, 0.0);
  } else if (machine.retained_noise.size() != d) {
    throw std::invalid_argument("privatize_correction: dim mismatch");
  }
  c.fresh_noise.resize(d);
  noise_stream.fill_gaussian(c.fresh_noise, std::sqrt(sigma_sq));
  c.s_tilde.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    c.s_tilde[j] = c.s[j] + c.fresh_noise[j] - machine.retained_noise[j];
  }
  machine.retained_noise = c.fresh_noise;
}

void server_round(ServerState& server, std::span<const Vector> corrections,
                  int m, const Ball& k, const Vector* step_noise) {
  if (m < 1 || static_cast<int>(corrections.size()) != m) {
    throw std::invalid_argument("server_round: expected exactly m corrections");
  }
  const std::size_t d = server.q_tilde.size();
  Vector sum(d, 0.0);
  for (const Vector& s : corrections) {
    if (s.size() != d) {
      throw std::invalid_argument("server_round: correction dim mismatch");
    }
    axpy(1.0, s, sum);
  }
  for (std::size_t j = 0; j < d; ++j) {
    server.q_tilde[j] += sum[j] / static_cast<double>(m);
  }
  advance_server(server, k, step_noise);
}

double classification_accuracy(const Problem& problem, const Vector& x,
                               const std::vector<Sample>& eval_set) {
  if (problem.num_classes() <= 0) {
    throw std::invalid_argument("classification_accuracy: not a classifier");
  }
  if (eval_set.empty()) {
    throw std::invalid_argument("classification_accuracy: empty eval set");
  }
  long long hits = 0;
  for (const Sample& z : eval_set) {
    hits += problem.predict(x, z) == z.label ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(eval_set.size());
}

double mean_loss(const Problem& problem, const Vector& x,
                 const std::vector<Sample>& samples) {
  if (samples.empty()) {
    throw std::invalid_argument("mean_loss: empty sample set");
  }
  double acc = 0.0;
  for (const Sample& z : samples) acc += problem.loss(0, x, z);
  return acc / static_cast<double>(samples.size());
}

RunResult run_algorithm(const RunConfig& config, const Problem& problem,
                        std::vector<MachineDataset> datasets,
                        const EvalData& eval) {
  const int T = config.T;
  const int M = config.M;
  const int m = config.m;
  if (T < 1) throw std::invalid_argument("run: T must be >= 1");
  if (M < 1 || m < 1 || m > M) {
    throw std::invalid_argument("run: need 1 <= m <= M");
  }
  if (static_cast<int>(datasets.size()) != M) {
    throw std::invalid_argument("run: expected one dataset per machine");
  }
  const int d = problem.dim();
  const Ball& k = problem.feasible_set();
  const ObjectiveConstants& c = problem.constants();

  const bool delayed = config.algorithm == Algorithm::kMu2Delayed;
  const bool baseline = config.algorithm == Algorithm::kNoisySgd;
  // The delayed variant is the non-private reference: it never adds noise.
  const bool noisy = config.noise_enabled && !delayed;
  if (noisy && !(config.rho > 0.0)) {
    throw std::invalid_argument("run: rho must be positive with noise on");
  }

  long long total_samples = 0;
  int min_samples = datasets.empty() ? 0 : datasets[0].remaining();
  for (const MachineDataset& ds : datasets) {
    total_samples += ds.remaining();
    min_samples = std::min(min_samples, ds.remaining());
  }
  if (config.experiment_mode) {
    if (total_samples < static_cast<long long>(m) * T) {
      throw std::invalid_argument(
          "run: experiment mode needs at least m*T samples overall");
    }
  } else if (min_samples < T) {
    throw std::invalid_argument(
        "run: every machine needs at least T samples "
        "(or enable experiment mode)");
  }

  NoiseSchedule schedule = NoiseSchedule::off();
  if (noisy) {
    switch (config.algorithm) {
      case Algorithm::kMu2Partial:
        schedule = NoiseSchedule::untrusted(c.S, T, config.rho);
        break;
      case Algorithm::kMu2Trusted:
        schedule = NoiseSchedule::trusted(c.S, T, config.rho, m);
        break;
      case Algorithm::kNoisySgd:
        schedule = NoiseSchedule::baseline(c.G, config.rho);
        break;
      case Algorithm::kMu2Delayed:
        break;
    }
  }

  ServerState server;
  Vector x0 = k.center.empty() ? Vector(static_cast<std::size_t>(d), 0.0)
                               : k.center;
  if (static_cast<int>(x0.size()) != d) {
    throw std::invalid_argument("run: feasible-set dimension mismatch");
  }
  server.w = x0;
  server.x = x0;
  server.x_prev = x0;
  server.q_tilde.assign(static_cast<std::size_t>(d), 0.0);

  if (!config.eta_auto) {
    if (!(config.eta > 0.0)) {
      throw std::invalid_argument("run: explicit eta must be positive");
    }
    server.eta = config.eta;
  } else {
    switch (config.algorithm) {
      case Algorithm::kMu2Partial:
        server.eta = noisy ? step_size_untrusted(c, T, m, M, d, config.rho)
                           : 1.0 / (8.0 * c.L * static_cast<double>(T));
        break;
      case Algorithm::kMu2Trusted:
        server.eta = noisy ? step_size_trusted(c, T, m, d, config.rho)
                           : 1.0 / (4.0 * c.L * static_cast<double>(T));
        break;
      case Algorithm::kMu2Delayed:
        server.eta = 1.0 / (8.0 * c.L * static_cast<double>(T));
        break;
      case Algorithm::kNoisySgd: {
        // The analysis does not pin this one; use the projected-SGD rate
        // D/(Ghat sqrt(T)) where Ghat^2 inflates G^2 by the even-split
        // noise power.
        double ghat_sq = c.G * c.G;
        if (noisy) {
          ghat_sq *= 1.0 + 2.0 * static_cast<double>(d) *
                               (1.0 + std::log(static_cast<double>(T))) *
                               static_cast<double>(T) /
                               (config.rho * config.rho *
                                static_cast<double>(M));
        }
        server.eta = c.D / (std::sqrt(ghat_sq) *
                            std::sqrt(static_cast<double>(T)));
        break;
      }
    }
    if (!(server.eta > 0.0) || !std::isfinite(server.eta)) {
      throw std::invalid_argument("run: auto step size needs L, G, D > 0");
    }
  }

  std::vector<MachineState> machines(static_cast<std::size_t>(M));
  std::vector<int> sample_budget(static_cast<std::size_t>(M), 0);
  for (int i = 0; i < M; ++i) {
    machines[i].machine_id = i;
    machines[i].dataset = std::move(datasets[i]);
    machines[i].last_query = x0;
    sample_budget[i] = machines[i].dataset.remaining();
  }

  RngStream server_stream(config.seed, StreamPurpose::kServer);
  std::vector<RngStream> noise_streams;
  std::optional<RngStream> trusted_stream;
  if (noisy) {
    if (config.algorithm == Algorithm::kMu2Trusted) {
      trusted_stream.emplace(config.seed, StreamPurpose::kNoise,
                             static_cast<std::uint64_t>(M));
    } else {
      noise_streams.reserve(static_cast<std::size_t>(M));
      for (int i = 0; i < M; ++i) {
        noise_streams.emplace_back(config.seed, StreamPurpose::kNoise,
                                   static_cast<std::uint64_t>(i));
      }
    }
  }

  RunResult result;
  if (noisy) result.ledger.emplace(M, schedule.sensitivity());
  if (config.record_trace) {
    result.trace.emplace();
    result.trace->T = T;
    result.trace->M = M;
    result.trace->m = m;
    result.trace->x0 = x0;
    result.trace->rounds.reserve(static_cast<std::size_t>(T));
  }

  const int eval_every =
      config.eval_every > 0 ? config.eval_every : (T + 49) / 50;
  // Sure bounds (never probabilistic): ||s_{t,i}|| <= G + 2LD = S via
  // alpha_{t-1} ||x_t - x_{t-1}|| <= 2D, and ||g|| <= G for noisy-sgd.
  // A violation means the implementation broke the privacy analysis.
  const double s_bound = c.S * (1.0 + 1e-9);
  const double g_bound = c.G * (1.0 + 1e-9);
  const double move_bound = 2.0 * c.D * (1.0 + 1e-9);
  const double trusted_var = noisy && trusted_stream ? schedule.variance(1)
                                                     : 0.0;

  std::vector<int> remaining(static_cast<std::size_t>(M), 0);
  const auto wall_start = std::chrono::steady_clock::now();

  for (int t = 1; t <= T; ++t) {
    std::vector<int> participants;
    if (config.experiment_mode) {
      for (int i = 0; i < M; ++i) remaining[i] = machines[i].dataset.remaining();
      participants =
          sample_participants_capped(m, T - t + 1, remaining, server_stream);
    } else {
      participants = sample_participants(M, m, server_stream);
    }

    RoundRecord rec;
    if (result.trace) rec.participants = participants;
    // The point this round's gradients (and eps_err_sq) are taken at: x_t for
    // the momentum variants, the current iterate w_t for noisy-sgd.
    const Vector round_query = baseline ? server.w : server.x;
    Vector step_used;  // the direction u_t the server steps with

    if (baseline) {
      Vector gsum(static_cast<std::size_t>(d), 0.0);
      for (int i : participants) {
        MachineState& mach = machines[static_cast<std::size_t>(i)];
        const int sample_index = mach.dataset.cursor;
        const Sample& z = mach.dataset.next();
        Vector g = problem.gradient(i, round_query, z);
        result.grad_evals += 1;
        const double gn = l2_norm(g);
        result.max_correction_norm = std::max(result.max_correction_norm, gn);
        if (gn > g_bound) {
          throw std::runtime_error("run: gradient norm exceeded its bound G");
        }
        mach.n_participations += 1;
        mach.participation_rounds.push_back(t);
        Vector release = g;
        if (noisy) {
          const double sigma_sq = schedule.variance(sample_budget[i]);
          Vector y(static_cast<std::size_t>(d));
          noise_streams[static_cast<std::size_t>(i)].fill_gaussian(
              y, std::sqrt(sigma_sq));
          for (int j = 0; j < d; ++j) release[j] += y[j];
          result.ledger->add(i, sigma_sq);
          if (result.trace) rec.fresh_noise.push_back(std::move(y));
        }
        if (result.trace) {
          rec.sample_indices.push_back(sample_index);
          rec.raw_corrections.push_back(std::move(g));
        }
        axpy(1.0, release, gsum);
      }
      Vector w_next(static_cast<std::size_t>(d));
      step_used.resize(static_cast<std::size_t>(d));
      for (int j = 0; j < d; ++j) {
        step_used[j] = gsum[j] / static_cast<double>(m);
        w_next[j] = server.w[j] - server.eta * step_used[j];
      }
      w_next = project(w_next, k);
      server.x_prev = server.x;
      server.x = w_next;
      server.w = std::move(w_next);
      server.t = t;
    } else if (!delayed) {
      std::vector<Vector> outgoing;
      outgoing.reserve(static_cast<std::size_t>(m));
      for (int i : participants) {
        MachineState& mach = machines[static_cast<std::size_t>(i)];
        RoundCorrection cor =
            storm_correction(problem, mach, server.x, server.x_prev, t);
        result.grad_evals += 2;
        const double sn = l2_norm(cor.s);
        result.max_correction_norm = std::max(result.max_correction_norm, sn);
        if (sn > s_bound) {
          throw std::runtime_error(
              "run: correction norm exceeded the sensitivity bound S");
        }
        mach.n_participations += 1;
        mach.participation_rounds.push_back(t);
        if (noisy && config.algorithm == Algorithm::kMu2Partial) {
          const double sigma_sq = schedule.variance(mach.n_participations);
          privatize_correction(mach, cor, sigma_sq,
                               noise_streams[static_cast<std::size_t>(i)]);
          result.ledger->add(i, sigma_sq);
        } else {
          cor.s_tilde = cor.s;
        }
        if (result.trace) {
          rec.sample_indices.push_back(cor.sample_index);
          rec.raw_corrections.push_back(std::move(cor.s));
          if (!cor.fresh_noise.empty()) {
            rec.fresh_noise.push_back(std::move(cor.fresh_noise));
          }
        }
        outgoing.push_back(std::move(cor.s_tilde));
      }
      if (noisy && config.algorithm == Algorithm::kMu2Trusted) {
        Vector y(static_cast<std::size_t>(d));
        trusted_stream->fill_gaussian(y, std::sqrt(trusted_var));
        // One release per round covers every machine at sensitivity 2S/m.
        for (int i = 0; i < M; ++i) result.ledger->add(i, trusted_var);
        if (result.trace) rec.server_noise = y;
        server_round(server, outgoing, m, k, &y);
        step_used = add(server.q_tilde, y);
      } else {
        server_round(server, outgoing, m, k, nullptr);
        step_used = server.q_tilde;
      }
    } else {
      std::vector<Vector> outgoing;
      outgoing.reserve(static_cast<std::size_t>(m));
      for (int i : participants) {
        MachineState& mach = machines[static_cast<std::size_t>(i)];
        const int sample_index = mach.dataset.cursor;
        const Sample& z = mach.dataset.next();
        const Vector g_now = problem.gradient(i, server.x, z);
        // The stale gradient re-queries the machine's previous point with its
        // old weight alpha_{t - tau} = last_round (0 on first participation).
        const Vector g_old = problem.gradient(i, mach.last_query, z);
        result.grad_evals += 2;
        if (mach.q_local.empty()) {
          mach.q_local.assign(static_cast<std::size_t>(d), 0.0);
        }
        axpy(static_cast<double>(t), g_now, mach.q_local);
        axpy(-static_cast<double>(mach.last_round), g_old, mach.q_local);
        mach.last_round = t;
        mach.last_query = server.x;
        mach.n_participations += 1;
        mach.participation_rounds.push_back(t);
        if (result.trace) {
          rec.sample_indices.push_back(sample_index);
          rec.raw_corrections.push_back(mach.q_local);
        }
        outgoing.push_back(mach.q_local);
      }
      // The server's estimate is replaced, not accumulated: the participants'
      // local momenta already carry the full alpha-weighted history.
      Vector sum(static_cast<std::size_t>(d), 0.0);
      for (const Vector& q : outgoing) axpy(1.0, q, sum);
      for (int j = 0; j < d; ++j) {
        server.q_tilde[j] = sum[j] / static_cast<double>(m);
      }
      advance_server(server, k, nullptr);
      step_used = server.q_tilde;
    }

    if (!baseline) {
      // x_prev now holds x_t and x holds x_{t+1}; round t+1's correction is
      // bounded by S exactly because alpha_t ||x_{t+1} - x_t|| <= 2D.
      const double move =
          static_cast<double>(t) * l2_dist(server.x, server.x_prev);
      result.max_query_move = std::max(result.max_query_move, move);
      if (move > move_bound) {
        throw std::runtime_error("run: query movement exceeded its bound 2D");
      }
    }

    if (result.trace) {
      if (noisy && config.algorithm == Algorithm::kMu2Partial) {
        rec.retained_after.reserve(static_cast<std::size_t>(M));
        for (int i = 0; i < M; ++i) {
          const Vector& y = machines[static_cast<std::size_t>(i)].retained_noise;
          rec.retained_after.push_back(
              y.empty() ? Vector(static_cast<std::size_t>(d), 0.0) : y);
        }
      }
      rec.q_tilde = server.q_tilde;
      rec.w = server.w;
      rec.x = server.x;
      rec.x_query = round_query;
      result.trace->rounds.push_back(std::move(rec));
    }

    if (t % eval_every == 0 || t == T) {
      // The anytime output: x_t (this round's query) for momentum variants,
      // w_{t+1} for noisy-sgd.
      const Vector& point = baseline ? server.w : server.x_prev;
      MetricsRow row;
      row.round = t;
      if (eval.train_probe != nullptr && !eval.train_probe->empty()) {
        row.train_loss = mean_loss(problem, point, *eval.train_probe);
      }
      if (eval.test != nullptr && !eval.test->empty() &&
          problem.num_classes() > 0) {
        row.test_acc = classification_accuracy(problem, point, *eval.test);
      }
      if (problem.has_population_oracle()) {
        row.excess_loss = problem.excess_loss(point);
        const Vector grad = problem.mean_gradient(round_query);
        const double alpha = baseline ? 1.0 : static_cast<double>(t);
        double err = 0.0;
        for (int j = 0; j < d; ++j) {
          const double e = step_used[j] - alpha * grad[j];
          err += e * e;
        }
        row.eps_err_sq = err;
      }
      if (result.ledger) row.rho_spent_max = result.ledger->max_spent();
      row.grad_evals = result.grad_evals;
      if (config.timing) {
        row.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - wall_start)
                          .count();
      }
      result.metrics.push_back(row);
    }
  }

  result.output = baseline ? server.w : server.x_prev;
  return result;
}

RunResult run_mu2_partial(RunConfig config, const Problem& problem,
                          std::vector<MachineDataset> datasets,
                          const EvalData& eval) {
  config.algorithm = Algorithm::kMu2Partial;
  return run_algorithm(config, problem, std::move(datasets), eval);
}

RunResult run_mu2_trusted(RunConfig config, const Problem& problem,
                          std::vector<MachineDataset> datasets,
                          const EvalData& eval) {
  config.algorithm = Algorithm::kMu2Trusted;
  return run_algorithm(config, problem, std::move(datasets), eval);
}

RunResult run_noisy_sgd(RunConfig config, const Problem& problem,
                        std::vector<MachineDataset> datasets,
                        const EvalData& eval) {
  config.algorithm = Algorithm::kNoisySgd;
  return run_algorithm(config, problem, std::move(datasets), eval);
}

RunResult run_mu2_delayed(RunConfig config, const Problem& problem,
                          std::vector<MachineDataset> datasets,
                          const EvalData& eval) {
  config.algorithm = Algorithm::kMu2Delayed;
  return run_algorithm(config, problem, std::move(datasets), eval);
}

}  // namespace dpfed
