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

#include "oracles.h"

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "dpfed/rng.h"

namespace dpfed::testing {
namespace {

Vector ref_project(const Vector& v, const Ball& k) {
  double sq = 0.0;
  if (k.center.empty()) {
    for (double c : v) sq += c * c;
  } else {
    for (std::size_t j = 0; j < v.size(); ++j) {
      const double dlt = v[j] - k.center[j];
      sq += dlt * dlt;
    }
  }
  const double dist = std::sqrt(sq);
  if (dist <= k.radius) return v;
  const double f = k.radius / dist;
  Vector r(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) {
    r[j] = k.center.empty() ? v[j] * f : k.center[j] + (v[j] - k.center[j]) * f;
  }
  return r;
}

// Uniform m-subset of 0..M-1: partial Fisher-Yates, keep the first m, sort.
std::vector<int> ref_sample(int M, int m, RngStream& stream) {
  std::vector<int> idx(static_cast<std::size_t>(M));
  for (int i = 0; i < M; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (int j = 0; j < m; ++j) {
    const auto r = static_cast<std::size_t>(j) +
                   stream.next_below(static_cast<std::uint64_t>(M - j));
    std::swap(idx[static_cast<std::size_t>(j)], idx[r]);
  }
  idx.resize(static_cast<std::size_t>(m));
  std::sort(idx.begin(), idx.end());
  return idx;
}

// Data-capped sampler: machines that must appear in every remaining round are
// forced in; the rest of the slots are a uniform draw from machines with data.
std::vector<int> ref_sample_capped(int m, int rounds_left,
                                   const std::vector<int>& remaining,
                                   RngStream& stream) {
  std::vector<int> chosen;
  std::vector<int> pool;
  for (int i = 0; i < static_cast<int>(remaining.size()); ++i) {
    if (remaining[static_cast<std::size_t>(i)] >= rounds_left) {
      chosen.push_back(i);
    } else if (remaining[static_cast<std::size_t>(i)] > 0) {
      pool.push_back(i);
    }
  }
  if (static_cast<int>(chosen.size()) > m) {
    throw std::runtime_error("reference: participation cap infeasible");
  }
  const int fill = m - static_cast<int>(chosen.size());
  if (static_cast<int>(pool.size()) < fill) {
    throw std::runtime_error("reference: data exhausted");
  }
  for (int j = 0; j < fill; ++j) {
    const auto r = static_cast<std::size_t>(j) +
                   stream.next_below(pool.size() - static_cast<std::uint64_t>(j));
    std::swap(pool[static_cast<std::size_t>(j)], pool[r]);
  }
  chosen.insert(chosen.end(), pool.begin(), pool.begin() + fill);
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

}  // namespace

Vector numeric_gradient(const std::function<double(const Vector&)>& f,
                        const Vector& x, double h) {
  Vector g(x.size());
  Vector p = x;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double orig = p[j];
    p[j] = orig + h;
    const double up = f(p);
    p[j] = orig - h;
    const double down = f(p);
    p[j] = orig;
    g[j] = (up - down) / (2.0 * h);
  }
  return g;
}

ReferenceRun reference_run(const RunConfig& config, const Problem& problem,
                           std::vector<MachineDataset> datasets) {
  const int T = config.T;
  const int M = config.M;
  const int m = config.m;
  const int d = problem.dim();
  const ObjectiveConstants& c = problem.constants();
  const Ball& ball = problem.feasible_set();

  const bool delayed = config.algorithm == Algorithm::kMu2Delayed;
  const bool baseline = config.algorithm == Algorithm::kNoisySgd;
  const bool noisy = config.noise_enabled && !delayed;

  // Step size, written out from the stated formulas.
  double eta = config.eta;
  if (config.eta_auto) {
    const double lnT1 = 1.0 + std::log(static_cast<double>(T));
    switch (config.algorithm) {
      case Algorithm::kMu2Partial:
        eta = noisy ? std::min(config.rho * c.D * m /
                                   (2.0 * c.S * T *
                                    std::sqrt(2.0 * M * d * lnT1)),
                               1.0 / (8.0 * c.L * T))
                    : 1.0 / (8.0 * c.L * T);
        break;
      case Algorithm::kMu2Trusted:
        eta = noisy ? std::min(config.rho * c.D * m /
                                   (2.0 * c.S * T * std::sqrt(
                                                        static_cast<double>(d))),
                               1.0 / (4.0 * c.L * T))
                    : 1.0 / (4.0 * c.L * T);
        break;
      case Algorithm::kMu2Delayed:
        eta = 1.0 / (8.0 * c.L * T);
        break;
      case Algorithm::kNoisySgd: {
        double ghat_sq = c.G * c.G;
        if (noisy) {
          ghat_sq *= 1.0 + 2.0 * d * lnT1 * T / (config.rho * config.rho * M);
        }
        eta = c.D / (std::sqrt(ghat_sq) * std::sqrt(static_cast<double>(T)));
        break;
      }
    }
  }

  // Per-release variances are a fixed per-unit scale times the count, the
  // same shape (and rounding) as the published calibration rule.
  const double lnT1_cal = 1.0 + std::log(static_cast<double>(T));
  const double untrusted_scale =
      4.0 * c.S * c.S * lnT1_cal * 1.0 / (config.rho * config.rho);
  const double baseline_scale =
      4.0 * c.G * c.G / (config.rho * config.rho);

  Vector x0 = ball.center.empty() ? Vector(static_cast<std::size_t>(d), 0.0)
                                  : ball.center;
  Vector w = x0;
  Vector x = x0;
  Vector x_prev = x0;
  Vector q(static_cast<std::size_t>(d), 0.0);

  std::vector<Vector> retained(static_cast<std::size_t>(M));
  std::vector<Vector> q_local(static_cast<std::size_t>(M));
  std::vector<int> last_round(static_cast<std::size_t>(M), 0);
  std::vector<Vector> last_query(static_cast<std::size_t>(M), x0);
  std::vector<int> n_part(static_cast<std::size_t>(M), 0);
  std::vector<int> budget(static_cast<std::size_t>(M), 0);
  for (int i = 0; i < M; ++i) {
    budget[static_cast<std::size_t>(i)] =
        datasets[static_cast<std::size_t>(i)].remaining();
  }

  RngStream server_stream(config.seed, StreamPurpose::kServer);
  std::vector<RngStream> noise;
  RngStream trusted_stream(config.seed, StreamPurpose::kNoise,
                           static_cast<std::uint64_t>(M));
  for (int i = 0; i < M; ++i) {
    noise.emplace_back(config.seed, StreamPurpose::kNoise,
                       static_cast<std::uint64_t>(i));
  }

  ReferenceRun out;
  for (int t = 1; t <= T; ++t) {
    std::vector<int> participants;
    if (config.experiment_mode) {
      std::vector<int> remaining(static_cast<std::size_t>(M));
      for (int i = 0; i < M; ++i) {
        remaining[static_cast<std::size_t>(i)] =
            datasets[static_cast<std::size_t>(i)].remaining();
      }
      participants = ref_sample_capped(m, T - t + 1, remaining, server_stream);
    } else {
      participants = ref_sample(M, m, server_stream);
    }

    Vector w_next(static_cast<std::size_t>(d));
    if (baseline) {
      // Plain minibatch step at the iterate w_t.
      Vector gsum(static_cast<std::size_t>(d), 0.0);
      for (int i : participants) {
        const Sample& z = datasets[static_cast<std::size_t>(i)].next();
        const Vector g = problem.gradient(i, w, z);
        out.grad_evals += 1;
        Vector release = g;
        if (noisy) {
          const double sigma_sq =
              baseline_scale *
              static_cast<double>(budget[static_cast<std::size_t>(i)]);
          const double sd = std::sqrt(sigma_sq);
          for (int j = 0; j < d; ++j) {
            release[static_cast<std::size_t>(j)] +=
                sd * noise[static_cast<std::size_t>(i)].next_gaussian();
          }
        }
        for (int j = 0; j < d; ++j) {
          gsum[static_cast<std::size_t>(j)] +=
              release[static_cast<std::size_t>(j)];
        }
      }
      for (int j = 0; j < d; ++j) {
        const double step = gsum[static_cast<std::size_t>(j)] /
                            static_cast<double>(m);
        w_next[static_cast<std::size_t>(j)] =
            w[static_cast<std::size_t>(j)] - eta * step;
      }
      w_next = ref_project(w_next, ball);
      x_prev = x;
      x = w_next;
      w = w_next;
      // q is unused for the baseline; keep the round record's copy zero.
    } else {
      if (!delayed) {
        // s_{t,i} = t grad f(x_t; z) - (t-1) grad f(x_{t-1}; z), privatized
        // with fresh-minus-retained noise for the untrusted variant.
        Vector sum(static_cast<std::size_t>(d), 0.0);
        for (int i : participants) {
          const Sample& z = datasets[static_cast<std::size_t>(i)].next();
          const Vector g_now = problem.gradient(i, x, z);
          const Vector g_prev = problem.gradient(i, x_prev, z);
          out.grad_evals += 2;
          Vector s(static_cast<std::size_t>(d));
          for (int j = 0; j < d; ++j) {
            double v = g_now[static_cast<std::size_t>(j)] *
                       static_cast<double>(t);
            v += -static_cast<double>(t - 1) *
                 g_prev[static_cast<std::size_t>(j)];
            s[static_cast<std::size_t>(j)] = v;
          }
          n_part[static_cast<std::size_t>(i)] += 1;
          if (noisy && config.algorithm == Algorithm::kMu2Partial) {
            const double sigma_sq =
                untrusted_scale *
                static_cast<double>(n_part[static_cast<std::size_t>(i)]);
            const double sd = std::sqrt(sigma_sq);
            Vector& prev = retained[static_cast<std::size_t>(i)];
            if (prev.empty()) prev.assign(static_cast<std::size_t>(d), 0.0);
            Vector fresh(static_cast<std::size_t>(d));
            for (int j = 0; j < d; ++j) {
              fresh[static_cast<std::size_t>(j)] =
                  sd * noise[static_cast<std::size_t>(i)].next_gaussian();
            }
            for (int j = 0; j < d; ++j) {
              s[static_cast<std::size_t>(j)] =
                  s[static_cast<std::size_t>(j)] +
                  fresh[static_cast<std::size_t>(j)] -
                  prev[static_cast<std::size_t>(j)];
            }
            prev = fresh;
          }
          for (int j = 0; j < d; ++j) {
            sum[static_cast<std::size_t>(j)] += s[static_cast<std::size_t>(j)];
          }
        }
        for (int j = 0; j < d; ++j) {
          q[static_cast<std::size_t>(j)] +=
              sum[static_cast<std::size_t>(j)] / static_cast<double>(m);
        }
      } else {
        // Delayed rule: each participant refreshes its local momentum and the
        // server's estimate is replaced by the participants' mean.
        Vector sum(static_cast<std::size_t>(d), 0.0);
        for (int i : participants) {
          const Sample& z = datasets[static_cast<std::size_t>(i)].next();
          const Vector g_now = problem.gradient(i, x, z);
          const Vector g_old =
              problem.gradient(i, last_query[static_cast<std::size_t>(i)], z);
          out.grad_evals += 2;
          Vector& ql = q_local[static_cast<std::size_t>(i)];
          if (ql.empty()) ql.assign(static_cast<std::size_t>(d), 0.0);
          for (int j = 0; j < d; ++j) {
            ql[static_cast<std::size_t>(j)] +=
                static_cast<double>(t) * g_now[static_cast<std::size_t>(j)];
          }
          for (int j = 0; j < d; ++j) {
            ql[static_cast<std::size_t>(j)] +=
                -static_cast<double>(last_round[static_cast<std::size_t>(i)]) *
                g_old[static_cast<std::size_t>(j)];
          }
          last_round[static_cast<std::size_t>(i)] = t;
          last_query[static_cast<std::size_t>(i)] = x;
          for (int j = 0; j < d; ++j) {
            sum[static_cast<std::size_t>(j)] += ql[static_cast<std::size_t>(j)];
          }
        }
        for (int j = 0; j < d; ++j) {
          q[static_cast<std::size_t>(j)] =
              sum[static_cast<std::size_t>(j)] / static_cast<double>(m);
        }
      }

      if (noisy && config.algorithm == Algorithm::kMu2Trusted) {
        const double var = 4.0 * c.S * c.S * T /
                           (config.rho * config.rho *
                            static_cast<double>(m) * static_cast<double>(m));
        const double sd = std::sqrt(var);
        Vector y(static_cast<std::size_t>(d));
        for (int j = 0; j < d; ++j) {
          y[static_cast<std::size_t>(j)] = sd * trusted_stream.next_gaussian();
        }
        for (int j = 0; j < d; ++j) {
          w_next[static_cast<std::size_t>(j)] =
              w[static_cast<std::size_t>(j)] -
              eta * (q[static_cast<std::size_t>(j)] +
                     y[static_cast<std::size_t>(j)]);
        }
      } else {
        for (int j = 0; j < d; ++j) {
          w_next[static_cast<std::size_t>(j)] =
              w[static_cast<std::size_t>(j)] -
              eta * q[static_cast<std::size_t>(j)];
        }
      }
      w_next = ref_project(w_next, ball);
      const double frac = 2.0 / static_cast<double>(t + 2);
      x_prev = x;
      for (int j = 0; j < d; ++j) {
        x[static_cast<std::size_t>(j)] =
            (1.0 - frac) * x[static_cast<std::size_t>(j)] +
            frac * w_next[static_cast<std::size_t>(j)];
      }
      w = w_next;
    }

    ReferenceRound round;
    round.participants = participants;
    round.q_tilde = q;
    round.w = w;
    round.x = x;
    out.rounds.push_back(std::move(round));
  }
  out.output = baseline ? w : x_prev;
  return out;
}

TempFile::TempFile(const std::string& content) {
  static std::atomic<int> counter{0};
  const auto dir = std::filesystem::temp_directory_path();
  path_ = (dir / ("dpfed_test_" + std::to_string(::getpid()) + "_" +
                  std::to_string(counter.fetch_add(1)) + ".tmp"))
              .string();
  std::ofstream out(path_, std::ios::binary | std::ios::trunc);
  out << content;
}

TempFile::~TempFile() {
  std::error_code ec;
  std::filesystem::remove(path_, ec);
}

std::string TempFile::read() const {
  std::ifstream in(path_, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace dpfed::testing
