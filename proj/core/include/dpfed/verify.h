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

#ifndef DPFED_VERIFY_H_
#define DPFED_VERIFY_H_

#include <cstdint>
#include <string>
#include <vector>

#include "dpfed/engine.h"
#include "dpfed/objectives.h"

namespace dpfed {

// One empirical check of an analysis claim. Statistical upper-bound checks
// pass iff statistic <= bound + 3 std_error; identity checks have
// std_error = 0 and a tolerance folded into `bound`; lower-bound checks
// (currently only the delayed-degradation ratio) pass iff
// statistic >= bound - 3 std_error. Statistic and bound always carry the
// same units.
struct CheckReport {
  std::string name;
  bool pass = false;
  double statistic = 0.0;
  double bound = 0.0;
  double std_error = 0.0;
  long long trials = 0;
};

inline constexpr const char* kCheckReportHeader =
    "check,pass,statistic,bound,std_error,trials";

std::string format_check_report(const CheckReport& report);

// Monte Carlo check of both subset-averaging variance inequalities on a
// synthetic problem with exactly known constants: over `trials` draws of a
// uniform m-subset, fresh samples, and random x, y in K,
//   E ||g(x) - grad f(x)||^2        <= (sigma^2 + h xi^2) / m
//   E ||(g(x)-grad f(x)) - (g(y)-grad f(y))||^2 / ||x-y||^2
//                                   <= (sigma_L^2 + h xi_L^2) / m
// with h = (M-m)/(M-1) (0 when m = M). The returned headline statistic is
// the first inequality's; pass requires both. Throws std::invalid_argument
// if trials < 100.
CheckReport check_lemma1_variance(const QuadraticProblem& problem, int m,
                                  int trials, std::uint64_t seed);

// Verifies the noise-cancellation identity on a recorded trace: rebuilding
// the raw momentum q_t from the traced corrections, at every round
// q_tilde_t = q_t + (1/m) sum over all M machines of their retained noise,
// to 1e-9 per coordinate. Statistic is the worst absolute deviation.
// Throws std::invalid_argument if the trace lacks raw corrections.
CheckReport check_cancellation(const RunTrace& trace);

// Sensitivity on a recorded trace: max ||s_{t,i}|| <= S, and a swap-one-
// sample replay (recompute each traced correction at its recorded query
// points with a fresh sample) moves any released prefix sum by at most 2S.
// Headline statistic is the max correction norm; pass requires both.
CheckReport check_sensitivity(const Problem& problem, const RunTrace& trace,
                              std::uint64_t seed);

// Momentum-error growth: noiseless partial-participation runs on the
// synthetic quadratic, mean ||q_T - T grad f(x_T)||^2 over `replicates`
// seeds against the band (T/m)(sigma_tilde^2 + h xi_tilde^2). Throws
// std::invalid_argument if replicates < 30.
CheckReport check_error_growth(const ProblemSpec& spec, int M, int m, int T,
                               int replicates, std::uint64_t seed);

// Delayed-update degradation: the delayed variant's mean ||eps_T||^2 over
// the partial-participation variant's, which should exceed 0.5 M/m
// (a lower-bound check). Throws std::invalid_argument if replicates < 30.
CheckReport check_delayed_degradation(const ProblemSpec& spec, int M, int m,
                                      int T, int replicates,
                                      std::uint64_t seed);

// Order-alpha Renyi divergence between N(0, sigma^2 I) and
// N(Delta, sigma^2 I) by 1-D log-domain Simpson quadrature along the shift
// direction; the independent oracle for the closed form alpha Delta^2 /
// (2 sigma^2).
double renyi_gaussian_quadrature(double alpha, double delta_norm,
                                 double sigma);

// Named check suites for the CLI and the acceptance harness. Each name runs
// a fixed battery and returns one CheckReport row per sub-check:
//   lemma1        subset-variance bounds at M=10, m in {1,5,10}
//   cancellation  identity on randomized noisy configs (d<=50, M<=20, T<=500)
//   sensitivity   norm bound and swap replay on a traced noisy run
//   error-growth  momentum-error t/m band at M=10, m in {1,5,10}
//   delayed       degradation ratio at M/m = 10
//   accounting    closed forms vs quadrature, budget caps, trusted exactness
// Unknown names throw std::invalid_argument.
std::vector<std::string> check_names();
std::vector<CheckReport> run_check(const std::string& name,
                                   std::uint64_t seed);
std::vector<CheckReport> run_all_checks(std::uint64_t seed);

}  // namespace dpfed

#endif  // DPFED_VERIFY_H_
