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

#ifndef DPFED_PRIVACY_H_
#define DPFED_PRIVACY_H_

#include <cstddef>
#include <span>
#include <vector>

#include "dpfed/objectives.h"

namespace dpfed {

// All logs are natural. The calibration's (1 + log T) factor is the natural-log
// bound on harmonic sums, so using ln consistently is load-bearing, not a
// style choice.

// Renyi divergence of order alpha between N(mu, sigma^2 I) and
// N(mu + delta, sigma^2 I) where ||delta|| = delta_norm:
// alpha * delta_norm^2 / (2 sigma^2).
double renyi_gaussian(double alpha, double delta_norm, double sigma);

// rho-zCDP to (epsilon, delta)-DP: epsilon = rho^2/2 + rho sqrt(2 ln(1/delta)).
double zcdp_to_dp(double rho, double delta);

// Per-round per-machine variance for the untrusted (partial-participation)
// schedule: sigma^2_{t,i} = 4 S^2 (1 + ln T) N_{t,i} / rho^2, where
// n_participations = N_{t,i} counts the current round. Growing the variance
// linearly in N makes the budget sum harmonic, bounded by (1 + ln T).
double calibrate_untrusted(double S, int T, double rho, int n_participations);

// Constant server-side variance for the trusted schedule:
// sigma^2_t = 4 S^2 T / (rho^2 m^2).
double calibrate_trusted(double S, int T, double rho, int m);

// Spent budget of one machine releasing Gaussian mechanisms of sensitivity 2S
// at the given variances: rho_i = 2 S sqrt(sum 1/sigma^2). An empty list
// means the machine never participated and returns 0.
double account_machine(double S, std::span<const double> variances);

// Step size from the untrusted convergence analysis:
// min{ rho D m / (2 S T sqrt(2 M d (1 + ln T))), 1 / (8 L T) }.
// Ties resolve to the privacy branch (the first).
double step_size_untrusted(const ObjectiveConstants& c, int T, int m, int M,
                           int d, double rho);

// Trusted analogue: min{ rho D m / (2 S T sqrt(d)), 1 / (4 L T) }.
double step_size_trusted(const ObjectiveConstants& c, int T, int m, int d,
                         double rho);

struct PrivacyBudget {
  double rho = 0.0;
  double delta = 1e-5;  // reporting default; only epsilon depends on it
  double epsilon() const { return zcdp_to_dp(rho, delta); }
};

// Which noise rule a run uses and how its accountant measures sensitivity.
class NoiseSchedule {
 public:
  enum class Kind {
    kOff,        // verification mode: s_tilde = s exactly
    kUntrusted,  // per machine, variance proportional to N_{t,i}
    kTrusted,    // one server-side draw per round, constant variance
    kBaseline,   // noisy-sgd: per machine, even split over its sample budget
  };

  static NoiseSchedule off();
  static NoiseSchedule untrusted(double S, int T, double rho);
  static NoiseSchedule trusted(double S, int T, double rho, int m);
  static NoiseSchedule baseline(double G, double rho);

  Kind kind() const { return kind_; }
  bool enabled() const { return kind_ != Kind::kOff; }

  // Per-coordinate variance for one release. The argument's meaning depends
  // on the kind: for kUntrusted it is the machine's participation count
  // N_{t,i} including the current round; for kBaseline it is the machine's
  // provisioned sample budget K (each of its at most K releases gets an even
  // budget share, sigma^2 = K (2G)^2 / rho^2, so the realized spent budget
  // never exceeds rho); kTrusted ignores it. Throws std::logic_error for kOff.
  double variance(int count) const;

  // The accountant's sensitivity for one release: 2S (untrusted), 2S/m
  // (trusted), 2G (baseline), 0 (off).
  double sensitivity() const { return sensitivity_; }

 private:
  Kind kind_ = Kind::kOff;
  double scale_ = 0.0;  // kUntrusted/kBaseline: variance per unit of its rule
  double constant_ = 0.0;  // kTrusted: the fixed variance
  double sensitivity_ = 0.0;
};

// Per-machine running budget account: sum of 1/sigma^2 over the rounds the
// machine (or, for the trusted schedule, the server) released with.
class BudgetLedger {
 public:
  BudgetLedger(int machines, double sensitivity);

  void add(int machine_id, double sigma_sq);
  // rho_i = sensitivity * sqrt(sum_i). 0 for machines that never released.
  double spent(int machine_id) const;
  double max_spent() const;
  int releases(int machine_id) const;
  double sensitivity() const { return sensitivity_; }

 private:
  std::vector<double> inv_var_sum_;
  std::vector<int> releases_;
  double sensitivity_;
};

}  // namespace dpfed

#endif  // DPFED_PRIVACY_H_
