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

#include "dpfed/privacy.h"

#include <cmath>
#include <stdexcept>

namespace dpfed {

double renyi_gaussian(double alpha, double delta_norm, double sigma) {
  if (!(alpha > 1.0)) throw std::invalid_argument("renyi_gaussian: alpha <= 1");
  if (!(sigma > 0.0)) throw std::invalid_argument("renyi_gaussian: sigma <= 0");
  if (!(delta_norm >= 0.0)) {
    throw std::invalid_argument("renyi_gaussian: negative delta_norm");
  }
  return alpha * delta_norm * delta_norm / (2.0 * sigma * sigma);
}

double zcdp_to_dp(double rho, double delta) {
  if (!(rho >= 0.0)) throw std::invalid_argument("zcdp_to_dp: rho < 0");
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("zcdp_to_dp: delta outside (0,1)");
  }
  return rho * rho / 2.0 + rho * std::sqrt(2.0 * std::log(1.0 / delta));
}

double calibrate_untrusted(double S, int T, double rho, int n_participations) {
  if (!(S > 0.0)) throw std::invalid_argument("calibrate_untrusted: S <= 0");
  if (T < 1) throw std::invalid_argument("calibrate_untrusted: T < 1");
  if (!(rho > 0.0)) throw std::invalid_argument("calibrate_untrusted: rho <= 0");
  if (n_participations < 1) {
    throw std::invalid_argument("calibrate_untrusted: n_participations < 1");
  }
  return 4.0 * S * S * (1.0 + std::log(static_cast<double>(T))) *
         static_cast<double>(n_participations) / (rho * rho);
}

double calibrate_trusted(double S, int T, double rho, int m) {
  if (!(S > 0.0)) throw std::invalid_argument("calibrate_trusted: S <= 0");
  if (T < 1) throw std::invalid_argument("calibrate_trusted: T < 1");
  if (!(rho > 0.0)) throw std::invalid_argument("calibrate_trusted: rho <= 0");
  if (m < 1) throw std::invalid_argument("calibrate_trusted: m < 1");
  return 4.0 * S * S * static_cast<double>(T) /
         (rho * rho * static_cast<double>(m) * static_cast<double>(m));
}

double account_machine(double S, std::span<const double> variances) {
  if (!(S >= 0.0)) throw std::invalid_argument("account_machine: S < 0");
  double sum = 0.0;
  for (double v : variances) {
    if (!(v > 0.0)) {
      throw std::invalid_argument("account_machine: nonpositive variance");
    }
    sum += 1.0 / v;
  }
  return 2.0 * S * std::sqrt(sum);
}

double step_size_untrusted(const ObjectiveConstants& c, int T, int m, int M,
                           int d, double rho) {
  if (T < 1 || m < 1 || M < m || d < 1) {
    throw std::invalid_argument("step_size_untrusted: bad dimensions");
  }
  if (!(rho > 0.0)) throw std::invalid_argument("step_size_untrusted: rho <= 0");
  if (!(c.S > 0.0)) throw std::invalid_argument("step_size_untrusted: S <= 0");
  const double lnT1 = 1.0 + std::log(static_cast<double>(T));
  const double privacy =
      rho * c.D * static_cast<double>(m) /
      (2.0 * c.S * static_cast<double>(T) *
       std::sqrt(2.0 * static_cast<double>(M) * static_cast<double>(d) * lnT1));
  if (c.L <= 0.0) return privacy;
  const double smooth = 1.0 / (8.0 * c.L * static_cast<double>(T));
  return privacy <= smooth ? privacy : smooth;
}

double step_size_trusted(const ObjectiveConstants& c, int T, int m, int d,
                         double rho) {
  if (T < 1 || m < 1 || d < 1) {
    throw std::invalid_argument("step_size_trusted: bad dimensions");
  }
  if (!(rho > 0.0)) throw std::invalid_argument("step_size_trusted: rho <= 0");
  if (!(c.S > 0.0)) throw std::invalid_argument("step_size_trusted: S <= 0");
  const double privacy = rho * c.D * static_cast<double>(m) /
                         (2.0 * c.S * static_cast<double>(T) *
                          std::sqrt(static_cast<double>(d)));
  if (c.L <= 0.0) return privacy;
  const double smooth = 1.0 / (4.0 * c.L * static_cast<double>(T));
  return privacy <= smooth ? privacy : smooth;
}

NoiseSchedule NoiseSchedule::off() { return NoiseSchedule(); }

NoiseSchedule NoiseSchedule::untrusted(double S, int T, double rho) {
  // Validate eagerly via the single-round calibration.
  (void)calibrate_untrusted(S, T, rho, 1);
  NoiseSchedule s;
  s.kind_ = Kind::kUntrusted;
  s.scale_ = calibrate_untrusted(S, T, rho, 1);  // times N_{t,i}
  s.sensitivity_ = 2.0 * S;
  return s;
}

NoiseSchedule NoiseSchedule::trusted(double S, int T, double rho, int m) {
  NoiseSchedule s;
  s.kind_ = Kind::kTrusted;
  s.constant_ = calibrate_trusted(S, T, rho, m);
  s.sensitivity_ = 2.0 * S / static_cast<double>(m);
  return s;
}

NoiseSchedule NoiseSchedule::baseline(double G, double rho) {
  if (!(G > 0.0)) throw std::invalid_argument("NoiseSchedule: G <= 0");
  if (!(rho > 0.0)) throw std::invalid_argument("NoiseSchedule: rho <= 0");
  NoiseSchedule s;
  s.kind_ = Kind::kBaseline;
  s.scale_ = 4.0 * G * G / (rho * rho);  // times the machine's sample budget
  s.sensitivity_ = 2.0 * G;
  return s;
}

double NoiseSchedule::variance(int count) const {
  switch (kind_) {
    case Kind::kOff:
      throw std::logic_error("NoiseSchedule: variance() on disabled schedule");
    case Kind::kUntrusted:
    case Kind::kBaseline:
      if (count < 1) throw std::invalid_argument("NoiseSchedule: count < 1");
      return scale_ * static_cast<double>(count);
    case Kind::kTrusted:
      return constant_;
  }
  throw std::logic_error("NoiseSchedule: bad kind");
}

BudgetLedger::BudgetLedger(int machines, double sensitivity)
    : inv_var_sum_(machines, 0.0),
      releases_(machines, 0),
      sensitivity_(sensitivity) {
  if (machines < 1) throw std::invalid_argument("BudgetLedger: machines < 1");
  if (!(sensitivity >= 0.0)) {
    throw std::invalid_argument("BudgetLedger: negative sensitivity");
  }
}

void BudgetLedger::add(int machine_id, double sigma_sq) {
  if (machine_id < 0 ||
      machine_id >= static_cast<int>(inv_var_sum_.size())) {
    throw std::invalid_argument("BudgetLedger: machine id out of range");
  }
  if (!(sigma_sq > 0.0)) {
    throw std::invalid_argument("BudgetLedger: nonpositive variance");
  }
  inv_var_sum_[machine_id] += 1.0 / sigma_sq;
  releases_[machine_id] += 1;
}

double BudgetLedger::spent(int machine_id) const {
  if (machine_id < 0 ||
      machine_id >= static_cast<int>(inv_var_sum_.size())) {
    throw std::invalid_argument("BudgetLedger: machine id out of range");
  }
  return sensitivity_ * std::sqrt(inv_var_sum_[machine_id]);
}

double BudgetLedger::max_spent() const {
  double mx = 0.0;
  for (std::size_t i = 0; i < inv_var_sum_.size(); ++i) {
    const double s = sensitivity_ * std::sqrt(inv_var_sum_[i]);
    if (s > mx) mx = s;
  }
  return mx;
}

int BudgetLedger::releases(int machine_id) const {
  if (machine_id < 0 || machine_id >= static_cast<int>(releases_.size())) {
    throw std::invalid_argument("BudgetLedger: machine id out of range");
  }
  return releases_[machine_id];
}

}  // namespace dpfed
