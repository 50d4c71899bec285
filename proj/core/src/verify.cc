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

#include "dpfed/verify.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

#include "dpfed/privacy.h"
#include "dpfed/rng.h"

namespace dpfed {

namespace {

constexpr double kIdentitySlack = 1e-12;  // FP headroom on exact identities

void append_real(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

// (M-m)/(M-1); exactly 0 under full participation.
double het_factor(int M, int m) {
  if (M <= 1 || m >= M) return 0.0;
  return static_cast<double>(M - m) / static_cast<double>(M - 1);
}

Vector random_in_ball(const Ball& k, int d, RngStream& stream) {
  Vector v(static_cast<std::size_t>(d));
  stream.fill_gaussian(v, 1.0);
  const double n = l2_norm(v);
  const double u = stream.next_double();
  if (n == 0.0) return Vector(static_cast<std::size_t>(d), 0.0);
  const double r =
      k.radius * std::pow(u, 1.0 / static_cast<double>(d)) / n;
  scale(v, r);
  if (!k.center.empty()) axpy(1.0, k.center, v);
  return v;
}

Sample fresh_quad_sample(double nu_std, int d, RngStream& stream) {
  Sample s;
  s.features.resize(static_cast<std::size_t>(d));
  for (auto& f : s.features) {
    f = static_cast<float>(nu_std * stream.next_gaussian());
  }
  return s;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_and_se(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  double sum = 0.0;
  for (double x : xs) sum += x;
  MeanSe r;
  r.mean = sum / static_cast<double>(n);
  if (n < 2) return r;
  double ss = 0.0;
  for (double x : xs) ss += (x - r.mean) * (x - r.mean);
  r.se = std::sqrt(ss / static_cast<double>(n - 1) /
                   static_cast<double>(n));
  return r;
}

struct Lemma1Stats {
  MeanSe value;
  MeanSe smooth;
};

Lemma1Stats lemma1_mc(const QuadraticProblem& problem, int m, int trials,
                      std::uint64_t seed) {
  const int M = problem.machines();
  const int d = problem.dim();
  const Ball& k = problem.feasible_set();
  RngStream stream(seed, StreamPurpose::kCheck);
  std::vector<double> value(static_cast<std::size_t>(trials));
  std::vector<double> smooth(static_cast<std::size_t>(trials));
  for (int trial = 0; trial < trials; ++trial) {
    const std::vector<int> subset = sample_participants(M, m, stream);
    const Vector x = random_in_ball(k, d, stream);
    const Vector y = random_in_ball(k, d, stream);
    Vector gx(static_cast<std::size_t>(d), 0.0);
    Vector gy(static_cast<std::size_t>(d), 0.0);
    for (int i : subset) {
      const Sample z = fresh_quad_sample(problem.perturbation_std(), d, stream);
      axpy(1.0, problem.gradient(i, x, z), gx);
      axpy(1.0, problem.gradient(i, y, z), gy);
    }
    scale(gx, 1.0 / static_cast<double>(m));
    scale(gy, 1.0 / static_cast<double>(m));
    const Vector fx = problem.mean_gradient(x);
    const Vector fy = problem.mean_gradient(y);
    double verr = 0.0, serr = 0.0, dxy = 0.0;
    for (int j = 0; j < d; ++j) {
      const double ex = gx[j] - fx[j];
      const double ey = gy[j] - fy[j];
      verr += ex * ex;
      serr += (ex - ey) * (ex - ey);
      dxy += (x[j] - y[j]) * (x[j] - y[j]);
    }
    value[trial] = verr;
    smooth[trial] = dxy > 0.0 ? serr / dxy : 0.0;
  }
  return {mean_and_se(value), mean_and_se(smooth)};
}

// Both sensitivity statistics off one trace: the recorded max ||s|| and the
// worst release change under a one-sample swap replayed at the recorded
// query points.
struct SensitivityStats {
  double max_norm = 0.0;
  double max_swap = 0.0;
  long long corrections = 0;
};

SensitivityStats sensitivity_stats(const Problem& problem,
                                   const RunTrace& trace,
                                   std::uint64_t seed) {
  const auto* quad = dynamic_cast<const QuadraticProblem*>(&problem);
  if (quad == nullptr) {
    throw std::invalid_argument(
        "check_sensitivity: the swap replay needs a synthetic problem");
  }
  const int d = quad->dim();
  RngStream stream(seed, StreamPurpose::kCheck);
  SensitivityStats st;
  for (std::size_t ti = 0; ti < trace.rounds.size(); ++ti) {
    const RoundRecord& rec = trace.rounds[ti];
    const int t = static_cast<int>(ti) + 1;
    const Vector& x_prev = ti == 0 ? trace.x0 : trace.rounds[ti - 1].x_query;
    if (rec.raw_corrections.size() != rec.participants.size()) {
      throw std::invalid_argument("check_sensitivity: incomplete trace");
    }
    for (std::size_t p = 0; p < rec.participants.size(); ++p) {
      const int i = rec.participants[p];
      const Vector& s_rec = rec.raw_corrections[p];
      st.max_norm = std::max(st.max_norm, l2_norm(s_rec));
      st.corrections += 1;
      const Sample swapped =
          fresh_quad_sample(quad->perturbation_std(), d, stream);
      Vector s_swap = quad->gradient(i, rec.x_query, swapped);
      scale(s_swap, static_cast<double>(t));
      axpy(-static_cast<double>(t - 1),
           quad->gradient(i, x_prev, swapped), s_swap);
      st.max_swap = std::max(st.max_swap, l2_dist(s_rec, s_swap));
    }
  }
  return st;
}

double eps_sq_at_T(const ProblemSpec& spec, Algorithm algorithm, int M, int m,
                   int T, std::uint64_t master_seed) {
  QuadraticProblem problem(spec, M);
  RunConfig config;
  config.algorithm = algorithm;
  config.T = T;
  config.M = M;
  config.m = m;
  config.noise_enabled = false;
  config.seed = master_seed;
  config.eval_every = T;
  RunResult result = run_algorithm(config, problem,
                                   problem.make_datasets(T, master_seed));
  return result.metrics.back().eps_err_sq;
}

CheckReport upper_bound_report(std::string name, const MeanSe& stat,
                               double bound, long long trials) {
  CheckReport r;
  r.name = std::move(name);
  r.statistic = stat.mean;
  r.bound = bound;
  r.std_error = stat.se;
  r.trials = trials;
  r.pass = stat.mean <= bound + 3.0 * stat.se + kIdentitySlack;
  return r;
}

CheckReport identity_report(std::string name, double statistic, double bound,
                            long long trials) {
  CheckReport r;
  r.name = std::move(name);
  r.statistic = statistic;
  r.bound = bound;
  r.trials = trials;
  r.pass = statistic <= bound;
  return r;
}

ProblemSpec standard_quadratic() {
  ProblemSpec spec;
  spec.family = ObjectiveFamily::kQuadratic;
  return spec;  // d=50, L=10, D=0.1, sigma=0.2, xi=0.05
}

std::vector<CheckReport> lemma1_suite(std::uint64_t seed) {
  const ProblemSpec spec = standard_quadratic();
  const int M = 10;
  const int trials = 400;
  QuadraticProblem problem(spec, M);
  const ObjectiveConstants& c = problem.constants();
  std::vector<CheckReport> out;
  for (int m : {1, 5, 10}) {
    const Lemma1Stats st = lemma1_mc(problem, m, trials, seed + m);
    const double h = het_factor(M, m);
    const double bound_v =
        (c.sigma * c.sigma + h * c.xi * c.xi) / static_cast<double>(m);
    const double bound_s =
        (c.sigma_L * c.sigma_L + h * c.xi_L * c.xi_L) /
        static_cast<double>(m);
    out.push_back(upper_bound_report("lemma1-value-m" + std::to_string(m),
                                     st.value, bound_v, trials));
    out.push_back(upper_bound_report("lemma1-smooth-m" + std::to_string(m),
                                     st.smooth, bound_s, trials));
  }
  return out;
}

std::vector<CheckReport> cancellation_suite(std::uint64_t seed) {
  RngStream stream(seed, StreamPurpose::kCheck);
  const int configs = 20;
  double worst = 0.0;
  bool all_pass = true;
  for (int cfg = 0; cfg < configs; ++cfg) {
    ProblemSpec spec = standard_quadratic();
    spec.dim = 10 + static_cast<int>(stream.next_below(41));   // 10..50
    spec.sigma = 0.1;  // keeps the clipping margin at every dim here
    const int M = 2 + static_cast<int>(stream.next_below(19));  // 2..20
    const int m = 1 + static_cast<int>(stream.next_below(M));
    const int T = 50 + static_cast<int>(stream.next_below(451));  // 50..500
    const double rho = 1.0 + 7.0 * stream.next_double();
    QuadraticProblem problem(spec, M);
    RunConfig config;
    config.algorithm = Algorithm::kMu2Partial;
    config.T = T;
    config.M = M;
    config.m = m;
    config.rho = rho;
    config.seed = stream.next_u64();
    config.record_trace = true;
    config.eval_every = T;
    RunResult result = run_algorithm(
        config, problem, problem.make_datasets(T, config.seed));
    const CheckReport one = check_cancellation(*result.trace);
    worst = std::max(worst, one.statistic);
    all_pass = all_pass && one.pass;
  }
  CheckReport r = identity_report("cancellation", worst, 1e-9, configs);
  r.pass = all_pass;
  return {r};
}

std::vector<CheckReport> sensitivity_suite(std::uint64_t seed) {
  const ProblemSpec spec = standard_quadratic();
  const int M = 10, m = 5, T = 300;
  QuadraticProblem problem(spec, M);
  RunConfig config;
  config.algorithm = Algorithm::kMu2Partial;
  config.T = T;
  config.M = M;
  config.m = m;
  config.rho = 4.0;
  config.seed = seed;
  config.record_trace = true;
  config.eval_every = T;
  RunResult result = run_algorithm(config, problem,
                                   problem.make_datasets(T, seed));
  const SensitivityStats st = sensitivity_stats(problem, *result.trace, seed);
  const double S = problem.constants().S;
  CheckReport norm = identity_report("sensitivity-max-norm", st.max_norm,
                                     S * (1.0 + 1e-9), st.corrections);
  norm.bound = S;
  norm.pass = st.max_norm <= S * (1.0 + 1e-9);
  CheckReport swap = identity_report("sensitivity-swap", st.max_swap,
                                     2.0 * S, st.corrections);
  swap.pass = st.max_swap <= 2.0 * S * (1.0 + 1e-9);
  return {norm, swap};
}

std::vector<CheckReport> error_growth_suite(std::uint64_t seed) {
  const ProblemSpec spec = standard_quadratic();
  const int M = 10, T = 200, replicates = 120;
  std::vector<CheckReport> out;
  for (int m : {1, 5, 10}) {
    CheckReport r = check_error_growth(spec, M, m, T, replicates,
                                       seed + 977 * m);
    r.name = "error-growth-m" + std::to_string(m);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<CheckReport> delayed_suite(std::uint64_t seed) {
  const ProblemSpec spec = standard_quadratic();
  return {check_delayed_degradation(spec, 10, 1, 200, 120, seed)};
}

std::vector<CheckReport> accounting_suite(std::uint64_t seed) {
  std::vector<CheckReport> out;

  double worst_renyi = 0.0;
  long long renyi_trials = 0;
  for (double alpha : {1.5, 2.0, 4.0, 8.0}) {
    for (double delta_norm : {0.0, 0.5, 1.0, 3.0}) {
      for (double sigma : {0.7, 1.0, 2.5}) {
        const double closed = renyi_gaussian(alpha, delta_norm, sigma);
        const double quad = renyi_gaussian_quadrature(alpha, delta_norm,
                                                      sigma);
        worst_renyi = std::max(worst_renyi, std::abs(closed - quad));
        renyi_trials += 1;
      }
    }
  }
  out.push_back(identity_report("renyi-closed-form", worst_renyi, 1e-6,
                                renyi_trials));

  // The zCDP conversion equals the generic RDP-to-DP bound minimized over
  // alpha (optimum at alpha = 1 + sqrt(2 ln(1/delta))/rho).
  double worst_conv = 0.0;
  long long conv_trials = 0;
  for (double rho : {0.3, 1.0, 4.0, 12.0}) {
    for (double delta : {1e-5, 1e-7}) {
      const double closed = zcdp_to_dp(rho, delta);
      const double l = std::log(1.0 / delta);
      const double alpha_star = 1.0 + std::sqrt(2.0 * l) / rho;
      const double generic =
          alpha_star * rho * rho / 2.0 + l / (alpha_star - 1.0);
      worst_conv = std::max(worst_conv, std::abs(closed - generic));
      conv_trials += 1;
    }
  }
  out.push_back(identity_report("zcdp-conversion", worst_conv, 1e-12,
                                conv_trials));

  // Random participation patterns never overspend: the growing-variance
  // schedule turns the budget sum harmonic, bounded by 1 + ln T.
  RngStream stream(seed, StreamPurpose::kCheck);
  const double S = 118.12, rho = 8.0;
  double worst_cap = 0.0;
  const int patterns = 100;
  for (int p = 0; p < patterns; ++p) {
    const int T = 1 + static_cast<int>(stream.next_below(10000));
    const int n = 1 + static_cast<int>(stream.next_below(
                          static_cast<std::uint64_t>(T)));
    std::vector<double> variances(static_cast<std::size_t>(n));
    for (int j = 1; j <= n; ++j) {
      variances[j - 1] = calibrate_untrusted(S, T, rho, j);
    }
    worst_cap = std::max(worst_cap, account_machine(S, variances) / rho);
  }
  out.push_back(identity_report("accountant-cap", worst_cap,
                                1.0 + kIdentitySlack, patterns));
  out.back().bound = 1.0;
  out.back().pass = worst_cap <= 1.0 + kIdentitySlack;

  double worst_trusted = 0.0;
  long long trusted_trials = 0;
  for (int T : {1, 100, 1200}) {
    for (int m : {1, 50}) {
      for (double r : {1.0, 8.0}) {
        const double var = calibrate_trusted(S, T, r, m);
        BudgetLedger ledger(m, 2.0 * S / static_cast<double>(m));
        for (int t = 0; t < T; ++t) {
          for (int i = 0; i < m; ++i) ledger.add(i, var);
        }
        worst_trusted = std::max(worst_trusted,
                                 std::abs(ledger.max_spent() - r));
        trusted_trials += 1;
      }
    }
  }
  out.push_back(identity_report("trusted-exact", worst_trusted, 1e-9,
                                trusted_trials));
  return out;
}

}  // namespace

std::string format_check_report(const CheckReport& report) {
  std::string out;
  out.reserve(96);
  out += report.name;
  out += ',';
  out += report.pass ? '1' : '0';
  out += ',';
  append_real(out, report.statistic);
  out += ',';
  append_real(out, report.bound);
  out += ',';
  append_real(out, report.std_error);
  out += ',';
  out += std::to_string(report.trials);
  return out;
}

CheckReport check_lemma1_variance(const QuadraticProblem& problem, int m,
                                  int trials, std::uint64_t seed) {
  if (trials < 100) {
    throw std::invalid_argument("check_lemma1_variance: trials < 100");
  }
  const int M = problem.machines();
  if (m < 1 || m > M) {
    throw std::invalid_argument("check_lemma1_variance: need 1 <= m <= M");
  }
  const ObjectiveConstants& c = problem.constants();
  const double h = het_factor(M, m);
  const double bound_v =
      (c.sigma * c.sigma + h * c.xi * c.xi) / static_cast<double>(m);
  const double bound_s =
      (c.sigma_L * c.sigma_L + h * c.xi_L * c.xi_L) / static_cast<double>(m);
  const Lemma1Stats st = lemma1_mc(problem, m, trials, seed);
  CheckReport r = upper_bound_report("lemma1-variance", st.value, bound_v,
                                     trials);
  const bool smooth_pass =
      st.smooth.mean <= bound_s + 3.0 * st.smooth.se + kIdentitySlack;
  r.pass = r.pass && smooth_pass;
  return r;
}

CheckReport check_cancellation(const RunTrace& trace) {
  if (trace.rounds.empty() || trace.x0.empty()) {
    throw std::invalid_argument("check_cancellation: empty trace");
  }
  const std::size_t d = trace.x0.size();
  const int m = trace.m;
  Vector q(d, 0.0);
  double worst = 0.0;
  for (const RoundRecord& rec : trace.rounds) {
    if (static_cast<int>(rec.raw_corrections.size()) != m ||
        rec.q_tilde.size() != d) {
      throw std::invalid_argument(
          "check_cancellation: trace lacks raw corrections");
    }
    Vector sum(d, 0.0);
    for (const Vector& s : rec.raw_corrections) axpy(1.0, s, sum);
    for (std::size_t j = 0; j < d; ++j) {
      q[j] += sum[j] / static_cast<double>(m);
    }
    Vector noise(d, 0.0);
    if (!rec.retained_after.empty()) {
      for (const Vector& y : rec.retained_after) axpy(1.0, y, noise);
    }
    for (std::size_t j = 0; j < d; ++j) {
      const double expected = q[j] + noise[j] / static_cast<double>(m);
      worst = std::max(worst, std::abs(rec.q_tilde[j] - expected));
    }
  }
  CheckReport r;
  r.name = "cancellation";
  r.statistic = worst;
  r.bound = 1e-9;
  r.trials = static_cast<long long>(trace.rounds.size());
  r.pass = worst <= r.bound;
  return r;
}

CheckReport check_sensitivity(const Problem& problem, const RunTrace& trace,
                              std::uint64_t seed) {
  const SensitivityStats st = sensitivity_stats(problem, trace, seed);
  const double S = problem.constants().S;
  CheckReport r;
  r.name = "sensitivity";
  r.statistic = st.max_norm;
  r.bound = S;
  r.trials = st.corrections;
  r.pass = st.max_norm <= S * (1.0 + 1e-9) &&
           st.max_swap <= 2.0 * S * (1.0 + 1e-9);
  return r;
}

CheckReport check_error_growth(const ProblemSpec& spec, int M, int m, int T,
                               int replicates, std::uint64_t seed) {
  if (replicates < 30) {
    throw std::invalid_argument("check_error_growth: replicates < 30");
  }
  QuadraticProblem probe(spec, M);
  const ObjectiveConstants& c = probe.constants();
  std::vector<double> eps(static_cast<std::size_t>(replicates));
  for (int r = 0; r < replicates; ++r) {
    eps[r] = eps_sq_at_T(spec, Algorithm::kMu2Partial, M, m, T,
                         seed + static_cast<std::uint64_t>(r));
  }
  const double h = het_factor(M, m);
  const double band = static_cast<double>(T) / static_cast<double>(m) *
                      (c.sigma_tilde * c.sigma_tilde +
                       h * c.xi_tilde * c.xi_tilde);
  return upper_bound_report("lemma6-error-growth", mean_and_se(eps), band,
                            replicates);
}

CheckReport check_delayed_degradation(const ProblemSpec& spec, int M, int m,
                                      int T, int replicates,
                                      std::uint64_t seed) {
  if (replicates < 30) {
    throw std::invalid_argument("check_delayed_degradation: replicates < 30");
  }
  std::vector<double> partial(static_cast<std::size_t>(replicates));
  std::vector<double> delayed(static_cast<std::size_t>(replicates));
  for (int r = 0; r < replicates; ++r) {
    partial[r] = eps_sq_at_T(spec, Algorithm::kMu2Partial, M, m, T,
                             seed + 2 * static_cast<std::uint64_t>(r));
    delayed[r] = eps_sq_at_T(spec, Algorithm::kMu2Delayed, M, m, T,
                             seed + 2 * static_cast<std::uint64_t>(r) + 1);
  }
  const MeanSe p = mean_and_se(partial);
  const MeanSe dl = mean_and_se(delayed);
  CheckReport r;
  r.name = "delayed-degradation";
  r.statistic = dl.mean / p.mean;
  r.bound = 0.5 * static_cast<double>(M) / static_cast<double>(m);
  r.std_error = r.statistic * std::sqrt(dl.se * dl.se / (dl.mean * dl.mean) +
                                        p.se * p.se / (p.mean * p.mean));
  r.trials = replicates;
  // Lower-bound check: the delayed variant must be at least this much worse.
  r.pass = r.statistic >= r.bound - 3.0 * r.std_error;
  return r;
}

double renyi_gaussian_quadrature(double alpha, double delta_norm,
                                 double sigma) {
  if (!(alpha > 1.0)) {
    throw std::invalid_argument("renyi_gaussian_quadrature: alpha <= 1");
  }
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("renyi_gaussian_quadrature: sigma <= 0");
  }
  if (!(delta_norm >= 0.0)) {
    throw std::invalid_argument("renyi_gaussian_quadrature: delta < 0");
  }
  // The d-dimensional divergence reduces to 1-D along the shift direction.
  // Integrand P^alpha Q^(1-alpha) is a scaled Gaussian centered at
  // (1-alpha) Delta; integrate its log with a max-shift to dodge overflow.
  const double c = (1.0 - alpha) * delta_norm;
  const double half = 14.0 * sigma;
  const int n = 40000;  // Simpson intervals
  const double dx = 2.0 * half / n;
  const double lognorm =
      -0.5 * std::log(2.0 * std::numbers::pi * sigma * sigma);
  auto log_integrand = [&](double x) {
    const double a = x / sigma;
    const double b = (x - delta_norm) / sigma;
    return lognorm - 0.5 * (alpha * a * a + (1.0 - alpha) * b * b);
  };
  double hmax = -1e300;
  for (int i = 0; i <= n; ++i) {
    hmax = std::max(hmax, log_integrand(c - half + i * dx));
  }
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    acc += w * std::exp(log_integrand(c - half + i * dx) - hmax);
  }
  const double log_integral = hmax + std::log(acc * dx / 3.0);
  return log_integral / (alpha - 1.0);
}

std::vector<std::string> check_names() {
  return {"lemma1",  "cancellation", "sensitivity",
          "error-growth", "delayed", "accounting"};
}

std::vector<CheckReport> run_check(const std::string& name,
                                   std::uint64_t seed) {
  if (name == "lemma1") return lemma1_suite(seed);
  if (name == "cancellation") return cancellation_suite(seed);
  if (name == "sensitivity") return sensitivity_suite(seed);
  if (name == "error-growth") return error_growth_suite(seed);
  if (name == "delayed") return delayed_suite(seed);
  if (name == "accounting") return accounting_suite(seed);
  std::string known;
  for (const std::string& n : check_names()) {
    if (!known.empty()) known += ", ";
    known += n;
  }
  throw std::invalid_argument("unknown check '" + name + "' (known: " +
                              known + ")");
}

std::vector<CheckReport> run_all_checks(std::uint64_t seed) {
  std::vector<CheckReport> out;
  for (const std::string& name : check_names()) {
    std::vector<CheckReport> rows = run_check(name, seed);
    out.insert(out.end(), std::make_move_iterator(rows.begin()),
               std::make_move_iterator(rows.end()));
  }
  return out;
}

}  // namespace dpfed
