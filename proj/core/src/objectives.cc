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

#include "dpfed/objectives.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "dpfed/rng.h"

namespace dpfed {

const Sample& MachineDataset::next() {
  if (exhausted()) throw std::runtime_error("MachineDataset: data exhausted");
  return samples[cursor++];
}

std::pair<double, double> tilde_constants(const ObjectiveConstants& c) {
  return {c.sigma + 2.0 * c.sigma_L * c.D, c.xi + 2.0 * c.xi_L * c.D};
}

void validate_constants(const ObjectiveConstants& c) {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("ObjectiveConstants: " + what);
  };
  if (!(c.G >= 0.0 && c.L >= 0.0 && c.D >= 0.0)) fail("G, L, D must be >= 0");
  if (!(c.sigma >= 0.0 && c.sigma <= c.G)) fail("sigma outside [0, G]");
  if (!(c.xi >= 0.0 && c.xi <= c.G)) fail("xi outside [0, G]");
  if (!(c.sigma_L >= 0.0 && c.sigma_L <= c.L)) fail("sigma_L outside [0, L]");
  if (!(c.xi_L >= 0.0 && c.xi_L <= c.L)) fail("xi_L outside [0, L]");
  if (c.S != c.G + 2.0 * c.L * c.D) fail("S != G + 2*L*D");
}

ObjectiveConstants derive_constants(const ProblemSpec& spec) {
  ObjectiveConstants c;
  c.D = spec.diameter;
  switch (spec.family) {
    case ObjectiveFamily::kMnistLogistic: {
      if (spec.feature_dim < 1 || spec.num_classes < 2) {
        throw std::invalid_argument("derive_constants: bad logistic dims");
      }
      const double F = static_cast<double>(spec.feature_dim);
      // ||grad||^2 = ||softmax - onehot||^2 ||x||^2 <= 2 * F for features in
      // [0,1] with unit bias; the Hessian spectral norm is <= ||x||^2 / 2.
      c.G = std::sqrt(2.0 * F);
      c.L = F / 2.0;
      // The per-sample variance/heterogeneity bounds are not identified for
      // real data; the universal bounds sigma,xi <= G and sigma_L,xi_L <= L
      // are used (they only feed reported bounds, never the algorithm).
      c.sigma = c.G;
      c.xi = c.G;
      c.sigma_L = c.L;
      c.xi_L = c.L;
      c.g_star = c.G;  // x* unknown; upper bound
      break;
    }
    case ObjectiveFamily::kQuadratic: {
      if (spec.dim < 1 || spec.L <= 0.0) {
        throw std::invalid_argument("derive_constants: bad quadratic spec");
      }
      // Targets live in the feasible set, so ||grad|| = L ||x - target||
      // <= L * D surely.
      c.L = spec.L;
      c.G = spec.L * spec.diameter;
      c.sigma = spec.sigma;
      c.xi = spec.xi;
      c.sigma_L = 0.0;  // gradients are linear in x with a fixed slope
      c.xi_L = 0.0;
      c.g_star = 0.0;  // x* = 0 is interior
      break;
    }
    default:
      throw std::invalid_argument("derive_constants: unknown objective family");
  }
  c.S = c.G + 2.0 * c.L * c.D;
  std::tie(c.sigma_tilde, c.xi_tilde) = tilde_constants(c);
  validate_constants(c);
  return c;
}

Vector logistic_gradient(const Vector& w, const Sample& s, int num_classes) {
  const std::size_t f = s.features.size();
  if (num_classes < 2 || w.size() != static_cast<std::size_t>(num_classes) * f) {
    throw std::invalid_argument("logistic_gradient: dimension mismatch");
  }
  if (s.label < 0 || s.label >= num_classes) {
    throw std::invalid_argument("logistic_gradient: label out of range");
  }
  // p = softmax(W x), computed with the max-shift for stability.
  std::vector<double> logits(num_classes, 0.0);
  for (int c = 0; c < num_classes; ++c) {
    const double* wc = w.data() + static_cast<std::size_t>(c) * f;
    double acc = 0.0;
    for (std::size_t j = 0; j < f; ++j) acc += wc[j] * s.features[j];
    logits[c] = acc;
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    logits[c] = std::exp(logits[c] - mx);
    z += logits[c];
  }
  Vector grad(w.size());
  for (int c = 0; c < num_classes; ++c) {
    double p = logits[c] / z;
    if (c == s.label) p -= 1.0;
    double* gc = grad.data() + static_cast<std::size_t>(c) * f;
    for (std::size_t j = 0; j < f; ++j) gc[j] = p * s.features[j];
  }
  return grad;
}

double logistic_loss(const Vector& w, const Sample& s, int num_classes) {
  const std::size_t f = s.features.size();
  if (num_classes < 2 || w.size() != static_cast<std::size_t>(num_classes) * f) {
    throw std::invalid_argument("logistic_loss: dimension mismatch");
  }
  std::vector<double> logits(num_classes, 0.0);
  for (int c = 0; c < num_classes; ++c) {
    const double* wc = w.data() + static_cast<std::size_t>(c) * f;
    double acc = 0.0;
    for (std::size_t j = 0; j < f; ++j) acc += wc[j] * s.features[j];
    logits[c] = acc;
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (int c = 0; c < num_classes; ++c) z += std::exp(logits[c] - mx);
  return mx + std::log(z) - logits[s.label];
}

Vector quadratic_gradient(const Vector& w, const Sample& s,
                          const Vector& machine_shift, double L,
                          const Ball& k) {
  if (w.size() != machine_shift.size() || w.size() != s.features.size()) {
    throw std::invalid_argument("quadratic_gradient: dimension mismatch");
  }
  Vector target(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) {
    target[j] = machine_shift[j] + static_cast<double>(s.features[j]);
  }
  target = project(target, k);
  Vector grad(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) grad[j] = L * (w[j] - target[j]);
  return grad;
}

Vector Problem::mean_gradient(const Vector&) const {
  throw std::logic_error("mean_gradient: no population oracle");
}
Vector Problem::machine_mean_gradient(int, const Vector&) const {
  throw std::logic_error("machine_mean_gradient: no population oracle");
}
double Problem::excess_loss(const Vector&) const {
  throw std::logic_error("excess_loss: no population oracle");
}
int Problem::predict(const Vector&, const Sample&) const {
  throw std::logic_error("predict: not a classifier");
}

LogisticProblem::LogisticProblem(const ProblemSpec& spec)
    : classes_(spec.num_classes),
      features_(spec.feature_dim),
      dim_(spec.num_classes * spec.feature_dim),
      ball_{{}, spec.diameter / 2.0},
      constants_(derive_constants(spec)) {}

Vector LogisticProblem::gradient(int, const Vector& x, const Sample& z) const {
  return logistic_gradient(x, z, classes_);
}

double LogisticProblem::loss(int, const Vector& x, const Sample& z) const {
  return logistic_loss(x, z, classes_);
}

int LogisticProblem::predict(const Vector& x, const Sample& z) const {
  const std::size_t f = z.features.size();
  if (x.size() != static_cast<std::size_t>(classes_) * f) {
    throw std::invalid_argument("predict: dimension mismatch");
  }
  int best = 0;
  double best_logit = 0.0;
  for (int c = 0; c < classes_; ++c) {
    const double* wc = x.data() + static_cast<std::size_t>(c) * f;
    double acc = 0.0;
    for (std::size_t j = 0; j < f; ++j) acc += wc[j] * z.features[j];
    if (c == 0 || acc > best_logit) {
      best = c;
      best_logit = acc;
    }
  }
  return best;
}

QuadraticProblem::QuadraticProblem(const ProblemSpec& spec, int machines)
    : dim_(spec.dim),
      L_(spec.L),
      ball_{{}, spec.diameter / 2.0},
      constants_(derive_constants(spec)) {
  if (machines < 1) throw std::invalid_argument("QuadraticProblem: machines < 1");
  const double R = ball_.radius;
  const double r_b = spec.xi / spec.L;  // shift radius so that xi = L * r_b
  if (spec.xi > 0.0 && dim_ < 2) {
    throw std::invalid_argument("QuadraticProblem: xi > 0 needs dim >= 2");
  }
  nu_std_ = spec.sigma / (spec.L * std::sqrt(static_cast<double>(dim_)));
  // Keep targets inside the ball except with probability ~exp(-32): a
  // chi^2_d tail bound gives ||perturbation|| <= (sigma/L)(1 + 8/sqrt(d))
  // outside that event.
  const double margin =
      r_b + (spec.sigma / spec.L) * (1.0 + 8.0 / std::sqrt(static_cast<double>(dim_)));
  if (margin > R) {
    throw std::invalid_argument(
        "QuadraticProblem: sigma/xi too large for the ball; need xi/L + "
        "(sigma/L)(1 + 8/sqrt(d)) <= D/2");
  }
  // Equally spaced shifts on a circle in coordinates (0, 1), then exact
  // re-centering (machines = 1 forces a zero shift and xi = 0).
  if (machines == 1 && spec.xi > 0.0) {
    throw std::invalid_argument("QuadraticProblem: xi > 0 needs machines >= 2");
  }
  shifts_.assign(machines, Vector(dim_, 0.0));
  if (spec.xi > 0.0) {
    for (int i = 0; i < machines; ++i) {
      const double th = 2.0 * std::numbers::pi * i / machines;
      shifts_[i][0] = r_b * std::cos(th);
      shifts_[i][1] = r_b * std::sin(th);
    }
    Vector mean(dim_, 0.0);
    for (const auto& b : shifts_) axpy(1.0 / machines, b, mean);
    for (auto& b : shifts_) axpy(-1.0, mean, b);
  }
}

const Vector& QuadraticProblem::shift(int machine_id) const {
  if (machine_id < 0 || machine_id >= machines()) {
    throw std::invalid_argument("shift: machine id out of range");
  }
  return shifts_[machine_id];
}

Vector QuadraticProblem::gradient(int machine_id, const Vector& x,
                                  const Sample& z) const {
  return quadratic_gradient(x, z, shift(machine_id), L_, ball_);
}

double QuadraticProblem::loss(int machine_id, const Vector& x,
                              const Sample& z) const {
  const Vector& b = shift(machine_id);
  Vector target(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    target[j] = b[j] + static_cast<double>(z.features[j]);
  }
  target = project(target, ball_);
  const double d = l2_dist(x, target);
  return 0.5 * L_ * d * d;
}

Vector QuadraticProblem::mean_gradient(const Vector& x) const {
  // Shifts sum to zero exactly and the perturbation mean is zero by radial
  // symmetry of the (negligible) clipping, so grad f(x) = L x.
  Vector g(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) g[j] = L_ * x[j];
  return g;
}

Vector QuadraticProblem::machine_mean_gradient(int machine_id,
                                               const Vector& x) const {
  const Vector& b = shift(machine_id);
  Vector g(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) g[j] = L_ * (x[j] - b[j]);
  return g;
}

double QuadraticProblem::excess_loss(const Vector& x) const {
  const double n = l2_norm(x);
  return 0.5 * L_ * n * n;  // x* = 0
}

std::vector<MachineDataset> QuadraticProblem::make_datasets(
    int per_machine, std::uint64_t master_seed) const {
  if (per_machine < 0) {
    throw std::invalid_argument("make_datasets: negative per_machine");
  }
  std::vector<MachineDataset> out(machines());
  for (int i = 0; i < machines(); ++i) {
    RngStream stream(master_seed, StreamPurpose::kData,
                     static_cast<std::uint64_t>(i));
    out[i].samples.resize(per_machine);
    for (auto& s : out[i].samples) {
      s.features.resize(dim_);
      for (auto& v : s.features) {
        v = static_cast<float>(nu_std_ * stream.next_gaussian());
      }
      s.label = 0;
    }
  }
  return out;
}

std::unique_ptr<Problem> make_problem(const ProblemSpec& spec, int machines) {
  switch (spec.family) {
    case ObjectiveFamily::kMnistLogistic:
      return std::make_unique<LogisticProblem>(spec);
    case ObjectiveFamily::kQuadratic:
      return std::make_unique<QuadraticProblem>(spec, machines);
  }
  throw std::invalid_argument("make_problem: unknown objective family");
}

}  // namespace dpfed
