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

#ifndef DPFED_OBJECTIVES_H_
#define DPFED_OBJECTIVES_H_

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "dpfed/vec.h"

namespace dpfed {

// One data point. Features are stored as float32 (the MNIST run holds 60k x
// 785 of them); all arithmetic on top of them is double. For the synthetic
// quadratic the "features" are the per-sample Gaussian perturbation and the
// label is unused.
struct Sample {
  std::vector<float> features;
  int label = 0;
};

// A machine's local data with single-pass discipline: each sample is consumed
// at most once per run and the cursor only moves forward.
struct MachineDataset {
  std::vector<Sample> samples;
  int cursor = 0;

  int remaining() const { return static_cast<int>(samples.size()) - cursor; }
  bool exhausted() const { return remaining() <= 0; }
  // Throws std::runtime_error when exhausted.
  const Sample& next();
};

// Every constant consumed by calibration, step sizes, and bound checks.
struct ObjectiveConstants {
  double G = 0.0;        // Lipschitz bound on stochastic gradients
  double L = 0.0;        // smoothness bound
  double D = 0.0;        // diameter of the feasible set
  double S = 0.0;        // per-round sensitivity, always G + 2 L D
  double sigma = 0.0;    // gradient-variance bound
  double sigma_L = 0.0;  // smoothness-variance bound
  double xi = 0.0;       // heterogeneity bound
  double xi_L = 0.0;     // smoothness-heterogeneity bound
  double sigma_tilde = 0.0;  // sigma + 2 sigma_L D
  double xi_tilde = 0.0;     // xi + 2 xi_L D
  double g_star = 0.0;       // ||grad f(x*)||, or the G upper bound if unknown
};

// (sigma_tilde, xi_tilde) recomputed from the raw fields.
std::pair<double, double> tilde_constants(const ObjectiveConstants& c);

// Throws std::invalid_argument if the constants violate their ranges
// (sigma, xi in [0,G]; sigma_L, xi_L in [0,L]; S = G + 2 L D).
void validate_constants(const ObjectiveConstants& c);

enum class ObjectiveFamily {
  kMnistLogistic,
  kQuadratic,
};

// Full problem description as read from a config file.
struct ProblemSpec {
  ObjectiveFamily family = ObjectiveFamily::kQuadratic;
  double diameter = 0.1;  // D; the feasible set is the origin ball radius D/2

  // logistic
  int num_classes = 10;
  int feature_dim = 785;  // includes the appended bias coordinate

  // quadratic
  int dim = 50;
  double L = 10.0;
  double sigma = 0.2;  // gradient-noise second moment, exact by construction
  double xi = 0.05;    // heterogeneity; machine shifts lie on a circle of
                       // radius xi / L
};

// Constants for the given family. MNIST-logistic with D=0.1 yields
// G = sqrt(2*785) ~ 39.6, L = 785/2 = 392.5, S = G + 2LD ~ 118.1.
// Throws std::invalid_argument for inconsistent specs.
ObjectiveConstants derive_constants(const ProblemSpec& spec);

// Gradient of the multiclass cross-entropy at flattened weights w
// (num_classes x feature_dim, class-major) for one sample.
Vector logistic_gradient(const Vector& w, const Sample& s, int num_classes);
double logistic_loss(const Vector& w, const Sample& s, int num_classes);

// Gradient of f_i(x; z) = (L/2) ||x - target||^2 with
// target = project(machine_shift + perturbation(z), k).
Vector quadratic_gradient(const Vector& w, const Sample& s,
                          const Vector& machine_shift, double L, const Ball& k);

// Uniform oracle facade consumed by the engine. Gradient/loss calls are pure;
// implementations are safe to share across concurrent runs.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual int dim() const = 0;
  virtual const ObjectiveConstants& constants() const = 0;
  virtual const Ball& feasible_set() const = 0;

  virtual Vector gradient(int machine_id, const Vector& x,
                          const Sample& z) const = 0;
  virtual double loss(int machine_id, const Vector& x,
                      const Sample& z) const = 0;

  // Population-level quantities; available for the synthetic family only.
  virtual bool has_population_oracle() const { return false; }
  virtual Vector mean_gradient(const Vector& x) const;
  virtual Vector machine_mean_gradient(int machine_id, const Vector& x) const;
  virtual double excess_loss(const Vector& x) const;

  // Classification; 0 means "not a classifier".
  virtual int num_classes() const { return 0; }
  virtual int predict(const Vector& x, const Sample& z) const;
};

class LogisticProblem : public Problem {
 public:
  LogisticProblem(const ProblemSpec& spec);

  int dim() const override { return dim_; }
  const ObjectiveConstants& constants() const override { return constants_; }
  const Ball& feasible_set() const override { return ball_; }
  Vector gradient(int machine_id, const Vector& x,
                  const Sample& z) const override;
  double loss(int machine_id, const Vector& x, const Sample& z) const override;
  int num_classes() const override { return classes_; }
  int predict(const Vector& x, const Sample& z) const override;

 private:
  int classes_;
  int features_;
  int dim_;
  Ball ball_;
  ObjectiveConstants constants_;
};

// Heterogeneous quadratic with exactly known sigma, xi and sigma_L = xi_L = 0:
// machine shifts b_i are equally spaced on a circle of radius xi/L in the
// first two coordinates, re-centered so that sum_i b_i = 0 exactly, and the
// per-sample perturbation is N(0, (sigma/(L sqrt(d)))^2 I). Targets are
// clipped into the feasible set, which keeps G = L*D a sure bound; the spec
// enforces a margin that makes the clipping probability negligible (~e^-32)
// so the configured sigma is exact to far below Monte Carlo resolution.
class QuadraticProblem : public Problem {
 public:
  // machines = M. Throws std::invalid_argument if the noise margin
  // r_b + (sigma/L)(1 + 8/sqrt(d)) <= D/2 fails or dims are inconsistent.
  QuadraticProblem(const ProblemSpec& spec, int machines);

  int dim() const override { return dim_; }
  const ObjectiveConstants& constants() const override { return constants_; }
  const Ball& feasible_set() const override { return ball_; }
  Vector gradient(int machine_id, const Vector& x,
                  const Sample& z) const override;
  double loss(int machine_id, const Vector& x, const Sample& z) const override;

  bool has_population_oracle() const override { return true; }
  Vector mean_gradient(const Vector& x) const override;
  Vector machine_mean_gradient(int machine_id, const Vector& x) const override;
  double excess_loss(const Vector& x) const override;

  int machines() const { return static_cast<int>(shifts_.size()); }
  const Vector& shift(int machine_id) const;
  double perturbation_std() const { return nu_std_; }

  // Per-machine synthetic datasets: per_machine fresh perturbation samples
  // drawn from each machine's own kData stream.
  std::vector<MachineDataset> make_datasets(int per_machine,
                                            std::uint64_t master_seed) const;

 private:
  int dim_;
  double L_;
  double nu_std_;
  Ball ball_;
  std::vector<Vector> shifts_;
  ObjectiveConstants constants_;
};

// Factory over the spec family. For kMnistLogistic `machines` is ignored.
std::unique_ptr<Problem> make_problem(const ProblemSpec& spec, int machines);

}  // namespace dpfed

#endif  // DPFED_OBJECTIVES_H_
