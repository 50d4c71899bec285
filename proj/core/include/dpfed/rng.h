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

#ifndef DPFED_RNG_H_
#define DPFED_RNG_H_

#include <cstdint>

#include "dpfed/vec.h"

namespace dpfed {

// Named random streams derived from one master seed. Every consumer of
// randomness (each machine's noise, each machine's data generation, the
// server's participant sampling, the dataset shuffle) owns its own stream so
// that trajectories stay aligned across algorithm variants: e.g. changing rho
// rescales the noise without disturbing the participation draw sequence.
//
// The generator is xoshiro256++ seeded through splitmix64. std::mt19937 and
// the std <random> distributions are deliberately not used: their output
// sequences are implementation-defined per standard library, which would break
// byte-identical metrics across toolchains.
enum class StreamPurpose : std::uint64_t {
  kServer = 1,   // participant sampling (one per run)
  kShuffle = 2,  // dataset row shuffle (one per load)
  kNoise = 3,    // per-machine privacy noise (index = machine id; index = M
                 // for the trusted server's own noise)
  kData = 4,     // per-machine synthetic sample generation (index = machine id)
  kCheck = 5,    // verification-suite internal draws
};

class RngStream {
 public:
  // Identifies the stream by (master seed, purpose, index) and fast-forwards
  // nothing: streams with distinct identities are statistically independent.
  RngStream(std::uint64_t master_seed, StreamPurpose purpose,
            std::uint64_t index = 0);

  std::uint64_t next_u64();

  // Uniform double in [0, 1).
  double next_double();

  // Unbiased uniform integer in [0, n); n must be positive.
  std::uint64_t next_below(std::uint64_t n);

  // Standard normal via Box-Muller (one spare cached).
  double next_gaussian();

  // Overwrites out with iid N(0, stddev^2) per coordinate.
  void fill_gaussian(Vector& out, double stddev);

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace dpfed

#endif  // DPFED_RNG_H_
