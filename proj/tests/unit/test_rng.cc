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

#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "dpfed/rng.h"
#include "dpfed/vec.h"

namespace {

using dpfed::RngStream;
using dpfed::StreamPurpose;
using dpfed::Vector;

TEST_CASE("identical identities reproduce identical sequences") {
  RngStream a(99, StreamPurpose::kNoise, 7);
  RngStream b(99, StreamPurpose::kNoise, 7);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  for (int i = 0; i < 100; ++i) CHECK(a.next_gaussian() == b.next_gaussian());
}

TEST_CASE("streams differ across seed, purpose, and index") {
  RngStream base(1, StreamPurpose::kNoise, 0);
  RngStream other_seed(2, StreamPurpose::kNoise, 0);
  RngStream other_purpose(1, StreamPurpose::kData, 0);
  RngStream other_index(1, StreamPurpose::kNoise, 1);
  std::uint64_t u = base.next_u64();
  CHECK(u != other_seed.next_u64());
  CHECK(u != other_purpose.next_u64());
  CHECK(u != other_index.next_u64());
}

// Pinned first outputs. These freeze the generator and the stream-derivation
// scheme: any change to either silently invalidates every recorded run, so a
// change here must be deliberate.
TEST_CASE("golden stream outputs") {
  RngStream a(1, StreamPurpose::kServer, 0);
  CHECK(a.next_u64() == 17240557090747171305ull);
  CHECK(a.next_u64() == 14403658321513375483ull);
  CHECK(a.next_u64() == 5694721335896835271ull);

  RngStream b(1, StreamPurpose::kNoise, 5);
  CHECK(b.next_double() == doctest::Approx(0.42957030362345183).epsilon(1e-15));
  CHECK(b.next_double() == doctest::Approx(0.57379623505090249).epsilon(1e-15));

  RngStream c(42, StreamPurpose::kData, 3);
  CHECK(c.next_gaussian() ==
        doctest::Approx(-1.1472859184549691).epsilon(1e-15));
  CHECK(c.next_gaussian() ==
        doctest::Approx(2.0545093113209347).epsilon(1e-15));
  CHECK(c.next_gaussian() ==
        doctest::Approx(-0.18196292076495535).epsilon(1e-15));

  RngStream d(7, StreamPurpose::kShuffle, 0);
  CHECK(d.next_below(10) == 5);
  CHECK(d.next_below(10) == 3);
  CHECK(d.next_below(10) == 5);
}

TEST_CASE("next_double stays in [0,1) with a sane mean") {
  RngStream rng(3, StreamPurpose::kCheck, 0);
  const int n = 20000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    double u = rng.next_double();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
  }
  double se = 1.0 / std::sqrt(12.0 * n);
  CHECK(std::abs(sum / n - 0.5) < 5.0 * se);
}

TEST_CASE("next_below is in range and roughly uniform") {
  RngStream rng(4, StreamPurpose::kCheck, 1);
  const std::uint64_t n = 6;
  const int draws = 60000;
  std::vector<int> counts(n, 0);
  for (int i = 0; i < draws; ++i) {
    std::uint64_t v = rng.next_below(n);
    REQUIRE(v < n);
    ++counts[static_cast<int>(v)];
  }
  double expect = static_cast<double>(draws) / static_cast<double>(n);
  double se = std::sqrt(expect * (1.0 - 1.0 / static_cast<double>(n)));
  for (int c : counts) CHECK(std::abs(c - expect) < 5.0 * se);
  CHECK(rng.next_below(1) == 0);
}

TEST_CASE("gaussian moments") {
  RngStream rng(5, StreamPurpose::kCheck, 2);
  const int n = 200000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    double g = rng.next_gaussian();
    sum += g;
    sum_sq += g * g;
  }
  double mean = sum / n;
  double var = sum_sq / n - mean * mean;
  CHECK(std::abs(mean) < 5.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(var - 1.0) < 5.0 * std::sqrt(2.0 / n));
}

TEST_CASE("fill_gaussian scales the unit draws exactly") {
  RngStream unit(11, StreamPurpose::kNoise, 2);
  RngStream scaled(11, StreamPurpose::kNoise, 2);
  Vector a(33), b(33);
  unit.fill_gaussian(a, 1.0);
  scaled.fill_gaussian(b, 2.5);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] == 2.5 * a[i]);
}

TEST_CASE("fill_gaussian continues one stream, odd lengths included") {
  // The Box-Muller spare must carry across calls: two fills of 3 equal one
  // fill of 6 from the same identity.
  RngStream split(13, StreamPurpose::kNoise, 0);
  RngStream whole(13, StreamPurpose::kNoise, 0);
  Vector first(3), second(3), all(6);
  split.fill_gaussian(first, 1.0);
  split.fill_gaussian(second, 1.0);
  whole.fill_gaussian(all, 1.0);
  for (int i = 0; i < 3; ++i) {
    CHECK(first[i] == all[i]);
    CHECK(second[i] == all[3 + i]);
  }
}

}  // namespace
