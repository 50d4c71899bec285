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

#include "dpfed/dataset_io.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>

#include "dpfed/rng.h"

namespace dpfed {
namespace {

[[noreturn]] void fail(const std::string& name, long long line_no,
                       const std::string& message) {
  throw std::runtime_error(name + " line " + std::to_string(line_no) + ": " +
                           message);
}

}  // namespace

std::vector<Sample> read_csv_samples(std::istream& in, const std::string& name,
                                     int features) {
  if (features <= 0) {
    throw std::invalid_argument("feature count must be positive");
  }
  std::vector<Sample> out;
  std::string raw;
  long long line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    const char* p = line.data();
    const char* end = p + line.size();

    Sample s;
    {
      auto [ptr, ec] = std::from_chars(p, end, s.label);
      if (ec != std::errc() || ptr == end || *ptr != ',') {
        fail(name, line_no, "expected an integer label followed by ','");
      }
      if (s.label < 0) {
        fail(name, line_no,
             "negative label " + std::to_string(s.label));
      }
      p = ptr + 1;
    }

    s.features.reserve(static_cast<std::size_t>(features) + 1);
    for (int j = 0; j < features; ++j) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) {
        fail(name, line_no,
             "feature " + std::to_string(j + 1) + " is not a number");
      }
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        fail(name, line_no,
             "feature " + std::to_string(j + 1) + " outside [0, 1]");
      }
      s.features.push_back(static_cast<float>(v));
      p = ptr;
      if (j + 1 < features) {
        if (p == end || *p != ',') {
          fail(name, line_no,
               "expected " + std::to_string(features + 1) + " fields");
        }
        ++p;
      }
    }
    if (p != end) {
      fail(name, line_no,
           "expected " + std::to_string(features + 1) + " fields");
    }
    s.features.push_back(1.0f);  // bias coordinate
    out.push_back(std::move(s));
  }
  if (in.bad()) {
    throw std::runtime_error(name + ": read error");
  }
  return out;
}

std::vector<Sample> load_csv_samples(const std::string& path, int features) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open dataset file: " + path);
  }
  return read_csv_samples(in, path, features);
}

std::vector<MachineDataset> partition_samples(std::vector<Sample> samples,
                                              int machines, int per_machine,
                                              std::uint64_t seed) {
  if (machines <= 0) {
    throw std::invalid_argument("machines must be positive");
  }
  if (per_machine < 0) {
    throw std::invalid_argument("per_machine must be nonnegative");
  }
  const long long n = static_cast<long long>(samples.size());
  const long long per = per_machine > 0 ? per_machine : n / machines;
  if (per <= 0 || per * machines > n) {
    throw std::runtime_error(
        "dataset has " + std::to_string(n) + " rows; need at least " +
        std::to_string(per * machines) + " (machines=" +
        std::to_string(machines) + ", per_machine=" + std::to_string(per) +
        ")");
  }

  RngStream shuffle(seed, StreamPurpose::kShuffle);
  for (long long j = n - 1; j > 0; --j) {
    const auto k = shuffle.next_below(static_cast<std::uint64_t>(j) + 1);
    std::swap(samples[static_cast<std::size_t>(j)],
              samples[static_cast<std::size_t>(k)]);
  }

  std::vector<MachineDataset> out(static_cast<std::size_t>(machines));
  auto it = samples.begin();
  for (int i = 0; i < machines; ++i) {
    out[static_cast<std::size_t>(i)].samples.assign(
        std::make_move_iterator(it), std::make_move_iterator(it + per));
    it += per;
  }
  return out;
}

std::vector<MachineDataset> load_dataset(const std::string& path, int machines,
                                         int per_machine, std::uint64_t seed) {
  return partition_samples(load_csv_samples(path), machines, per_machine,
                           seed);
}

}  // namespace dpfed
