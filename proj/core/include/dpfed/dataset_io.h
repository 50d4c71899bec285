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

#ifndef DPFED_DATASET_IO_H_
#define DPFED_DATASET_IO_H_

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include "dpfed/objectives.h"

namespace dpfed {

// Reads `label,f1,...,f<features>` rows. Labels must be nonnegative integers;
// features must be finite reals in [0, 1]. A constant 1.0 bias coordinate is
// appended to every row, so the stored feature count is features + 1.
// Malformed input throws std::runtime_error naming the 1-based line.
std::vector<Sample> read_csv_samples(std::istream& in, const std::string& name,
                                     int features = 784);
std::vector<Sample> load_csv_samples(const std::string& path,
                                     int features = 784);

// Shuffles the rows with the seeded shuffle stream, then hands out contiguous
// blocks of per_machine rows to machines 0..machines-1 in order. per_machine
// of 0 means rows / machines. Throws std::runtime_error if there are fewer
// than machines * per_machine rows.
std::vector<MachineDataset> partition_samples(std::vector<Sample> samples,
                                              int machines, int per_machine,
                                              std::uint64_t seed);

// load_csv_samples followed by partition_samples.
std::vector<MachineDataset> load_dataset(const std::string& path, int machines,
                                         int per_machine, std::uint64_t seed);

}  // namespace dpfed

#endif  // DPFED_DATASET_IO_H_
