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
//
// Converts a gzipped IDX image/label pair (the standard MNIST distribution)
// into the dataset CSV the simulator consumes: one `label,f1,...,f784` row
// per image, features scaled to [0, 1]. Pixel values are written as the
// shortest decimal that round-trips float(k / 255), so loading the CSV
// reproduces the scaled pixels bit for bit.

#include <zlib.h>

#include <array>
#include <charconv>
#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace {

class GzFile {
 public:
  explicit GzFile(const std::string& path)
      : path_(path), file_(gzopen(path.c_str(), "rb")) {
    if (file_ == nullptr) {
      throw std::runtime_error("cannot open " + path);
    }
  }
  ~GzFile() {
    if (file_ != nullptr) gzclose(file_);
  }
  GzFile(const GzFile&) = delete;
  GzFile& operator=(const GzFile&) = delete;

  void read(void* buf, unsigned len) {
    if (gzread(file_, buf, len) != static_cast<int>(len)) {
      throw std::runtime_error("truncated or corrupt gzip stream: " + path_);
    }
  }

  std::uint32_t read_u32_be() {
    unsigned char b[4];
    read(b, 4);
    return (static_cast<std::uint32_t>(b[0]) << 24) |
           (static_cast<std::uint32_t>(b[1]) << 16) |
           (static_cast<std::uint32_t>(b[2]) << 8) |
           static_cast<std::uint32_t>(b[3]);
  }

 private:
  std::string path_;
  gzFile file_;
};

constexpr std::uint32_t kImagesMagic = 2051;
constexpr std::uint32_t kLabelsMagic = 2049;

void convert(const std::string& images_path, const std::string& labels_path,
             const std::string& out_path) {
  GzFile images(images_path);
  if (images.read_u32_be() != kImagesMagic) {
    throw std::runtime_error(images_path + " is not an IDX image file");
  }
  const std::uint32_t n = images.read_u32_be();
  const std::uint32_t rows = images.read_u32_be();
  const std::uint32_t cols = images.read_u32_be();
  if (rows * cols != 784) {
    throw std::runtime_error(images_path + ": expected 28x28 images");
  }

  GzFile labels(labels_path);
  if (labels.read_u32_be() != kLabelsMagic) {
    throw std::runtime_error(labels_path + " is not an IDX label file");
  }
  if (labels.read_u32_be() != n) {
    throw std::runtime_error("image and label counts differ");
  }
  std::vector<unsigned char> label(n);
  labels.read(label.data(), n);

  // All 256 possible pixel values, formatted once.
  std::array<std::string, 256> cell;
  for (int k = 0; k < 256; ++k) {
    char buf[32];
    auto [ptr, ec] =
        std::to_chars(buf, buf + sizeof(buf), static_cast<float>(k) / 255.0f);
    (void)ec;
    cell[static_cast<std::size_t>(k)].assign(buf, ptr);
  }

  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write " + out_path);
  }
  std::vector<unsigned char> pixels(784);
  std::string line;
  line.reserve(1 << 13);
  for (std::uint32_t i = 0; i < n; ++i) {
    images.read(pixels.data(), 784);
    line.clear();
    line += std::to_string(static_cast<int>(label[i]));
    for (const unsigned char px : pixels) {
      line += ',';
      line += cell[px];
    }
    line += '\n';
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
  }
  out.flush();
  if (!out) {
    throw std::runtime_error("failed writing " + out_path);
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 4) {
    std::cerr << "usage: mnist-csv <images-idx.gz> <labels-idx.gz> <out.csv>\n";
    return 2;
  }
  try {
    convert(argv[1], argv[2], argv[3]);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
