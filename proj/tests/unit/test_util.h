// Copyright (c) 2026 svak authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SVAK_TESTS_UNIT_TEST_UTIL_H_
#define SVAK_TESTS_UNIT_TEST_UTIL_H_

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "svak/common.h"
#include "svak/corpus.h"

namespace svak::testing {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    const auto *info = ::testing::UnitTest::GetInstance()->current_test_info();
    std::string name = "svak_test";
    if (info) name += std::string("_") + info->test_suite_name() + "_" + info->name();
    path_ = fs::temp_directory_path() / name;
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path &path() const { return path_; }
  fs::path operator/(const std::string &s) const { return path_ / s; }

 private:
  fs::path path_;
};

// Expects `fn` to throw svak::Error with the given code.
inline void ExpectErrorCode(const std::function<void()> &fn, ErrorCode code) {
  try {
    fn();
    ADD_FAILURE() << "expected svak::Error(" << ErrorCodeName(code) << ")";
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

// Hand-rolled 16-bit mono PCM writer, independent of the library's WAV code.
inline void WritePcm16(const fs::path &path, const std::vector<std::int16_t> &samples,
                       int rate) {
  std::ofstream os(path, std::ios::binary);
  auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  auto u16 = [&](std::uint16_t v) {
    os.put(static_cast<char>(v & 0xff));
    os.put(static_cast<char>(v >> 8));
  };
  const auto data_bytes = static_cast<std::uint32_t>(2 * samples.size());
  os.write("RIFF", 4);
  u32(36 + data_bytes);
  os.write("WAVEfmt ", 8);
  u32(16);
  u16(1);
  u16(1);
  u32(static_cast<std::uint32_t>(rate));
  u32(static_cast<std::uint32_t>(rate * 2));
  u16(2);
  u16(16);
  os.write("data", 4);
  u32(data_bytes);
  for (std::int16_t s : samples) u16(static_cast<std::uint16_t>(s));
}

inline Waveform Tone(double hz, double seconds, int rate, double amp = 0.5) {
  Waveform w;
  w.sample_rate_hz = rate;
  const auto n = static_cast<std::size_t>(seconds * rate);
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    w.samples[i] = amp * std::sin(2.0 * M_PI * hz * static_cast<double>(i) / rate);
  return w;
}

inline Matrix RandomMatrix(std::mt19937_64 &rng, int rows, int cols, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = n(rng);
  return m;
}

inline Vector RandomVector(std::mt19937_64 &rng, int dim, double sd = 1.0) {
  return RandomMatrix(rng, dim, 1, sd).col(0);
}

}  // namespace svak::testing

#endif  // SVAK_TESTS_UNIT_TEST_UTIL_H_
