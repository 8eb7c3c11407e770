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

#include "svak/common.h"

#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <iostream>
#include <limits>
#include <mutex>
#include <thread>
#include <vector>

namespace svak {

const char *ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput: return "invalid-input";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kKindMismatch: return "kind-mismatch";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kFingerprint: return "fingerprint-mismatch";
    case ErrorCode::kNumerical: return "numerical";
    case ErrorCode::kNoData: return "no-data";
  }
  return "unknown";
}

void Fail(ErrorCode code, const std::string &msg) { throw Error(code, msg); }

namespace {
std::atomic<int> g_log_level{static_cast<int>(LogLevel::kInfo)};
std::atomic<int> g_num_threads{1};
std::mutex g_log_mutex;
}  // namespace

void SetLogLevel(LogLevel level) { g_log_level = static_cast<int>(level); }
LogLevel GetLogLevel() { return static_cast<LogLevel>(g_log_level.load()); }

void Log(LogLevel level, std::string_view tag, const std::string &msg) {
  static const char *kNames[] = {"DEBUG", "INFO", "WARN", "ERROR"};
  std::lock_guard<std::mutex> lock(g_log_mutex);
  std::cerr << "[" << tag << "] " << kNames[static_cast<int>(level)] << ": "
            << msg << "\n";
}

void Fingerprint::Add(std::span<const std::uint8_t> bytes) {
  for (std::uint8_t b : bytes) {
    h_ ^= b;
    h_ *= 0x100000001b3ULL;
  }
}

void Fingerprint::Add(std::string_view s) {
  Add(static_cast<std::int64_t>(s.size()));
  Add(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t *>(s.data()), s.size()));
}

void Fingerprint::Add(std::int64_t v) {
  std::uint8_t buf[8];
  auto u = static_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<std::uint8_t>(u >> (8 * i));
  Add(std::span<const std::uint8_t>(buf, 8));
}

void Fingerprint::Add(double v) { Add(std::bit_cast<std::int64_t>(v)); }

void Fingerprint::Add(const Matrix &m) {
  Add(static_cast<std::int64_t>(m.rows()));
  Add(static_cast<std::int64_t>(m.cols()));
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) Add(m(i, j));
}

void Fingerprint::Add(const Vector &v) {
  Add(static_cast<std::int64_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) Add(v(i));
}

std::string FingerprintHex(std::uint64_t fp) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fp));
  return buf;
}

std::uint64_t DeriveSeed(std::uint64_t root, std::string_view label) {
  Fingerprint f;
  f.Add(label);
  // splitmix64 finalizer over the mixed value
  std::uint64_t z = root ^ f.value();
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void SetNumThreads(int n) { g_num_threads = n < 1 ? 1 : n; }
int NumThreads() { return g_num_threads.load(); }

void ParallelFor(std::size_t n, const std::function<void(std::size_t)> &fn) {
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(NumThreads()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto &t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

double LogSumExp(const Eigen::Ref<const Eigen::RowVectorXd> &v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace svak
