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

#ifndef SVAK_COMMON_H_
#define SVAK_COMMON_H_

#include <cstdint>
#include <functional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>
#include <algorithm>

#include <Eigen/Dense>

namespace svak {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class ErrorCode {
  kInvalidInput,       // precondition on arguments violated
  kIo,                 // file missing or unreadable
  kFormat,             // malformed file contents
  kKindMismatch,       // archive holds a different model kind
  kDimensionMismatch,  // shapes of operands disagree
  kFingerprint,        // model chain built on a different parent model
  kNumerical,          // factorization failure, non-finite values
  kNoData,             // nothing left to work on (empty set, no voiced frames)
};

const char *ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void Fail(ErrorCode code, const std::string &msg);

// Subsystem-tagged log lines on stderr, e.g. "[gmm] iter 3 ...".
enum class LogLevel { kDebug = 0, kInfo = 1, kWarning = 2, kError = 3 };
void SetLogLevel(LogLevel level);
LogLevel GetLogLevel();
void Log(LogLevel level, std::string_view tag, const std::string &msg);

#define SVAK_LOG(level, tag, expr)                                  \
  do {                                                              \
    if (static_cast<int>(level) >= static_cast<int>(::svak::GetLogLevel())) { \
      std::ostringstream svak_log_os_;                              \
      svak_log_os_ << expr;                                         \
      ::svak::Log(level, tag, svak_log_os_.str());                  \
    }                                                               \
  } while (0)
#define SVAK_INFO(tag, expr) SVAK_LOG(::svak::LogLevel::kInfo, tag, expr)
#define SVAK_WARN(tag, expr) SVAK_LOG(::svak::LogLevel::kWarning, tag, expr)

// 64-bit FNV-1a, used to fingerprint model parameters so that downstream
// models can verify which parent they were trained against.
class Fingerprint {
 public:
  void Add(std::span<const std::uint8_t> bytes);
  void Add(std::string_view s);
  void Add(std::int64_t v);
  void Add(double v);
  void Add(const Matrix &m);
  void Add(const Vector &v);
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

std::string FingerprintHex(std::uint64_t fp);

// Child seed for a labeled component, derived from a root seed.
std::uint64_t DeriveSeed(std::uint64_t root, std::string_view label);

// Worker count used by ParallelFor. Results never depend on it: callers write
// into per-index slots and reduce in index order.
void SetNumThreads(int n);
int NumThreads();
void ParallelFor(std::size_t n, const std::function<void(std::size_t)> &fn);

// Reduces items [0, n) into one accumulator. Items are grouped into chunks of
// fixed size, chunks run in parallel in fixed-size waves, and chunk results
// are merged in chunk order, so the result is independent of NumThreads().
template <typename Acc, typename MakeFn, typename AddFn, typename MergeFn>
Acc ChunkedReduce(std::size_t n, std::size_t chunk, MakeFn make, AddFn add,
                  MergeFn merge) {
  constexpr std::size_t kChunksPerWave = 8;
  Acc total = make();
  const std::size_t nchunks = (n + chunk - 1) / chunk;
  for (std::size_t c0 = 0; c0 < nchunks; c0 += kChunksPerWave) {
    const std::size_t m = std::min(kChunksPerWave, nchunks - c0);
    std::vector<Acc> accs;
    accs.reserve(m);
    for (std::size_t i = 0; i < m; ++i) accs.push_back(make());
    ParallelFor(m, [&](std::size_t i) {
      const std::size_t lo = (c0 + i) * chunk;
      const std::size_t hi = std::min(n, lo + chunk);
      for (std::size_t k = lo; k < hi; ++k) add(accs[i], k);
    });
    for (auto &a : accs) merge(total, a);
  }
  return total;
}

// log(sum(exp(v))) over a row; -inf for an all -inf row.
double LogSumExp(const Eigen::Ref<const Eigen::RowVectorXd> &v);

}  // namespace svak

#endif  // SVAK_COMMON_H_
