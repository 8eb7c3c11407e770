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

#ifndef SVAK_ARCHIVE_H_
#define SVAK_ARCHIVE_H_

// Versioned binary container for trained models.
//
// Layout: the 5-byte magic "SVAK1", a little-endian uint32 model kind and a
// uint32 version, then the payload. Payload fields are little-endian: integers
// as 64-bit, reals as IEEE-754 binary64, strings as (u64 length, bytes),
// matrices as (u64 rows, u64 cols, column-major f64 data). Nothing is
// compressed, so save/load round-trips are bit-exact.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "svak/common.h"

namespace svak {

enum class ModelKind : std::uint32_t {
  kUbm = 1,
  kTv = 2,
  kLda = 3,
  kWhitener = 4,
  kPlda = 5,
  kSystem = 6,
  kFeatures = 7,
};

const char *ModelKindName(ModelKind kind);

inline constexpr std::string_view kArchiveMagic = "SVAK1";
inline constexpr std::uint32_t kArchiveVersion = 1;

class ArchiveWriter {
 public:
  explicit ArchiveWriter(ModelKind kind);

  void WriteU64(std::uint64_t v);
  void WriteI64(std::int64_t v) { WriteU64(static_cast<std::uint64_t>(v)); }
  void WriteF64(double v);
  void WriteString(std::string_view s);
  void WriteVector(const Vector &v);
  void WriteMatrix(const Matrix &m);

  const std::string &bytes() const { return buf_; }
  void Save(const std::filesystem::path &path) const;

 private:
  std::string buf_;
};

class ArchiveReader {
 public:
  // Validates magic, kind and version.
  ArchiveReader(std::string bytes, ModelKind expected);
  static ArchiveReader Open(const std::filesystem::path &path,
                            ModelKind expected);

  std::uint64_t ReadU64();
  std::int64_t ReadI64() { return static_cast<std::int64_t>(ReadU64()); }
  double ReadF64();
  std::string ReadString();
  Vector ReadVector();
  Matrix ReadMatrix();

  // Fails if unread bytes remain.
  void ExpectEnd() const;

 private:
  void Need(std::size_t n) const;

  std::string buf_;
  std::size_t pos_ = 0;
};

// Any type with `static constexpr ModelKind kKind`, `void Write(ArchiveWriter&)
// const` and `static T Read(ArchiveReader&)` can be stored.
template <typename T>
void SaveModel(const T &model, const std::filesystem::path &path) {
  ArchiveWriter w(T::kKind);
  model.Write(w);
  w.Save(path);
}

template <typename T>
T LoadModel(const std::filesystem::path &path) {
  ArchiveReader r = ArchiveReader::Open(path, T::kKind);
  T model = T::Read(r);
  r.ExpectEnd();
  return model;
}

}  // namespace svak

#endif  // SVAK_ARCHIVE_H_
