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

#include "svak/archive.h"

#include <bit>
#include <fstream>
#include <iterator>

namespace svak {

const char *ModelKindName(ModelKind kind) {
  switch (kind) {
    case ModelKind::kUbm: return "ubm";
    case ModelKind::kTv: return "tv";
    case ModelKind::kLda: return "lda";
    case ModelKind::kWhitener: return "whitener";
    case ModelKind::kPlda: return "plda";
    case ModelKind::kSystem: return "system";
    case ModelKind::kFeatures: return "features";
  }
  return "unknown";
}

namespace {

void PutLe(std::string *buf, std::uint64_t v, int nbytes) {
  for (int i = 0; i < nbytes; ++i)
    buf->push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t GetLe(const std::string &buf, std::size_t pos, int nbytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < nbytes; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i]))
         << (8 * i);
  return v;
}

}  // namespace

ArchiveWriter::ArchiveWriter(ModelKind kind) {
  buf_.append(kArchiveMagic);
  PutLe(&buf_, static_cast<std::uint32_t>(kind), 4);
  PutLe(&buf_, kArchiveVersion, 4);
}

void ArchiveWriter::WriteU64(std::uint64_t v) { PutLe(&buf_, v, 8); }

void ArchiveWriter::WriteF64(double v) {
  WriteU64(std::bit_cast<std::uint64_t>(v));
}

void ArchiveWriter::WriteString(std::string_view s) {
  WriteU64(s.size());
  buf_.append(s);
}

void ArchiveWriter::WriteVector(const Vector &v) {
  WriteU64(static_cast<std::uint64_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) WriteF64(v(i));
}

void ArchiveWriter::WriteMatrix(const Matrix &m) {
  WriteU64(static_cast<std::uint64_t>(m.rows()));
  WriteU64(static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) WriteF64(m(i, j));
}

void ArchiveWriter::Save(const std::filesystem::path &path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) Fail(ErrorCode::kIo, "cannot open for writing: " + path.string());
  os.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
  if (!os) Fail(ErrorCode::kIo, "write failed: " + path.string());
}

ArchiveReader::ArchiveReader(std::string bytes, ModelKind expected)
    : buf_(std::move(bytes)) {
  const std::size_t header = kArchiveMagic.size() + 8;
  if (buf_.size() < header ||
      std::string_view(buf_).substr(0, kArchiveMagic.size()) != kArchiveMagic)
    Fail(ErrorCode::kFormat, "not a model archive (bad magic)");
  pos_ = kArchiveMagic.size();
  const auto kind = static_cast<std::uint32_t>(GetLe(buf_, pos_, 4));
  const auto version = static_cast<std::uint32_t>(GetLe(buf_, pos_ + 4, 4));
  pos_ += 8;
  if (kind != static_cast<std::uint32_t>(expected))
    Fail(ErrorCode::kKindMismatch,
         std::string("archive holds model kind '") +
             ModelKindName(static_cast<ModelKind>(kind)) + "', expected '" +
             ModelKindName(expected) + "'");
  if (version != kArchiveVersion)
    Fail(ErrorCode::kFormat,
         "unsupported archive version " + std::to_string(version));
}

ArchiveReader ArchiveReader::Open(const std::filesystem::path &path,
                                  ModelKind expected) {
  std::ifstream is(path, std::ios::binary);
  if (!is) Fail(ErrorCode::kIo, "cannot open model archive: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(is)),
                    std::istreambuf_iterator<char>());
  return ArchiveReader(std::move(bytes), expected);
}

void ArchiveReader::Need(std::size_t n) const {
  if (buf_.size() - pos_ < n)
    Fail(ErrorCode::kFormat, "truncated model archive payload");
}

std::uint64_t ArchiveReader::ReadU64() {
  Need(8);
  std::uint64_t v = GetLe(buf_, pos_, 8);
  pos_ += 8;
  return v;
}

double ArchiveReader::ReadF64() { return std::bit_cast<double>(ReadU64()); }

std::string ArchiveReader::ReadString() {
  const std::uint64_t n = ReadU64();
  Need(n);
  std::string s = buf_.substr(pos_, n);
  pos_ += n;
  return s;
}

Vector ArchiveReader::ReadVector() {
  const std::uint64_t n = ReadU64();
  Need(n * 8);
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = ReadF64();
  return v;
}

Matrix ArchiveReader::ReadMatrix() {
  const std::uint64_t rows = ReadU64();
  const std::uint64_t cols = ReadU64();
  if (cols != 0 && rows > (buf_.size() - pos_) / 8 / cols)
    Fail(ErrorCode::kFormat, "truncated model archive payload");
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = ReadF64();
  return m;
}

void ArchiveReader::ExpectEnd() const {
  if (pos_ != buf_.size())
    Fail(ErrorCode::kFormat, "trailing bytes after model payload");
}

}  // namespace svak
