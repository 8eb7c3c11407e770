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

#ifndef SVAK_IVECTOR_H_
#define SVAK_IVECTOR_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "svak/archive.h"
#include "svak/common.h"
#include "svak/gmm.h"

namespace svak {

enum class EmbeddingSource { kSingleUtterance, kAveraged };
enum class EmbeddingSpace { kRawTv, kLdaWhitened };

struct Embedding {
  Vector vector;
  std::string speaker_id;
  EmbeddingSource source = EmbeddingSource::kSingleUtterance;
  EmbeddingSpace space = EmbeddingSpace::kRawTv;

  Eigen::Index dim() const { return vector.size(); }
  bool operator==(const Embedding &) const = default;
};

// Total-variability model: supervector offsets M = m + T w, w ~ N(0, I).
// T is (C*D) x R with rows grouped per component (row c*D + d). The UBM means
// and variances are kept so that extraction needs only the statistics.
class TvModel {
 public:
  static constexpr ModelKind kKind = ModelKind::kTv;

  TvModel() = default;
  TvModel(Matrix t_matrix, const DiagGmm &ubm);
  TvModel(Matrix t_matrix, Matrix ubm_means, Matrix ubm_vars,
          std::uint64_t ubm_fingerprint);

  int Rank() const { return static_cast<int>(t_.cols()); }
  int NumComponents() const { return static_cast<int>(ubm_means_.rows()); }
  int FeatureDim() const { return static_cast<int>(ubm_means_.cols()); }
  const Matrix &t_matrix() const { return t_; }
  const Matrix &ubm_means() const { return ubm_means_; }
  const Matrix &ubm_variances() const { return ubm_vars_; }
  std::uint64_t ubm_fingerprint() const { return ubm_fp_; }

  // Centred first-order stats, flattened component-major (length C*D).
  Vector CenteredStats(const BaumWelchStats &stats) const;
  // Precision of the posterior over w: I + sum_c N_c T_c' inv(S_c) T_c.
  Matrix PosteriorPrecision(const Vector &n) const;
  // T' inv(S) ftilde.
  Vector Projection(const Vector &centered) const;

  std::uint64_t Fingerprint() const;
  void Write(ArchiveWriter &w) const;
  static TvModel Read(ArchiveReader &r);
  bool operator==(const TvModel &o) const {
    return t_ == o.t_ && ubm_means_ == o.ubm_means_ &&
           ubm_vars_ == o.ubm_vars_ && ubm_fp_ == o.ubm_fp_;
  }

 private:
  void Precompute();

  Matrix t_;
  Matrix ubm_means_, ubm_vars_;
  std::uint64_t ubm_fp_ = 0;
  // derived
  Matrix inv_var_t_;                 // inv(S) T, (C*D) x R
  std::vector<Matrix> comp_quad_;    // T_c' inv(S_c) T_c, R x R each
};

struct TvTrainOptions {
  int rank = 400;
  int em_iters = 5;
  std::uint64_t seed = 0;
};

struct TvTrainResult {
  TvModel model;
  // sum over utterances of -0.5 log|L| + 0.5 b' inv(L) b, i.e. the
  // T-dependent part of the marginal log-likelihood, before the first update
  // and after every update.
  std::vector<double> objective_history;
};

TvTrainResult TrainTv(std::span<const BaumWelchStats> stats, const DiagGmm &ubm,
                      const TvTrainOptions &opts);

struct IvectorPosterior {
  Vector mean;        // w
  Matrix precision;   // L
};

IvectorPosterior IvectorPosteriorOf(const TvModel &tv, const BaumWelchStats &stats);

// Posterior mean w = inv(L) T' inv(S) ftilde.
Embedding ExtractEmbedding(const TvModel &tv, const BaumWelchStats &stats,
                           const std::string &speaker_id = "");

Embedding AverageEmbeddings(std::span<const Embedding> embeddings);

}  // namespace svak

#endif  // SVAK_IVECTOR_H_
