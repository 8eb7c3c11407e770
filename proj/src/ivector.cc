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

#include "svak/ivector.h"

#include <cmath>
#include <random>

namespace svak {

TvModel::TvModel(Matrix t_matrix, const DiagGmm &ubm)
    : TvModel(std::move(t_matrix), ubm.means(), ubm.variances(),
              ubm.Fingerprint()) {}

TvModel::TvModel(Matrix t_matrix, Matrix ubm_means, Matrix ubm_vars,
                 std::uint64_t ubm_fingerprint)
    : t_(std::move(t_matrix)),
      ubm_means_(std::move(ubm_means)),
      ubm_vars_(std::move(ubm_vars)),
      ubm_fp_(ubm_fingerprint) {
  if (t_.cols() < 1) Fail(ErrorCode::kInvalidInput, "TV rank must be >= 1");
  if (t_.rows() != ubm_means_.size() || ubm_vars_.rows() != ubm_means_.rows() ||
      ubm_vars_.cols() != ubm_means_.cols())
    Fail(ErrorCode::kDimensionMismatch, "T-matrix rows != C*D of the UBM");
  if (!t_.allFinite()) Fail(ErrorCode::kNumerical, "non-finite T-matrix");
  Precompute();
}

void TvModel::Precompute() {
  const int C = NumComponents(), D = FeatureDim();
  inv_var_t_.resize(t_.rows(), t_.cols());
  comp_quad_.assign(C, Matrix());
  for (int c = 0; c < C; ++c) {
    const auto tc = t_.middleRows(c * D, D);
    const Vector iv = ubm_vars_.row(c).transpose().cwiseInverse();
    inv_var_t_.middleRows(c * D, D) = iv.asDiagonal() * tc;
    comp_quad_[c] = tc.transpose() * inv_var_t_.middleRows(c * D, D);
  }
}

Vector TvModel::CenteredStats(const BaumWelchStats &stats) const {
  if (stats.ubm_fingerprint != ubm_fp_)
    Fail(ErrorCode::kFingerprint,
         "statistics were accumulated with a different UBM (" +
             FingerprintHex(stats.ubm_fingerprint) + " vs " +
             FingerprintHex(ubm_fp_) + ")");
  const int C = NumComponents(), D = FeatureDim();
  if (stats.NumComponents() != C || stats.Dim() != D)
    Fail(ErrorCode::kDimensionMismatch, "statistics shape != TV model shape");
  if (!stats.n.allFinite() || !stats.f.allFinite())
    Fail(ErrorCode::kNumerical, "non-finite Baum-Welch statistics");
  Vector out(static_cast<Eigen::Index>(C) * D);
  for (int c = 0; c < C; ++c)
    out.segment(c * D, D) =
        (stats.f.row(c) - stats.n(c) * ubm_means_.row(c)).transpose();
  return out;
}

Matrix TvModel::PosteriorPrecision(const Vector &n) const {
  const int R = Rank();
  Matrix l = Matrix::Identity(R, R);
  for (int c = 0; c < NumComponents(); ++c)
    if (n(c) != 0.0) l.noalias() += n(c) * comp_quad_[c];
  return l;
}

Vector TvModel::Projection(const Vector &centered) const {
  return inv_var_t_.transpose() * centered;
}

std::uint64_t TvModel::Fingerprint() const {
  svak::Fingerprint f;
  f.Add(t_);
  f.Add(static_cast<std::int64_t>(ubm_fp_));
  return f.value();
}

void TvModel::Write(ArchiveWriter &w) const {
  w.WriteU64(ubm_fp_);
  w.WriteMatrix(ubm_means_);
  w.WriteMatrix(ubm_vars_);
  w.WriteMatrix(t_);
}

TvModel TvModel::Read(ArchiveReader &r) {
  const std::uint64_t fp = r.ReadU64();
  Matrix means = r.ReadMatrix();
  Matrix vars = r.ReadMatrix();
  Matrix t = r.ReadMatrix();
  return TvModel(std::move(t), std::move(means), std::move(vars), fp);
}

IvectorPosterior IvectorPosteriorOf(const TvModel &tv, const BaumWelchStats &stats) {
  const Vector centered = tv.CenteredStats(stats);
  IvectorPosterior post;
  post.precision = tv.PosteriorPrecision(stats.n);
  Eigen::LLT<Matrix> llt(post.precision);
  if (llt.info() != Eigen::Success)
    Fail(ErrorCode::kNumerical, "i-vector posterior precision is not SPD");
  post.mean = llt.solve(tv.Projection(centered));
  return post;
}

Embedding ExtractEmbedding(const TvModel &tv, const BaumWelchStats &stats,
                           const std::string &speaker_id) {
  Embedding e;
  e.vector = IvectorPosteriorOf(tv, stats).mean;
  e.speaker_id = speaker_id;
  e.source = EmbeddingSource::kSingleUtterance;
  e.space = EmbeddingSpace::kRawTv;
  return e;
}

Embedding AverageEmbeddings(std::span<const Embedding> embeddings) {
  if (embeddings.empty())
    Fail(ErrorCode::kNoData, "cannot average an empty embedding set");
  const Embedding &first = embeddings.front();
  Vector sum = Vector::Zero(first.dim());
  for (const auto &e : embeddings) {
    if (e.space != first.space)
      Fail(ErrorCode::kInvalidInput, "cannot average embeddings from different spaces");
    if (e.dim() != first.dim())
      Fail(ErrorCode::kDimensionMismatch, "embedding dimensions differ");
    if (e.speaker_id != first.speaker_id)
      Fail(ErrorCode::kInvalidInput, "cannot average embeddings of different speakers");
    sum += e.vector;
  }
  Embedding out;
  out.vector = sum / static_cast<double>(embeddings.size());
  out.speaker_id = first.speaker_id;
  out.source = EmbeddingSource::kAveraged;
  out.space = first.space;
  return out;
}

// ---------------------------------------------------------------- training

namespace {

struct TvAccum {
  double objective = 0.0;
  std::vector<Matrix> a;  // per component: sum_u N_c E[w w']
  Matrix c;               // (C*D) x R: sum_u ftilde E[w]'

  TvAccum(int C, int CD, int R) : a(C, Matrix::Zero(R, R)), c(Matrix::Zero(CD, R)) {}
  void Merge(const TvAccum &o) {
    objective += o.objective;
    for (std::size_t k = 0; k < a.size(); ++k) a[k] += o.a[k];
    c += o.c;
  }
};

TvAccum TvEStep(const TvModel &tv, std::span<const BaumWelchStats> stats) {
  const int C = tv.NumComponents(), D = tv.FeatureDim(), R = tv.Rank();
  return ChunkedReduce<TvAccum>(
      stats.size(), 16, [&] { return TvAccum(C, C * D, R); },
      [&](TvAccum &acc, std::size_t u) {
        const BaumWelchStats &s = stats[u];
        const Vector centered = tv.CenteredStats(s);
        const Vector b = tv.Projection(centered);
        const Matrix l = tv.PosteriorPrecision(s.n);
        Eigen::LLT<Matrix> llt(l);
        if (llt.info() != Eigen::Success)
          Fail(ErrorCode::kNumerical, "TV posterior precision is not SPD");
        const Vector w = llt.solve(b);
        const Matrix cov = llt.solve(Matrix::Identity(R, R));
        const Matrix mlv = llt.matrixL();
        const double logdet = 2.0 * mlv.diagonal().array().log().sum();
        acc.objective += -0.5 * logdet + 0.5 * b.dot(w);
        const Matrix eww = cov + w * w.transpose();
        for (int c = 0; c < C; ++c)
          if (s.n(c) != 0.0) acc.a[c].noalias() += s.n(c) * eww;
        acc.c.noalias() += centered * w.transpose();
      },
      [](TvAccum &total, const TvAccum &part) { total.Merge(part); });
}

}  // namespace

TvTrainResult TrainTv(std::span<const BaumWelchStats> stats, const DiagGmm &ubm,
                      const TvTrainOptions &opts) {
  const int C = ubm.NumComponents(), D = ubm.Dim(), R = opts.rank;
  if (R < 1) Fail(ErrorCode::kInvalidInput, "TV rank must be >= 1");
  if (R > C * D)
    Fail(ErrorCode::kInvalidInput, "TV rank exceeds supervector dimension");
  const std::uint64_t fp = ubm.Fingerprint();
  for (const auto &s : stats)
    if (s.ubm_fingerprint != fp)
      Fail(ErrorCode::kFingerprint, "TV training stats come from a different UBM");
  if (stats.size() < static_cast<std::size_t>(R))
    SVAK_WARN("tv", "only " << stats.size() << " utterances for rank " << R);

  std::mt19937_64 rng(DeriveSeed(opts.seed, "tv/init"));
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = 0.1 * ubm.variances().array().sqrt().mean();
  Matrix t(static_cast<Eigen::Index>(C) * D, R);
  for (Eigen::Index j = 0; j < t.cols(); ++j)
    for (Eigen::Index i = 0; i < t.rows(); ++i) t(i, j) = scale * normal(rng);

  TvTrainResult result;
  result.model = TvModel(std::move(t), ubm);
  if (opts.em_iters <= 0) return result;
  for (int iter = 0; iter < opts.em_iters; ++iter) {
    const TvAccum acc = TvEStep(result.model, stats);
    result.objective_history.push_back(acc.objective);
    SVAK_INFO("tv", "EM iter " << iter << " objective " << acc.objective);
    Matrix tnew(static_cast<Eigen::Index>(C) * D, R);
    for (int c = 0; c < C; ++c) {
      Eigen::LLT<Matrix> llt(acc.a[c]);
      if (llt.info() != Eigen::Success) {
        // Component never occupied; its block stays as it was.
        tnew.middleRows(c * D, D) = result.model.t_matrix().middleRows(c * D, D);
        continue;
      }
      tnew.middleRows(c * D, D) =
          llt.solve(acc.c.middleRows(c * D, D).transpose()).transpose();
    }
    result.model = TvModel(std::move(tnew), ubm);
  }
  result.objective_history.push_back(TvEStep(result.model, stats).objective);
  return result;
}

}  // namespace svak
