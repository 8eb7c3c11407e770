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

#ifndef SVAK_BACKEND_H_
#define SVAK_BACKEND_H_

#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "svak/archive.h"
#include "svak/common.h"
#include "svak/corpus.h"
#include "svak/features.h"
#include "svak/gmm.h"
#include "svak/ivector.h"

namespace svak {

// ---------------------------------------------------------------- LDA

class LdaTransform {
 public:
  static constexpr ModelKind kKind = ModelKind::kLda;

  LdaTransform() = default;
  LdaTransform(Matrix projection, Vector eigenvalues, std::uint64_t class_fp);

  int InputDim() const { return static_cast<int>(projection_.rows()); }
  int OutputDim() const { return static_cast<int>(projection_.cols()); }
  const Matrix &projection() const { return projection_; }  // R x P
  const Vector &eigenvalues() const { return eigenvalues_; }  // descending
  std::uint64_t class_fingerprint() const { return class_fp_; }

  Vector Apply(const Vector &x) const;

  void Write(ArchiveWriter &w) const;
  static LdaTransform Read(ArchiveReader &r);
  bool operator==(const LdaTransform &) const = default;

 private:
  Matrix projection_;
  Vector eigenvalues_;
  std::uint64_t class_fp_ = 0;
};

struct LdaSolution {
  Vector eigenvalues;   // descending
  Matrix eigenvectors;  // columns, normalized so that v' Sw v = 1
};

// Top `dim` solutions of Sb v = lambda Sw v.
LdaSolution SolveGeneralizedEigen(const Matrix &between, const Matrix &within,
                                  int dim);

// Speaker labels come from Embedding::speaker_id. Output dim is capped at
// (number of speakers - 1).
LdaTransform TrainLda(std::span<const Embedding> embeddings, int dim);

// ---------------------------------------------------------------- whitening

class Whitener {
 public:
  static constexpr ModelKind kKind = ModelKind::kWhitener;

  Whitener() = default;
  Whitener(Vector mean, Matrix whitening);

  int Dim() const { return static_cast<int>(mean_.size()); }
  const Vector &mean() const { return mean_; }
  const Matrix &whitening() const { return whitening_; }

  Vector Apply(const Vector &x) const { return whitening_ * (x - mean_); }

  void Write(ArchiveWriter &w) const;
  static Whitener Read(ArchiveReader &r);
  bool operator==(const Whitener &) const = default;

 private:
  Vector mean_;
  Matrix whitening_;
};

// Centring plus symmetric (ZCA) whitening: W = U diag(1/sqrt(l)) U'.
Whitener FitWhitener(std::span<const Vector> data);
Whitener FitWhitener(std::span<const Embedding> data);

// ---------------------------------------------------------------- PLDA

// x = mu + V h + e,  h ~ N(0, I_Q),  e ~ N(0, Sigma) with full Sigma.
struct PldaModel {
  static constexpr ModelKind kKind = ModelKind::kPlda;

  Vector mu;     // P
  Matrix v;      // P x Q
  Matrix sigma;  // P x P

  int Dim() const { return static_cast<int>(mu.size()); }
  int SubspaceDim() const { return static_cast<int>(v.cols()); }

  void Write(ArchiveWriter &w) const;
  static PldaModel Read(ArchiveReader &r);
  bool operator==(const PldaModel &) const = default;
};

struct PldaTrainOptions {
  int subspace_dim = 200;
  int em_iters = 10;
  std::uint64_t seed = 0;
};

struct PldaTrainResult {
  PldaModel model;
  // Marginal log-likelihood of the training data, before the first update
  // and after every update.
  std::vector<double> loglik_history;
};

PldaTrainResult TrainPlda(std::span<const Embedding> embeddings,
                          const PldaTrainOptions &opts);

// Marginal log-likelihood of labeled data under the model.
double PldaLogLikelihood(const PldaModel &model,
                         std::span<const Embedding> embeddings);

// Verification log-likelihood ratio between two single embeddings:
//   log N([x;y]; [mu;mu], [[St, B], [B, St]]) - log N(x; mu, St) - log N(y; mu, St)
// with B = V V' and St = Sigma + B, written as the quadratic form
//   0.5 (x'Qx + y'Qy) + 0.5 (x'Ly + y'Lx) + k.
// The evaluation order makes Score(a, b) == Score(b, a) bit-exactly.
class PldaScorer {
 public:
  PldaScorer() = default;
  explicit PldaScorer(const PldaModel &model);

  double Score(const Vector &enroll, const Vector &test) const;

 private:
  Vector mu_;
  Matrix q_, lambda_;
  double constant_ = 0.0;
};

// ---------------------------------------------------------------- backend

struct BackendTrainOptions {
  int lda_dim = 250;
  int plda_dim = 200;
  int plda_iters = 10;
  std::uint64_t seed = 0;
  bool length_norm = false;
};

// LDA -> centring/whitening -> (optional length norm) -> PLDA.
class PldaBackend {
 public:
  PldaBackend() = default;
  PldaBackend(LdaTransform lda, Whitener whitener, PldaModel plda,
              bool length_norm);

  const LdaTransform &lda() const { return lda_; }
  const Whitener &whitener() const { return whitener_; }
  const PldaModel &plda() const { return plda_; }
  bool length_norm() const { return length_norm_; }
  int InputDim() const { return lda_.InputDim(); }
  int OutputDim() const { return whitener_.Dim(); }

  // Raw TV embedding -> backend space.
  Embedding Transform(const Embedding &raw) const;
  double Score(const Embedding &enroll, const Embedding &test) const;

  void Write(ArchiveWriter &w) const;
  static PldaBackend Read(ArchiveReader &r);

 private:
  LdaTransform lda_;
  Whitener whitener_;
  PldaModel plda_;
  bool length_norm_ = false;
  PldaScorer scorer_;
};

struct BackendTrainResult {
  PldaBackend backend;
  std::vector<double> plda_loglik_history;
};

BackendTrainResult TrainBackend(std::span<const Embedding> raw_embeddings,
                                const BackendTrainOptions &opts);

// ---------------------------------------------------------------- system

struct UttEmbedding {
  std::string utt_id;
  Embedding embedding;
  double active_s = 0.0;  // voiced frames * hop
};

// Complete verification pipeline: features -> UBM stats -> i-vector ->
// backend. Scores are PLDA log-likelihood ratios.
class VerificationSystem {
 public:
  static constexpr ModelKind kKind = ModelKind::kSystem;

  VerificationSystem() = default;
  VerificationSystem(std::string system_id, FeatureConfig config, DiagGmm ubm,
                     TvModel tv, PldaBackend backend);

  const std::string &id() const { return id_; }
  const FeatureConfig &feature_config() const { return config_; }
  const DiagGmm &ubm() const { return ubm_; }
  const TvModel &tv() const { return tv_; }
  const PldaBackend &backend() const { return backend_; }

  FeatureMatrix Features(const Waveform &wave) const;
  // Backend-space embedding of already extracted features.
  Embedding EmbedFeatures(const FeatureMatrix &features,
                          const std::string &speaker_id) const;
  UttEmbedding Embed(const Utterance &utt) const;

  double Score(const Embedding &enroll, const Embedding &test) const {
    return backend_.Score(enroll, test);
  }

  void Write(ArchiveWriter &w) const;
  static VerificationSystem Read(ArchiveReader &r);

 private:
  std::string id_;
  FeatureConfig config_;
  DiagGmm ubm_;
  TvModel tv_;
  PldaBackend backend_;
};

// Embeds every utterance of a manifest (in parallel, manifest order).
// Failed utterances are logged and skipped when `skip_failures` is set.
std::vector<UttEmbedding> EmbedManifest(const VerificationSystem &system,
                                        const Manifest &manifest,
                                        bool skip_failures = false);

// Averaged backend-space speaker model over the utterances whose ids are not
// in `exclude`.
Embedding EnrollSpeaker(std::span<const UttEmbedding> utterances,
                        const std::set<std::string> &exclude = {});

enum class TrialLabel { kTarget, kNontarget, kAttackNatural, kAttackMimic };
const char *TrialLabelName(TrialLabel l);
TrialLabel ParseTrialLabel(const std::string &s);

struct Trial {
  std::string trial_id;
  std::string enroll_speaker;
  std::string test_utt;
  TrialLabel label = TrialLabel::kNontarget;
};

struct ScoreRecord {
  std::string trial_id;
  std::string enroll_speaker;
  std::string test_utt;
  std::string system_id;
  TrialLabel label = TrialLabel::kNontarget;
  double score = 0.0;
  bool operator==(const ScoreRecord &) const = default;
};

ScoreRecord MakeScoreRecord(const VerificationSystem &system, const Trial &trial,
                            const Embedding &model, const Embedding &test);

// Scores every trial; models and test embeddings are looked up by speaker id
// and utterance id.
std::vector<ScoreRecord> ScoreTrials(
    const VerificationSystem &system, std::span<const Trial> trials,
    const std::map<std::string, Embedding> &speaker_models,
    const std::map<std::string, Embedding> &test_embeddings);

// Tab-separated with a header line; scores printed with 6 decimals.
void WriteScores(const std::filesystem::path &path,
                 std::span<const ScoreRecord> records);
std::vector<ScoreRecord> ReadScores(const std::filesystem::path &path);

}  // namespace svak

#endif  // SVAK_BACKEND_H_
