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

#include "svak/backend.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <optional>
#include <random>

#include <Eigen/Eigenvalues>

namespace svak {

namespace {

Matrix Symmetrize(const Matrix &m) { return 0.5 * (m + m.transpose()); }

double LogDet(const Matrix &m, const char *what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success)
    Fail(ErrorCode::kNumerical, std::string(what) + " is not positive definite");
  const Matrix l = llt.matrixL();
  return 2.0 * l.diagonal().array().log().sum();
}

Matrix SpdInverse(const Matrix &m, const char *what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success)
    Fail(ErrorCode::kNumerical, std::string(what) + " is not positive definite");
  return Symmetrize(llt.solve(Matrix::Identity(m.rows(), m.cols())));
}

// Labeled data grouped by speaker, in sorted speaker order.
struct SpeakerGroups {
  std::vector<std::string> speakers;
  std::vector<std::vector<const Vector *>> members;
  int dim = 0;
  std::size_t total = 0;
};

SpeakerGroups GroupBySpeaker(std::span<const Embedding> data) {
  if (data.empty()) Fail(ErrorCode::kNoData, "no training embeddings");
  std::map<std::string, std::vector<const Vector *>> by;
  const Eigen::Index dim = data.front().dim();
  for (const auto &e : data) {
    if (e.dim() != dim)
      Fail(ErrorCode::kDimensionMismatch, "training embeddings differ in dimension");
    if (!e.vector.allFinite())
      Fail(ErrorCode::kNumerical, "non-finite training embedding");
    if (e.speaker_id.empty())
      Fail(ErrorCode::kInvalidInput, "training embedding without a speaker label");
    by[e.speaker_id].push_back(&e.vector);
  }
  SpeakerGroups g;
  g.dim = static_cast<int>(dim);
  g.total = data.size();
  for (auto &[spk, v] : by) {
    g.speakers.push_back(spk);
    g.members.push_back(std::move(v));
  }
  return g;
}

// Global mean, between-class and within-class scatter (divided by N).
void Scatter(const SpeakerGroups &g, Vector *mean, Matrix *sb, Matrix *sw) {
  const int d = g.dim;
  const double n = static_cast<double>(g.total);
  *mean = Vector::Zero(d);
  for (const auto &m : g.members)
    for (const Vector *x : m) *mean += *x;
  *mean /= n;
  *sb = Matrix::Zero(d, d);
  *sw = Matrix::Zero(d, d);
  for (const auto &m : g.members) {
    Vector cm = Vector::Zero(d);
    for (const Vector *x : m) cm += *x;
    cm /= static_cast<double>(m.size());
    const Vector dm = cm - *mean;
    sb->noalias() += static_cast<double>(m.size()) * dm * dm.transpose();
    for (const Vector *x : m) {
      const Vector dx = *x - cm;
      sw->noalias() += dx * dx.transpose();
    }
  }
  *sb /= n;
  *sw /= n;
}

// Makes the largest-magnitude entry of every column positive.
void FixSigns(Matrix *m) {
  for (Eigen::Index j = 0; j < m->cols(); ++j) {
    Eigen::Index i;
    m->col(j).cwiseAbs().maxCoeff(&i);
    if ((*m)(i, j) < 0) m->col(j) *= -1.0;
  }
}

}  // namespace

// ---------------------------------------------------------------- LDA

LdaTransform::LdaTransform(Matrix projection, Vector eigenvalues,
                           std::uint64_t class_fp)
    : projection_(std::move(projection)),
      eigenvalues_(std::move(eigenvalues)),
      class_fp_(class_fp) {
  if (projection_.cols() < 1 || projection_.cols() > projection_.rows())
    Fail(ErrorCode::kInvalidInput, "LDA output dim must be in [1, input dim]");
  if (eigenvalues_.size() != projection_.cols())
    Fail(ErrorCode::kDimensionMismatch, "LDA eigenvalue count != output dim");
}

Vector LdaTransform::Apply(const Vector &x) const {
  if (x.size() != projection_.rows())
    Fail(ErrorCode::kDimensionMismatch,
         "LDA input has dim " + std::to_string(x.size()) + ", expected " +
             std::to_string(projection_.rows()));
  return projection_.transpose() * x;
}

void LdaTransform::Write(ArchiveWriter &w) const {
  w.WriteU64(class_fp_);
  w.WriteVector(eigenvalues_);
  w.WriteMatrix(projection_);
}

LdaTransform LdaTransform::Read(ArchiveReader &r) {
  const std::uint64_t fp = r.ReadU64();
  Vector ev = r.ReadVector();
  Matrix p = r.ReadMatrix();
  return LdaTransform(std::move(p), std::move(ev), fp);
}

LdaSolution SolveGeneralizedEigen(const Matrix &between, const Matrix &within,
                                  int dim) {
  const Eigen::Index n = between.rows();
  if (between.cols() != n || within.rows() != n || within.cols() != n)
    Fail(ErrorCode::kDimensionMismatch, "scatter matrices must be square and equal size");
  if (dim < 1 || dim > n)
    Fail(ErrorCode::kInvalidInput, "requested eigen dim out of range");
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(Symmetrize(between),
                                                      Symmetrize(within));
  if (es.info() != Eigen::Success)
    Fail(ErrorCode::kNumerical, "within-class scatter is singular");
  LdaSolution sol;
  sol.eigenvalues.resize(dim);
  sol.eigenvectors.resize(n, dim);
  // Eigen returns ascending eigenvalues.
  for (int k = 0; k < dim; ++k) {
    sol.eigenvalues(k) = es.eigenvalues()(n - 1 - k);
    sol.eigenvectors.col(k) = es.eigenvectors().col(n - 1 - k);
  }
  FixSigns(&sol.eigenvectors);
  return sol;
}

LdaTransform TrainLda(std::span<const Embedding> embeddings, int dim) {
  const SpeakerGroups g = GroupBySpeaker(embeddings);
  if (g.speakers.size() < 2)
    Fail(ErrorCode::kInvalidInput, "LDA needs at least two speakers");
  if (dim < 1) Fail(ErrorCode::kInvalidInput, "LDA dim must be >= 1");
  int p = std::min(dim, g.dim);
  const int max_dim = static_cast<int>(g.speakers.size()) - 1;
  if (p > max_dim) {
    SVAK_WARN("lda", "output dim " << p << " capped at " << max_dim
                                   << " (number of speakers - 1)");
    p = max_dim;
  }
  Vector mean;
  Matrix sb, sw;
  Scatter(g, &mean, &sb, &sw);
  const double tr = sw.trace();
  if (!(tr > 0.0))
    Fail(ErrorCode::kNumerical, "within-class scatter is zero");
  sw.diagonal().array() += 1e-6 * tr / p;
  LdaSolution sol = SolveGeneralizedEigen(sb, sw, p);
  svak::Fingerprint fp;
  for (const auto &s : g.speakers) fp.Add(std::string_view(s));
  return LdaTransform(std::move(sol.eigenvectors), std::move(sol.eigenvalues),
                      fp.value());
}

// ---------------------------------------------------------------- whitening

Whitener::Whitener(Vector mean, Matrix whitening)
    : mean_(std::move(mean)), whitening_(std::move(whitening)) {
  if (whitening_.rows() != mean_.size() || whitening_.cols() != mean_.size())
    Fail(ErrorCode::kDimensionMismatch, "whitening matrix shape != mean dim");
}

void Whitener::Write(ArchiveWriter &w) const {
  w.WriteVector(mean_);
  w.WriteMatrix(whitening_);
}

Whitener Whitener::Read(ArchiveReader &r) {
  Vector m = r.ReadVector();
  Matrix w = r.ReadMatrix();
  return Whitener(std::move(m), std::move(w));
}

Whitener FitWhitener(std::span<const Vector> data) {
  if (data.size() < 2) Fail(ErrorCode::kNoData, "whitening needs >= 2 vectors");
  const Eigen::Index d = data.front().size();
  Vector mean = Vector::Zero(d);
  for (const auto &x : data) {
    if (x.size() != d)
      Fail(ErrorCode::kDimensionMismatch, "whitening data differ in dimension");
    mean += x;
  }
  mean /= static_cast<double>(data.size());
  Matrix cov = Matrix::Zero(d, d);
  for (const auto &x : data) {
    const Vector c = x - mean;
    cov.noalias() += c * c.transpose();
  }
  cov /= static_cast<double>(data.size());
  Eigen::SelfAdjointEigenSolver<Matrix> es(Symmetrize(cov));
  Vector ev = es.eigenvalues();
  const double max_ev = ev.maxCoeff();
  if (!(max_ev > 0.0)) Fail(ErrorCode::kNumerical, "whitening data have zero variance");
  if (ev.minCoeff() < 1e-10 * max_ev) {
    const double ridge = 1e-6 * cov.trace() / static_cast<double>(d);
    SVAK_WARN("whiten", "rank-deficient covariance, adding ridge " << ridge);
    ev = (ev.array().max(0.0) + ridge).matrix();
  }
  const Matrix &u = es.eigenvectors();
  Matrix w = u * ev.cwiseSqrt().cwiseInverse().asDiagonal() * u.transpose();
  return Whitener(std::move(mean), Symmetrize(w));
}

Whitener FitWhitener(std::span<const Embedding> data) {
  std::vector<Vector> v;
  v.reserve(data.size());
  for (const auto &e : data) v.push_back(e.vector);
  return FitWhitener(std::span<const Vector>(v));
}

// ---------------------------------------------------------------- PLDA

void PldaModel::Write(ArchiveWriter &w) const {
  w.WriteVector(mu);
  w.WriteMatrix(v);
  w.WriteMatrix(sigma);
}

PldaModel PldaModel::Read(ArchiveReader &r) {
  PldaModel m;
  m.mu = r.ReadVector();
  m.v = r.ReadMatrix();
  m.sigma = r.ReadMatrix();
  if (m.v.rows() != m.mu.size() || m.sigma.rows() != m.mu.size() ||
      m.sigma.cols() != m.mu.size())
    Fail(ErrorCode::kFormat, "inconsistent PLDA shapes in archive");
  return m;
}

namespace {

// Per-speaker centred sums plus global scatter; shared by the likelihood and
// the EM updates.
struct PldaData {
  std::vector<int> counts;
  std::vector<Vector> sums;
  Matrix scatter;  // sum_i r_i r_i'
  double total = 0.0;
};

PldaData CenterGroups(const SpeakerGroups &g, const Vector &mu) {
  PldaData d;
  d.scatter = Matrix::Zero(g.dim, g.dim);
  for (const auto &m : g.members) {
    Vector s = Vector::Zero(g.dim);
    for (const Vector *x : m) {
      const Vector r = *x - mu;
      s += r;
      d.scatter.noalias() += r * r.transpose();
    }
    d.counts.push_back(static_cast<int>(m.size()));
    d.sums.push_back(std::move(s));
  }
  d.total = static_cast<double>(g.total);
  return d;
}

double MarginalLogLik(const PldaModel &model, const PldaData &d) {
  const int p = model.Dim(), q = model.SubspaceDim();
  Eigen::LLT<Matrix> sig(model.sigma);
  if (sig.info() != Eigen::Success)
    Fail(ErrorCode::kNumerical, "PLDA residual covariance is not positive definite");
  const Matrix si_v = sig.solve(model.v);
  const Matrix vsv = model.v.transpose() * si_v;
  const Matrix l = sig.matrixL();
  const double logdet_sigma = 2.0 * l.diagonal().array().log().sum();
  const Matrix si = sig.solve(Matrix::Identity(p, p));
  double ll = -0.5 * d.total * (p * std::log(2.0 * std::numbers::pi) + logdet_sigma);
  ll -= 0.5 * (si.cwiseProduct(d.scatter)).sum();
  std::map<int, Eigen::LLT<Matrix>> by_count;
  for (std::size_t s = 0; s < d.counts.size(); ++s) {
    const int n = d.counts[s];
    auto it = by_count.find(n);
    if (it == by_count.end()) {
      Matrix ps = Matrix::Identity(q, q) + n * vsv;
      it = by_count.emplace(n, Eigen::LLT<Matrix>(ps)).first;
    }
    const Eigen::LLT<Matrix> &ps = it->second;
    const Matrix lp = ps.matrixL();
    const Vector b = si_v.transpose() * d.sums[s];
    ll += -0.5 * 2.0 * lp.diagonal().array().log().sum() + 0.5 * b.dot(ps.solve(b));
  }
  return ll;
}

}  // namespace

double PldaLogLikelihood(const PldaModel &model,
                         std::span<const Embedding> embeddings) {
  const SpeakerGroups g = GroupBySpeaker(embeddings);
  if (g.dim != model.Dim())
    Fail(ErrorCode::kDimensionMismatch, "embedding dim != PLDA dim");
  return MarginalLogLik(model, CenterGroups(g, model.mu));
}

PldaTrainResult TrainPlda(std::span<const Embedding> embeddings,
                          const PldaTrainOptions &opts) {
  const SpeakerGroups g = GroupBySpeaker(embeddings);
  const int p = g.dim, q = opts.subspace_dim;
  if (g.speakers.size() < 2)
    Fail(ErrorCode::kInvalidInput, "PLDA needs at least two speakers");
  if (q < 1 || q > p)
    Fail(ErrorCode::kInvalidInput, "PLDA subspace dim must be in [1, " +
                                       std::to_string(p) + "]");
  Vector mean;
  Matrix sb, sw;
  Scatter(g, &mean, &sb, &sw);
  const double ridge = 1e-6 * (sb + sw).trace() / p;

  // V from the leading between-class directions; seeded random directions
  // fill in where the between-class scatter has no more rank.
  PldaModel model;
  model.mu = mean;
  Eigen::SelfAdjointEigenSolver<Matrix> es(Symmetrize(sb));
  const double top = std::max(es.eigenvalues().maxCoeff(), ridge);
  model.v.resize(p, q);
  std::mt19937_64 rng(DeriveSeed(opts.seed, "plda/init"));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int k = 0; k < q; ++k) {
    const double lam = es.eigenvalues()(p - 1 - k);
    if (lam > 1e-10 * top) {
      model.v.col(k) = es.eigenvectors().col(p - 1 - k) * std::sqrt(lam);
    } else {
      for (int i = 0; i < p; ++i) model.v(i, k) = normal(rng);
      model.v.col(k) *= std::sqrt(1e-3 * top) / model.v.col(k).norm();
    }
  }
  model.sigma = Symmetrize(sw);
  model.sigma.diagonal().array() += ridge;

  PldaTrainResult result;
  const PldaData d = CenterGroups(g, model.mu);
  result.loglik_history.push_back(MarginalLogLik(model, d));
  for (int iter = 0; iter < opts.em_iters; ++iter) {
    Eigen::LLT<Matrix> sig(model.sigma);
    if (sig.info() != Eigen::Success)
      Fail(ErrorCode::kNumerical, "PLDA residual covariance is not positive definite");
    const Matrix si_v = sig.solve(model.v);
    const Matrix vsv = model.v.transpose() * si_v;
    Matrix rxh = Matrix::Zero(p, q), rhh = Matrix::Zero(q, q);
    for (std::size_t s = 0; s < d.counts.size(); ++s) {
      const double n = d.counts[s];
      Eigen::LLT<Matrix> ps(Matrix::Identity(q, q) + n * vsv);
      const Vector h = ps.solve(si_v.transpose() * d.sums[s]);
      const Matrix ehh = ps.solve(Matrix::Identity(q, q)) + h * h.transpose();
      rxh.noalias() += d.sums[s] * h.transpose();
      rhh.noalias() += n * ehh;
    }
    model.v = Symmetrize(rhh).llt().solve(rxh.transpose()).transpose();
    model.sigma = Symmetrize((d.scatter - model.v * rxh.transpose()) / d.total);
    if (Eigen::LLT<Matrix>(model.sigma).info() != Eigen::Success)
      model.sigma.diagonal().array() += ridge;
    result.loglik_history.push_back(MarginalLogLik(model, d));
    SVAK_INFO("plda", "EM iter " << iter << " loglik " << result.loglik_history.back());
  }
  FixSigns(&model.v);
  result.model = std::move(model);
  return result;
}

PldaScorer::PldaScorer(const PldaModel &model) : mu_(model.mu) {
  const Matrix b = model.v * model.v.transpose();
  const Matrix st = model.sigma + b;
  const Matrix st_inv = SpdInverse(st, "PLDA total covariance");
  const Matrix m = st - b * st_inv * b;
  const Matrix m_inv = SpdInverse(Symmetrize(m), "PLDA conditional covariance");
  q_ = Symmetrize(st_inv - m_inv);
  lambda_ = Symmetrize(st_inv * b * m_inv);
  constant_ = -0.5 * (LogDet(Symmetrize(st + b), "PLDA St+B") +
                      LogDet(Symmetrize(st - b), "PLDA St-B")) +
              LogDet(st, "PLDA total covariance");
}

double PldaScorer::Score(const Vector &enroll, const Vector &test) const {
  if (enroll.size() != mu_.size() || test.size() != mu_.size())
    Fail(ErrorCode::kDimensionMismatch, "score operands do not match PLDA dim");
  const Vector x = enroll - mu_, y = test - mu_;
  const double a = x.dot(q_ * x), b = y.dot(q_ * y);
  const double c1 = x.dot(lambda_ * y), c2 = y.dot(lambda_ * x);
  return 0.5 * (a + b) + 0.5 * (c1 + c2) + constant_;
}

// ---------------------------------------------------------------- backend

PldaBackend::PldaBackend(LdaTransform lda, Whitener whitener, PldaModel plda,
                         bool length_norm)
    : lda_(std::move(lda)),
      whitener_(std::move(whitener)),
      plda_(std::move(plda)),
      length_norm_(length_norm) {
  if (lda_.OutputDim() != whitener_.Dim() || whitener_.Dim() != plda_.Dim())
    Fail(ErrorCode::kDimensionMismatch, "LDA, whitener and PLDA dims disagree");
  scorer_ = PldaScorer(plda_);
}

Embedding PldaBackend::Transform(const Embedding &raw) const {
  if (raw.space != EmbeddingSpace::kRawTv)
    Fail(ErrorCode::kInvalidInput, "backend input must be a raw TV embedding");
  Embedding out = raw;
  out.vector = whitener_.Apply(lda_.Apply(raw.vector));
  if (length_norm_) {
    const double nrm = out.vector.norm();
    if (nrm > 0.0) out.vector *= std::sqrt(static_cast<double>(out.dim())) / nrm;
  }
  out.space = EmbeddingSpace::kLdaWhitened;
  return out;
}

double PldaBackend::Score(const Embedding &enroll, const Embedding &test) const {
  if (enroll.space != EmbeddingSpace::kLdaWhitened ||
      test.space != EmbeddingSpace::kLdaWhitened)
    Fail(ErrorCode::kInvalidInput, "scoring needs backend-space embeddings");
  return scorer_.Score(enroll.vector, test.vector);
}

void PldaBackend::Write(ArchiveWriter &w) const {
  lda_.Write(w);
  whitener_.Write(w);
  plda_.Write(w);
  w.WriteU64(length_norm_ ? 1 : 0);
}

PldaBackend PldaBackend::Read(ArchiveReader &r) {
  LdaTransform lda = LdaTransform::Read(r);
  Whitener wh = Whitener::Read(r);
  PldaModel plda = PldaModel::Read(r);
  const bool ln = r.ReadU64() != 0;
  return PldaBackend(std::move(lda), std::move(wh), std::move(plda), ln);
}

BackendTrainResult TrainBackend(std::span<const Embedding> raw_embeddings,
                                const BackendTrainOptions &opts) {
  for (const auto &e : raw_embeddings)
    if (e.space != EmbeddingSpace::kRawTv)
      Fail(ErrorCode::kInvalidInput, "backend training needs raw TV embeddings");
  LdaTransform lda = TrainLda(raw_embeddings, opts.lda_dim);
  std::vector<Vector> projected;
  projected.reserve(raw_embeddings.size());
  for (const auto &e : raw_embeddings) projected.push_back(lda.Apply(e.vector));
  Whitener wh = FitWhitener(std::span<const Vector>(projected));

  std::vector<Embedding> white;
  white.reserve(raw_embeddings.size());
  for (std::size_t i = 0; i < raw_embeddings.size(); ++i) {
    Embedding e = raw_embeddings[i];
    e.vector = wh.Apply(projected[i]);
    if (opts.length_norm) {
      const double nrm = e.vector.norm();
      if (nrm > 0.0) e.vector *= std::sqrt(static_cast<double>(e.dim())) / nrm;
    }
    e.space = EmbeddingSpace::kLdaWhitened;
    white.push_back(std::move(e));
  }
  PldaTrainOptions po;
  po.subspace_dim = std::min(opts.plda_dim, lda.OutputDim());
  if (po.subspace_dim < opts.plda_dim)
    SVAK_WARN("plda", "subspace dim capped at " << po.subspace_dim);
  po.em_iters = opts.plda_iters;
  po.seed = DeriveSeed(opts.seed, "backend/plda");
  PldaTrainResult pr = TrainPlda(white, po);

  BackendTrainResult out;
  out.backend = PldaBackend(std::move(lda), std::move(wh), std::move(pr.model),
                            opts.length_norm);
  out.plda_loglik_history = std::move(pr.loglik_history);
  return out;
}

// ---------------------------------------------------------------- system

VerificationSystem::VerificationSystem(std::string system_id,
                                       FeatureConfig config, DiagGmm ubm,
                                       TvModel tv, PldaBackend backend)
    : id_(std::move(system_id)),
      config_(std::move(config)),
      ubm_(std::move(ubm)),
      tv_(std::move(tv)),
      backend_(std::move(backend)) {
  if (id_.empty()) Fail(ErrorCode::kInvalidInput, "system id must not be empty");
  config_.Validate();
  if (ubm_.Dim() != config_.output_dim())
    Fail(ErrorCode::kDimensionMismatch, "UBM dim != feature dim");
  if (tv_.ubm_fingerprint() != ubm_.Fingerprint())
    Fail(ErrorCode::kFingerprint, "TV model was trained on a different UBM");
  if (tv_.Rank() != backend_.InputDim())
    Fail(ErrorCode::kDimensionMismatch, "TV rank != backend input dim");
}

FeatureMatrix VerificationSystem::Features(const Waveform &wave) const {
  return ExtractFeatures(wave, config_);
}

Embedding VerificationSystem::EmbedFeatures(const FeatureMatrix &features,
                                            const std::string &speaker_id) const {
  if (features.config_fingerprint != config_.Fingerprint())
    Fail(ErrorCode::kFingerprint, "features were extracted with another configuration");
  const BaumWelchStats stats = AccumulateStats(ubm_, features);
  return backend_.Transform(ExtractEmbedding(tv_, stats, speaker_id));
}

UttEmbedding VerificationSystem::Embed(const Utterance &utt) const {
  const FeatureMatrix f = Features(ReadAudio(utt.path));
  UttEmbedding out;
  out.utt_id = utt.utt_id;
  out.embedding = EmbedFeatures(f, utt.speaker_id);
  out.active_s = static_cast<double>(f.num_frames()) * config_.frame_hop_ms / 1000.0;
  return out;
}

void VerificationSystem::Write(ArchiveWriter &w) const {
  w.WriteString(id_);
  config_.Write(w);
  ubm_.Write(w);
  tv_.Write(w);
  backend_.Write(w);
}

VerificationSystem VerificationSystem::Read(ArchiveReader &r) {
  std::string id = r.ReadString();
  FeatureConfig cfg = FeatureConfig::Read(r);
  DiagGmm ubm = DiagGmm::Read(r);
  TvModel tv = TvModel::Read(r);
  PldaBackend be = PldaBackend::Read(r);
  return VerificationSystem(std::move(id), std::move(cfg), std::move(ubm),
                            std::move(tv), std::move(be));
}

std::vector<UttEmbedding> EmbedManifest(const VerificationSystem &system,
                                        const Manifest &manifest,
                                        bool skip_failures) {
  const auto &entries = manifest.entries();
  std::vector<std::optional<UttEmbedding>> slots(entries.size());
  ParallelFor(entries.size(), [&](std::size_t i) {
    try {
      slots[i] = system.Embed(entries[i]);
    } catch (const Error &e) {
      if (!skip_failures) throw;
      SVAK_WARN("embed", system.id() << ": skipping " << entries[i].utt_id
                                     << ": " << e.what());
    }
  });
  std::vector<UttEmbedding> out;
  out.reserve(entries.size());
  for (auto &s : slots)
    if (s) out.push_back(std::move(*s));
  return out;
}

Embedding EnrollSpeaker(std::span<const UttEmbedding> utterances,
                        const std::set<std::string> &exclude) {
  std::vector<Embedding> kept;
  for (const auto &u : utterances)
    if (!exclude.count(u.utt_id)) kept.push_back(u.embedding);
  if (kept.empty())
    Fail(ErrorCode::kNoData, "no enrollment utterances left after exclusion");
  return AverageEmbeddings(kept);
}

const char *TrialLabelName(TrialLabel l) {
  switch (l) {
    case TrialLabel::kTarget: return "target";
    case TrialLabel::kNontarget: return "nontarget";
    case TrialLabel::kAttackNatural: return "attack_natural";
    case TrialLabel::kAttackMimic: return "attack_mimic";
  }
  return "?";
}

TrialLabel ParseTrialLabel(const std::string &s) {
  for (TrialLabel l : {TrialLabel::kTarget, TrialLabel::kNontarget,
                       TrialLabel::kAttackNatural, TrialLabel::kAttackMimic})
    if (s == TrialLabelName(l)) return l;
  Fail(ErrorCode::kFormat, "unknown trial label '" + s + "'");
}

ScoreRecord MakeScoreRecord(const VerificationSystem &system, const Trial &trial,
                            const Embedding &model, const Embedding &test) {
  ScoreRecord r;
  r.trial_id = trial.trial_id;
  r.enroll_speaker = trial.enroll_speaker;
  r.test_utt = trial.test_utt;
  r.system_id = system.id();
  r.label = trial.label;
  r.score = system.Score(model, test);
  return r;
}

std::vector<ScoreRecord> ScoreTrials(
    const VerificationSystem &system, std::span<const Trial> trials,
    const std::map<std::string, Embedding> &speaker_models,
    const std::map<std::string, Embedding> &test_embeddings) {
  for (const auto &t : trials) {
    if (!speaker_models.count(t.enroll_speaker))
      Fail(ErrorCode::kInvalidInput, "trial " + t.trial_id +
                                         ": no model for speaker " + t.enroll_speaker);
    if (!test_embeddings.count(t.test_utt))
      Fail(ErrorCode::kInvalidInput, "trial " + t.trial_id +
                                         ": no embedding for " + t.test_utt);
  }
  std::vector<ScoreRecord> out(trials.size());
  ParallelFor(trials.size(), [&](std::size_t i) {
    const Trial &t = trials[i];
    out[i] = MakeScoreRecord(system, t, speaker_models.at(t.enroll_speaker),
                             test_embeddings.at(t.test_utt));
  });
  return out;
}

namespace {
constexpr const char *kScoreHeader =
    "trial_id\tenroll_speaker\ttest_utt\tsystem_id\tlabel\tscore";
}

void WriteScores(const std::filesystem::path &path,
                 std::span<const ScoreRecord> records) {
  std::ofstream os(path);
  if (!os) Fail(ErrorCode::kIo, "cannot write " + path.string());
  os << kScoreHeader << '\n';
  char buf[64];
  for (const auto &r : records) {
    std::snprintf(buf, sizeof(buf), "%.6f", r.score);
    os << r.trial_id << '\t' << r.enroll_speaker << '\t' << r.test_utt << '\t'
       << r.system_id << '\t' << TrialLabelName(r.label) << '\t' << buf << '\n';
  }
  if (!os) Fail(ErrorCode::kIo, "write failed for " + path.string());
}

std::vector<ScoreRecord> ReadScores(const std::filesystem::path &path) {
  std::ifstream is(path);
  if (!is) Fail(ErrorCode::kIo, "cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != kScoreHeader)
    Fail(ErrorCode::kFormat, path.string() + ": missing score header");
  std::vector<ScoreRecord> out;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (;;) {
      const std::size_t tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (cols.size() != 6)
      Fail(ErrorCode::kFormat, path.string() + ":" + std::to_string(lineno) +
                                   ": expected 6 columns");
    ScoreRecord r{cols[0], cols[1], cols[2], cols[3], ParseTrialLabel(cols[4]), 0.0};
    try {
      std::size_t used = 0;
      r.score = std::stod(cols[5], &used);
      if (used != cols[5].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception &) {
      Fail(ErrorCode::kFormat, path.string() + ":" + std::to_string(lineno) +
                                   ": bad score '" + cols[5] + "'");
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace svak
