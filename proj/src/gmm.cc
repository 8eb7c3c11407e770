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

#include "svak/gmm.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace svak {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)
constexpr int kBlockFrames = 4096;
constexpr std::size_t kBlocksPerWave = 64;

void CheckDim(const DiagGmm &gmm, const FeatureMatrix &f) {
  if (f.dim() != gmm.Dim() && f.num_frames() > 0)
    Fail(ErrorCode::kDimensionMismatch,
         "feature dim " + std::to_string(f.dim()) + " != GMM dim " +
             std::to_string(gmm.Dim()));
}

// A contiguous run of frames inside one utterance.
struct Block {
  std::size_t utt;
  Eigen::Index start, rows;
};

std::vector<Block> MakeBlocks(std::span<const FeatureMatrix> data) {
  std::vector<Block> blocks;
  for (std::size_t u = 0; u < data.size(); ++u)
    for (Eigen::Index s = 0; s < data[u].num_frames(); s += kBlockFrames)
      blocks.push_back(
          {u, s, std::min<Eigen::Index>(kBlockFrames, data[u].num_frames() - s)});
  return blocks;
}

struct EmAccum {
  double loglik = 0.0;
  Vector n;
  Matrix f, s;  // C x D
  void Init(int C, int D) {
    loglik = 0.0;
    n = Vector::Zero(C);
    f = Matrix::Zero(C, D);
    s = Matrix::Zero(C, D);
  }
  void Add(const EmAccum &o) {
    loglik += o.loglik;
    n += o.n;
    f += o.f;
    s += o.s;
  }
};

// E-step over all blocks. Blocks are processed in waves of fixed size and
// reduced in block order, so the result does not depend on the thread count.
EmAccum EStep(const DiagGmm &gmm, std::span<const FeatureMatrix> data,
              const std::vector<Block> &blocks) {
  const int C = gmm.NumComponents(), D = gmm.Dim();
  EmAccum total;
  total.Init(C, D);
  std::vector<EmAccum> wave;
  for (std::size_t b0 = 0; b0 < blocks.size(); b0 += kBlocksPerWave) {
    const std::size_t nb = std::min(kBlocksPerWave, blocks.size() - b0);
    wave.assign(nb, {});
    ParallelFor(nb, [&](std::size_t i) {
      const Block &blk = blocks[b0 + i];
      const auto x = data[blk.utt].frames.middleRows(blk.start, blk.rows);
      Matrix ll = gmm.ComponentLogLikes(x);
      EmAccum &acc = wave[i];
      acc.Init(C, D);
      for (Eigen::Index t = 0; t < ll.rows(); ++t) {
        const double lse = LogSumExp(ll.row(t));
        acc.loglik += lse;
        ll.row(t) = (ll.row(t).array() - lse).exp();
      }
      acc.n = ll.colwise().sum().transpose();
      acc.f = ll.transpose() * x;
      acc.s = ll.transpose() * x.cwiseAbs2();
    });
    for (const auto &a : wave) total.Add(a);
  }
  return total;
}

// k-means++ seeding followed by Lloyd iterations on a seeded subsample.
Matrix KMeans(const Matrix &x, int k, int iters, std::mt19937_64 &rng) {
  const Eigen::Index n = x.rows();
  Matrix centers(k, x.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centers.row(0) = x.row(first(rng));
  Vector d2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0) {
      double r = u(rng) * total, acc = 0.0;
      for (pick = 0; pick < n - 1; ++pick) {
        acc += d2(pick);
        if (acc >= r) break;
      }
    } else {
      pick = first(rng);
    }
    centers.row(c) = x.row(pick);
    d2 = d2.cwiseMin((x.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }
  std::vector<int> assign(n, 0);
  for (int it = 0; it < iters; ++it) {
    // |x - c|^2 = |x|^2 - 2 x.c + |c|^2; the |x|^2 term is constant per row.
    const Matrix cross = x * centers.transpose();
    const Vector cn = centers.rowwise().squaredNorm();
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best;
      (cn.transpose() - 2.0 * cross.row(i)).minCoeff(&best);
      assign[i] = static_cast<int>(best);
    }
    Matrix sums = Matrix::Zero(k, x.cols());
    Vector counts = Vector::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(assign[i]) += x.row(i);
      counts(assign[i]) += 1.0;
    }
    for (int c = 0; c < k; ++c)
      if (counts(c) > 0) centers.row(c) = sums.row(c) / counts(c);
  }
  return centers;
}

}  // namespace

// ---------------------------------------------------------------- DiagGmm

DiagGmm::DiagGmm(Vector weights, Matrix means, Matrix variances)
    : weights_(std::move(weights)),
      means_(std::move(means)),
      variances_(std::move(variances)) {
  if (weights_.size() < 1 || means_.rows() != weights_.size() ||
      variances_.rows() != weights_.size() || means_.cols() != variances_.cols())
    Fail(ErrorCode::kDimensionMismatch, "inconsistent GMM parameter shapes");
  if ((variances_.array() <= 0).any())
    Fail(ErrorCode::kInvalidInput, "GMM variances must be positive");
  if ((weights_.array() < 0).any() || std::abs(weights_.sum() - 1.0) > 1e-9)
    Fail(ErrorCode::kInvalidInput, "GMM weights must be a distribution");
  Precompute();
}

void DiagGmm::Precompute() {
  inv_vars_ = variances_.cwiseInverse();
  means_invvar_ = means_.cwiseProduct(inv_vars_);
  const int C = NumComponents(), D = Dim();
  gconsts_.resize(C);
  for (int c = 0; c < C; ++c) {
    gconsts_(c) = std::log(weights_(c)) -
                  0.5 * (D * kLog2Pi + variances_.row(c).array().log().sum() +
                         means_.row(c).cwiseProduct(means_invvar_.row(c)).sum());
  }
}

Matrix DiagGmm::ComponentLogLikes(const Eigen::Ref<const Matrix> &frames) const {
  Matrix ll = frames * means_invvar_.transpose();
  ll.noalias() -= 0.5 * frames.cwiseAbs2() * inv_vars_.transpose();
  ll.rowwise() += gconsts_.transpose();
  return ll;
}

std::uint64_t DiagGmm::Fingerprint() const {
  svak::Fingerprint f;
  f.Add(weights_);
  f.Add(means_);
  f.Add(variances_);
  return f.value();
}

void DiagGmm::Write(ArchiveWriter &w) const {
  w.WriteVector(weights_);
  w.WriteMatrix(means_);
  w.WriteMatrix(variances_);
}

DiagGmm DiagGmm::Read(ArchiveReader &r) {
  Vector w = r.ReadVector();
  Matrix m = r.ReadMatrix();
  Matrix v = r.ReadMatrix();
  return DiagGmm(std::move(w), std::move(m), std::move(v));
}

BaumWelchStats BaumWelchStats::Zero(int num_components, int dim,
                                    std::uint64_t ubm_fingerprint) {
  BaumWelchStats s;
  s.n = Vector::Zero(num_components);
  s.f = Matrix::Zero(num_components, dim);
  s.ubm_fingerprint = ubm_fingerprint;
  return s;
}

// ---------------------------------------------------------------- training

UbmTrainResult TrainUbm(std::span<const FeatureMatrix> data,
                        const UbmTrainOptions &opts) {
  const int C = opts.num_components;
  if (C < 1) Fail(ErrorCode::kInvalidInput, "UBM needs at least one component");
  Eigen::Index total = 0;
  int D = -1;
  for (const auto &f : data) {
    if (f.num_frames() == 0) continue;
    if (D < 0) D = static_cast<int>(f.dim());
    if (f.dim() != D)
      Fail(ErrorCode::kDimensionMismatch, "UBM training features differ in dim");
    if (!f.frames.allFinite())
      Fail(ErrorCode::kNumerical, "non-finite UBM training features");
    total += f.num_frames();
  }
  if (total < 10LL * C)
    Fail(ErrorCode::kNoData, "UBM with " + std::to_string(C) +
                                 " components needs >= " +
                                 std::to_string(10LL * C) + " frames, got " +
                                 std::to_string(total));

  // Global statistics for the variance floor.
  Vector gsum = Vector::Zero(D), gsq = Vector::Zero(D);
  for (const auto &f : data) {
    if (f.num_frames() == 0) continue;
    gsum += f.frames.colwise().sum().transpose();
    gsq += f.frames.cwiseAbs2().colwise().sum().transpose();
  }
  const Vector gmean = gsum / static_cast<double>(total);
  const Vector gvar =
      (gsq / static_cast<double>(total) - gmean.cwiseAbs2()).cwiseMax(1e-12);
  const Eigen::RowVectorXd floor = (opts.var_floor_rel * gvar).transpose();

  // Seeded subsample for k-means.
  std::mt19937_64 rng(DeriveSeed(opts.seed, "ubm/kmeans"));
  std::vector<std::pair<std::size_t, Eigen::Index>> index;
  index.reserve(static_cast<std::size_t>(total));
  for (std::size_t u = 0; u < data.size(); ++u)
    for (Eigen::Index t = 0; t < data[u].num_frames(); ++t) index.emplace_back(u, t);
  const auto nsub = std::min<std::size_t>(index.size(),
                                          static_cast<std::size_t>(opts.max_kmeans_frames));
  if (nsub < index.size()) {
    for (std::size_t i = 0; i < nsub; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, index.size() - 1);
      std::swap(index[i], index[pick(rng)]);
    }
    index.resize(nsub);
    std::sort(index.begin(), index.end());
  }
  Matrix sub(static_cast<Eigen::Index>(nsub), D);
  for (std::size_t i = 0; i < nsub; ++i)
    sub.row(static_cast<Eigen::Index>(i)) = data[index[i].first].frames.row(index[i].second);
  const Matrix centers = KMeans(sub, C, opts.kmeans_iters, rng);

  // Initial GMM from hard assignment to the k-means centres.
  Vector w0 = Vector::Zero(C);
  Matrix m0 = centers, s0 = Matrix::Zero(C, D);
  {
    const Matrix cross = sub * centers.transpose();
    const Vector cn = centers.rowwise().squaredNorm();
    for (Eigen::Index i = 0; i < sub.rows(); ++i) {
      Eigen::Index c;
      (cn.transpose() - 2.0 * cross.row(i)).minCoeff(&c);
      w0(c) += 1.0;
      s0.row(c) += (sub.row(i) - centers.row(c)).cwiseAbs2();
    }
  }
  Matrix v0(C, D);
  for (int c = 0; c < C; ++c) {
    v0.row(c) = w0(c) > 1 ? Eigen::RowVectorXd(s0.row(c) / w0(c))
                          : Eigen::RowVectorXd(gvar.transpose());
    v0.row(c) = v0.row(c).cwiseMax(floor);
  }
  w0 = (w0.array() + 1e-3).matrix();  // no empty component at start
  w0 /= w0.sum();

  UbmTrainResult result;
  result.gmm = DiagGmm(w0, m0, v0);
  const std::vector<Block> blocks = MakeBlocks(data);
  for (int iter = 0; iter < opts.em_iters; ++iter) {
    const EmAccum acc = EStep(result.gmm, data, blocks);
    if (!result.loglik_history.empty()) {
      const double prev = result.loglik_history.back();
      if (acc.loglik - prev < opts.min_rel_gain * std::abs(prev)) {
        // Converged: the current model stays, its likelihood is recorded.
        result.loglik_history.push_back(acc.loglik);
        SVAK_INFO("gmm", "converged after " << iter << " EM iterations");
        return result;
      }
    }
    result.loglik_history.push_back(acc.loglik);
    SVAK_INFO("gmm", "EM iter " << iter << " avg loglik/frame "
                                << acc.loglik / static_cast<double>(total));

    const DiagGmm &old = result.gmm;
    Vector w = acc.n / acc.n.sum();
    Matrix m = old.means(), v = old.variances();
    for (int c = 0; c < C; ++c) {
      if (acc.n(c) < 1e-8) continue;  // keep parameters of a vanished component
      m.row(c) = acc.f.row(c) / acc.n(c);
      v.row(c) = (acc.s.row(c) / acc.n(c) - m.row(c).cwiseAbs2()).cwiseMax(floor);
    }
    result.gmm = DiagGmm(w, m, v);
  }
  result.loglik_history.push_back(EStep(result.gmm, data, blocks).loglik);
  return result;
}

// ---------------------------------------------------------------- stats

double GmmLogLikelihood(const DiagGmm &gmm, const FeatureMatrix &features) {
  CheckDim(gmm, features);
  const Matrix ll = gmm.ComponentLogLikes(features.frames);
  double total = 0.0;
  for (Eigen::Index t = 0; t < ll.rows(); ++t) total += LogSumExp(ll.row(t));
  return total;
}

Matrix Responsibilities(const DiagGmm &gmm, const FeatureMatrix &features) {
  CheckDim(gmm, features);
  Matrix ll = gmm.ComponentLogLikes(features.frames);
  for (Eigen::Index t = 0; t < ll.rows(); ++t) {
    const double lse = LogSumExp(ll.row(t));
    ll.row(t) = (ll.row(t).array() - lse).exp();
  }
  return ll;
}

BaumWelchStats AccumulateStats(const DiagGmm &gmm, const FeatureMatrix &features) {
  CheckDim(gmm, features);
  BaumWelchStats s =
      BaumWelchStats::Zero(gmm.NumComponents(), gmm.Dim(), gmm.Fingerprint());
  if (features.num_frames() == 0) return s;
  if (!features.frames.allFinite())
    Fail(ErrorCode::kNumerical, "non-finite features in stats accumulation");
  const Matrix gamma = Responsibilities(gmm, features);
  const Eigen::Index T = gamma.rows();
  // Frame-ordered accumulation keeps the single-component case exact.
  for (Eigen::Index t = 0; t < T; ++t) {
    for (int c = 0; c < gmm.NumComponents(); ++c) {
      const double g = gamma(t, c);
      if (g == 0.0) continue;
      s.n(c) += g;
      s.f.row(c) += g * features.frames.row(t);
    }
  }
  s.total_frames = T;
  return s;
}

BaumWelchStats MergeStats(const BaumWelchStats &a, const BaumWelchStats &b) {
  if (a.n.size() != b.n.size() || a.f.rows() != b.f.rows() ||
      a.f.cols() != b.f.cols())
    Fail(ErrorCode::kDimensionMismatch, "cannot merge stats of different shape");
  if (a.ubm_fingerprint != b.ubm_fingerprint)
    Fail(ErrorCode::kFingerprint, "cannot merge stats from different UBMs");
  BaumWelchStats out;
  out.n = a.n + b.n;
  out.f = a.f + b.f;
  out.total_frames = a.total_frames + b.total_frames;
  out.ubm_fingerprint = a.ubm_fingerprint;
  return out;
}

}  // namespace svak
