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

#ifndef SVAK_GMM_H_
#define SVAK_GMM_H_

#include <cstdint>
#include <span>
#include <vector>

#include "svak/archive.h"
#include "svak/common.h"
#include "svak/features.h"

namespace svak {

// Diagonal-covariance Gaussian mixture.
class DiagGmm {
 public:
  static constexpr ModelKind kKind = ModelKind::kUbm;

  DiagGmm() = default;
  DiagGmm(Vector weights, Matrix means, Matrix variances);

  int NumComponents() const { return static_cast<int>(weights_.size()); }
  int Dim() const { return static_cast<int>(means_.cols()); }
  const Vector &weights() const { return weights_; }
  const Matrix &means() const { return means_; }          // C x D
  const Matrix &variances() const { return variances_; }  // C x D

  // T x C matrix of log(w_c) + log N(x_t; mu_c, diag(var_c)).
  Matrix ComponentLogLikes(const Eigen::Ref<const Matrix> &frames) const;

  std::uint64_t Fingerprint() const;

  void Write(ArchiveWriter &w) const;
  static DiagGmm Read(ArchiveReader &r);
  bool operator==(const DiagGmm &o) const {
    return weights_ == o.weights_ && means_ == o.means_ &&
           variances_ == o.variances_;
  }

 private:
  void Precompute();

  Vector weights_;
  Matrix means_;
  Matrix variances_;
  // derived
  Matrix inv_vars_;        // C x D
  Matrix means_invvar_;    // C x D
  Vector gconsts_;         // C
};

// Zeroth- and first-order Baum-Welch statistics of one or more utterances.
struct BaumWelchStats {
  Vector n;  // C
  Matrix f;  // C x D
  std::int64_t total_frames = 0;
  std::uint64_t ubm_fingerprint = 0;

  static BaumWelchStats Zero(int num_components, int dim,
                             std::uint64_t ubm_fingerprint);
  int NumComponents() const { return static_cast<int>(n.size()); }
  int Dim() const { return static_cast<int>(f.cols()); }
};

struct UbmTrainOptions {
  int num_components = 512;
  int em_iters = 10;
  std::uint64_t seed = 0;
  int kmeans_iters = 10;
  int max_kmeans_frames = 100000;
  double min_rel_gain = 1e-5;     // EM stops below this relative gain
  double var_floor_rel = 1e-4;    // fraction of the global per-dim variance
};

struct UbmTrainResult {
  DiagGmm gmm;
  // Total log-likelihood of the training frames under the initial model and
  // after every completed EM update.
  std::vector<double> loglik_history;
};

UbmTrainResult TrainUbm(std::span<const FeatureMatrix> data,
                        const UbmTrainOptions &opts);

double GmmLogLikelihood(const DiagGmm &gmm, const FeatureMatrix &features);

// T x C posteriors, rows sum to one.
Matrix Responsibilities(const DiagGmm &gmm, const FeatureMatrix &features);

BaumWelchStats AccumulateStats(const DiagGmm &gmm, const FeatureMatrix &features);

BaumWelchStats MergeStats(const BaumWelchStats &a, const BaumWelchStats &b);

}  // namespace svak

#endif  // SVAK_GMM_H_
