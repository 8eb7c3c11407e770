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

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "svak/gmm.h"
#include "unit/test_util.h"

namespace svak {
namespace {

namespace fs = std::filesystem;

FeatureMatrix Frames(Matrix m) {
  FeatureMatrix f;
  f.frames = std::move(m);
  return f;
}

double NormalPdf(double x, double mu, double var) {
  return std::exp(-0.5 * (x - mu) * (x - mu) / var) / std::sqrt(2.0 * M_PI * var);
}

DiagGmm TwoComponent(double w0, double mu0, double mu1) {
  Vector w(2);
  w << w0, 1.0 - w0;
  Matrix mu(2, 1), var(2, 1);
  mu << mu0, mu1;
  var << 1.0, 1.0;
  return DiagGmm(w, mu, var);
}

TEST(GmmLogLikelihood, StandardNormalAtZero) {
  const DiagGmm g(Vector::Ones(1), Matrix::Zero(1, 1), Matrix::Ones(1, 1));
  EXPECT_NEAR(GmmLogLikelihood(g, Frames(Matrix::Zero(1, 1))), -0.5 * std::log(2 * M_PI), 1e-12);
}

TEST(GmmLogLikelihood, DuplicatingFramesDoubles) {
  std::mt19937_64 rng(1);
  const Matrix x = testing::RandomMatrix(rng, 40, 1);
  Matrix xx(80, 1);
  xx << x, x;
  const DiagGmm g = TwoComponent(0.3, -1.0, 2.0);
  EXPECT_NEAR(GmmLogLikelihood(g, Frames(xx)), 2.0 * GmmLogLikelihood(g, Frames(x)), 1e-9);
}

TEST(GmmLogLikelihood, TwoComponentHandCase) {
  const double expect = std::log(0.5 * NormalPdf(0, -1, 1) + 0.5 * NormalPdf(0, 1, 1));
  EXPECT_NEAR(GmmLogLikelihood(TwoComponent(0.5, -1, 1), Frames(Matrix::Zero(1, 1))), expect,
              1e-12);
}

TEST(GmmLogLikelihood, DimensionMismatch) {
  testing::ExpectErrorCode(
      [] { GmmLogLikelihood(TwoComponent(0.5, -1, 1), Frames(Matrix::Zero(3, 2))); },
      ErrorCode::kDimensionMismatch);
}

TEST(Responsibilities, SingleComponentIsOnes) {
  const DiagGmm g(Vector::Ones(1), Matrix::Zero(1, 2), Matrix::Ones(1, 2));
  std::mt19937_64 rng(2);
  EXPECT_EQ(Responsibilities(g, Frames(testing::RandomMatrix(rng, 7, 2))), Matrix::Ones(7, 1));
}

TEST(Responsibilities, MidpointOfSymmetricPair) {
  const Matrix r = Responsibilities(TwoComponent(0.5, -3, 3), Frames(Matrix::Zero(1, 1)));
  EXPECT_NEAR(r(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(r(0, 1), 0.5, 1e-15);
}

TEST(Responsibilities, AsymmetricMatchesBayes) {
  const DiagGmm g = TwoComponent(0.2, 0.0, 2.0);
  Matrix x(3, 1);
  x << 0.3, 1.1, -4.0;
  const Matrix r = Responsibilities(g, Frames(x));
  for (int t = 0; t < 3; ++t) {
    const double a = 0.2 * NormalPdf(x(t, 0), 0.0, 1.0);
    const double b = 0.8 * NormalPdf(x(t, 0), 2.0, 1.0);
    EXPECT_NEAR(r(t, 0), a / (a + b), 1e-12);
    EXPECT_NEAR(r(t, 1), b / (a + b), 1e-12);
    EXPECT_NEAR(r.row(t).sum(), 1.0, 1e-9);
  }
  // far in the tail, still finite and normalized
  Matrix far(1, 1);
  far << 1e3;
  const Matrix rf = Responsibilities(g, Frames(far));
  EXPECT_TRUE(rf.allFinite());
  EXPECT_NEAR(rf.sum(), 1.0, 1e-12);
}

TEST(AccumulateStats, SingleComponent) {
  std::mt19937_64 rng(3);
  const Matrix x = testing::RandomMatrix(rng, 9, 2);
  const DiagGmm g(Vector::Ones(1), Matrix::Zero(1, 2), Matrix::Ones(1, 2));
  const BaumWelchStats s = AccumulateStats(g, Frames(x));
  EXPECT_EQ(s.n(0), 9.0);
  EXPECT_LT((s.f.row(0) - x.colwise().sum()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(s.total_frames, 9);
  EXPECT_EQ(s.ubm_fingerprint, g.Fingerprint());
}

TEST(AccumulateStats, EmptyIsZero) {
  const DiagGmm g = TwoComponent(0.5, -1, 1);
  const BaumWelchStats s = AccumulateStats(g, Frames(Matrix::Zero(0, 1)));
  EXPECT_EQ(s.n, Vector::Zero(2));
  EXPECT_EQ(s.f, Matrix::Zero(2, 1));
  EXPECT_EQ(s.total_frames, 0);
}

TEST(AccumulateStats, TwoComponentHandCase) {
  const DiagGmm g = TwoComponent(0.2, 0.0, 2.0);
  Matrix x(2, 1);
  x << 0.5, 1.5;
  const BaumWelchStats s = AccumulateStats(g, Frames(x));
  double n0 = 0, f0 = 0;
  for (int t = 0; t < 2; ++t) {
    const double a = 0.2 * NormalPdf(x(t, 0), 0.0, 1.0);
    const double b = 0.8 * NormalPdf(x(t, 0), 2.0, 1.0);
    n0 += a / (a + b);
    f0 += a / (a + b) * x(t, 0);
  }
  EXPECT_NEAR(s.n(0), n0, 1e-12);
  EXPECT_NEAR(s.n(1), 2.0 - n0, 1e-12);
  EXPECT_NEAR(s.f(0, 0), f0, 1e-12);
  EXPECT_NEAR(s.f(1, 0), 2.0 - f0, 1e-12);
}

TEST(MergeStats, IdentityCommutativityAndConcatenation) {
  const DiagGmm g = TwoComponent(0.4, -1.0, 1.5);
  std::mt19937_64 rng(4);
  std::vector<Matrix> parts = {testing::RandomMatrix(rng, 11, 1), testing::RandomMatrix(rng, 7, 1),
                               testing::RandomMatrix(rng, 13, 1)};
  Matrix all(31, 1);
  all << parts[0], parts[1], parts[2];
  const BaumWelchStats a = AccumulateStats(g, Frames(parts[0]));
  const BaumWelchStats b = AccumulateStats(g, Frames(parts[1]));
  const BaumWelchStats c = AccumulateStats(g, Frames(parts[2]));
  const BaumWelchStats zero = BaumWelchStats::Zero(2, 1, g.Fingerprint());

  const BaumWelchStats az = MergeStats(a, zero);
  EXPECT_EQ(az.n, a.n);
  EXPECT_EQ(az.f, a.f);
  EXPECT_EQ(MergeStats(a, b).n, MergeStats(b, a).n);
  EXPECT_EQ(MergeStats(a, b).f, MergeStats(b, a).f);

  const BaumWelchStats merged = MergeStats(MergeStats(a, b), c);
  const BaumWelchStats direct = AccumulateStats(g, Frames(all));
  EXPECT_LT((merged.n - direct.n).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((merged.f - direct.f).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_EQ(merged.total_frames, 31);

  testing::ExpectErrorCode(
      [&] { MergeStats(a, BaumWelchStats::Zero(3, 1, g.Fingerprint())); },
      ErrorCode::kDimensionMismatch);
}

TEST(TrainUbm, SingleComponentClosedForm) {
  std::mt19937_64 rng(5);
  Matrix x = testing::RandomMatrix(rng, 500, 3, 2.0);
  x.col(1).array() += 4.0;
  std::vector<FeatureMatrix> data = {Frames(x.topRows(200)), Frames(x.bottomRows(300))};
  UbmTrainOptions opts;
  opts.num_components = 1;
  opts.em_iters = 3;
  const DiagGmm g = TrainUbm(data, opts).gmm;
  const Vector mean = x.colwise().mean();
  const Vector var = (x.rowwise() - mean.transpose()).cwiseAbs2().colwise().mean();
  EXPECT_NEAR(g.weights()(0), 1.0, 1e-12);
  EXPECT_LT((g.means().row(0).transpose() - mean).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((g.variances().row(0).transpose() - var).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(TrainUbm, MonotoneAndFloored) {
  std::mt19937_64 rng(6);
  std::vector<FeatureMatrix> data;
  for (int u = 0; u < 6; ++u) {
    Matrix x = testing::RandomMatrix(rng, 300, 2);
    for (int t = 0; t < 300; t += 3) x.row(t).array() += 4.0;
    data.push_back(Frames(x));
  }
  UbmTrainOptions opts;
  opts.num_components = 8;
  opts.em_iters = 15;
  opts.min_rel_gain = 0.0;
  opts.seed = 9;
  const UbmTrainResult r = TrainUbm(data, opts);
  ASSERT_GE(r.loglik_history.size(), 2u);
  for (std::size_t i = 1; i < r.loglik_history.size(); ++i)
    EXPECT_GE(r.loglik_history[i], r.loglik_history[i - 1] - 1e-6 * std::abs(r.loglik_history[i - 1]));
  Matrix all(0, 2);
  for (const auto &f : data) {
    Matrix tmp(all.rows() + f.frames.rows(), 2);
    tmp << all, f.frames;
    all = tmp;
  }
  const Vector gvar =
      (all.rowwise() - all.colwise().mean()).cwiseAbs2().colwise().mean().transpose();
  for (int c = 0; c < 8; ++c)
    for (int d = 0; d < 2; ++d) EXPECT_GE(r.gmm.variances()(c, d), 1e-4 * gvar(d) * (1 - 1e-12));
}

TEST(TrainUbm, RecoversKnownMixture) {
  const std::array<std::array<double, 2>, 4> truth = {{{-4, -4}, {-4, 4}, {4, -4}, {4, 4}}};
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 0.7);
  Matrix x(8000, 2);
  for (int t = 0; t < 8000; ++t)
    for (int d = 0; d < 2; ++d) x(t, d) = truth[t % 4][d] + n(rng);
  std::vector<FeatureMatrix> data = {Frames(x)};
  UbmTrainOptions opts;
  opts.num_components = 4;
  opts.em_iters = 20;
  opts.seed = 3;
  const DiagGmm g = TrainUbm(data, opts).gmm;
  std::array<int, 4> perm = {0, 1, 2, 3};
  double best = 1e300;
  do {
    double worst = 0;
    for (int k = 0; k < 4; ++k)
      for (int d = 0; d < 2; ++d)
        worst = std::max(worst, std::abs(g.means()(perm[k], d) - truth[k][d]));
    best = std::min(best, worst);
  } while (std::next_permutation(perm.begin(), perm.end()));
  EXPECT_LT(best, 0.1);
}

TEST(TrainUbm, SerialAndChunkedReductionsAgree) {
  std::mt19937_64 rng(8);
  std::vector<FeatureMatrix> data;
  for (int u = 0; u < 5; ++u) data.push_back(Frames(testing::RandomMatrix(rng, 200, 2)));
  UbmTrainOptions opts;
  opts.num_components = 4;
  opts.em_iters = 4;
  SetNumThreads(1);
  const DiagGmm a = TrainUbm(data, opts).gmm;
  SetNumThreads(3);
  const DiagGmm b = TrainUbm(data, opts).gmm;
  SetNumThreads(1);
  EXPECT_EQ(a, b);
}

}  // namespace
}  // namespace svak
