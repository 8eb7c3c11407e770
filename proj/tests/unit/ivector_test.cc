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

#include <cmath>

#include <gtest/gtest.h>

#include "svak/gmm.h"
#include "svak/ivector.h"
#include "unit/test_util.h"

namespace svak {
namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kFp = 0x1234;

BaumWelchStats Stats(Vector n, Matrix f, std::uint64_t fp = kFp) {
  BaumWelchStats s;
  s.n = std::move(n);
  s.f = std::move(f);
  s.ubm_fingerprint = fp;
  return s;
}

TEST(ExtractEmbedding, ScalarClosedForm) {
  const TvModel tv(Matrix::Constant(1, 1, 0.5), Matrix::Zero(1, 1), Matrix::Ones(1, 1), kFp);
  const Embedding e = ExtractEmbedding(tv, Stats(Vector::Constant(1, 10.0), Matrix::Constant(1, 1, 2.0)));
  // w = (1 + N t^2 / s2)^-1 * t F / s2
  EXPECT_NEAR(e.vector(0), 1.0 / (1.0 + 10 * 0.25) * 0.5 * 2.0, 1e-12);
  EXPECT_NEAR(e.vector(0), 0.2857142857142857, 1e-9);
}

TEST(ExtractEmbedding, ZeroStatsGivePriorMean) {
  std::mt19937_64 rng(1);
  const TvModel tv(testing::RandomMatrix(rng, 6, 3), Matrix::Zero(2, 3), Matrix::Ones(2, 3), kFp);
  EXPECT_EQ(ExtractEmbedding(tv, Stats(Vector::Zero(2), Matrix::Zero(2, 3))).vector, Vector::Zero(3));
}

class PosteriorTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::mt19937_64 rng(2);
    t_ = testing::RandomMatrix(rng, C * D, R);
    mu_ = testing::RandomMatrix(rng, C, D);
    var_ = testing::RandomMatrix(rng, C, D).cwiseAbs().array() + 0.2;
    tv_ = TvModel(t_, mu_, var_, kFp);
    n_ = testing::RandomVector(rng, C).cwiseAbs() * 20.0;
    f_ = testing::RandomMatrix(rng, C, D, 5.0);
  }
  static constexpr int C = 3, D = 2, R = 2;
  Matrix t_, mu_, var_;
  TvModel tv_;
  Vector n_;
  Matrix f_;
};

TEST_F(PosteriorTest, GradientVanishesAtMean) {
  const IvectorPosterior post = IvectorPosteriorOf(tv_, Stats(n_, f_));
  // independent assembly of L and the linear term
  Matrix l = Matrix::Identity(R, R);
  Vector b = Vector::Zero(R);
  for (int c = 0; c < C; ++c) {
    const Matrix tc = t_.middleRows(c * D, D);
    const Vector inv = var_.row(c).transpose().cwiseInverse();
    l += n_(c) * tc.transpose() * inv.asDiagonal() * tc;
    b += tc.transpose() * inv.asDiagonal() * (f_.row(c) - n_(c) * mu_.row(c)).transpose();
  }
  EXPECT_LT((post.precision - l).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((b - l * post.mean).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_EQ(Eigen::LLT<Matrix>(post.precision).info(), Eigen::Success);
  EXPECT_LT((post.precision - post.precision.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST_F(PosteriorTest, LinearInCenteredStats) {
  const Matrix centered = f_ - n_.asDiagonal() * mu_;
  const double alpha = -2.75;
  const Vector w1 = ExtractEmbedding(tv_, Stats(n_, centered + n_.asDiagonal() * mu_)).vector;
  const Vector w2 =
      ExtractEmbedding(tv_, Stats(n_, alpha * centered + n_.asDiagonal() * mu_)).vector;
  EXPECT_LT((w2 - alpha * w1).cwiseAbs().maxCoeff(), 1e-9);
}

TEST_F(PosteriorTest, LargeCountApproachesWeightedLeastSquares) {
  std::mt19937_64 rng(3);
  const Vector offset = testing::RandomVector(rng, C * D);
  const double big = 1e6;
  Matrix f(C, D);
  for (int c = 0; c < C; ++c)
    f.row(c) = big * (mu_.row(c) + offset.segment(c * D, D).transpose());
  const Vector w = ExtractEmbedding(tv_, Stats(Vector::Constant(C, big), f)).vector;
  Vector inv(C * D);
  for (int c = 0; c < C; ++c) inv.segment(c * D, D) = var_.row(c).transpose().cwiseInverse();
  const Matrix a = t_.transpose() * inv.asDiagonal() * t_;
  const Vector ls = a.ldlt().solve(t_.transpose() * inv.asDiagonal() * offset);
  EXPECT_LT((w - ls).cwiseAbs().maxCoeff(), 1e-4);
}

TEST_F(PosteriorTest, FingerprintMismatchAndNonFinite) {
  testing::ExpectErrorCode([&] { ExtractEmbedding(tv_, Stats(n_, f_, kFp + 1)); },
                           ErrorCode::kFingerprint);
  Matrix bad = f_;
  bad(0, 0) = std::nan("");
  testing::ExpectErrorCode([&] { ExtractEmbedding(tv_, Stats(n_, bad)); }, ErrorCode::kNumerical);
}

TEST(AverageEmbeddings, Basics) {
  Embedding v{Vector::LinSpaced(4, -1, 2), "s", EmbeddingSource::kSingleUtterance,
              EmbeddingSpace::kRawTv};
  const std::vector<Embedding> one = {v};
  const Embedding a1 = AverageEmbeddings(one);
  EXPECT_EQ(a1.vector, v.vector);
  EXPECT_EQ(a1.source, EmbeddingSource::kAveraged);

  Embedding neg = v;
  neg.vector = -v.vector;
  const std::vector<Embedding> pair = {v, neg};
  EXPECT_LT(AverageEmbeddings(pair).vector.cwiseAbs().maxCoeff(), 1e-15);

  std::mt19937_64 rng(4);
  std::vector<Embedding> many;
  for (int i = 0; i < 28; ++i)
    many.push_back({testing::RandomVector(rng, 5), "s", EmbeddingSource::kSingleUtterance,
                    EmbeddingSpace::kRawTv});
  Vector brute = Vector::Zero(5);
  for (int d = 0; d < 5; ++d) {
    double s = 0;
    for (const auto &e : many) s += e.vector(d);
    brute(d) = s / 28.0;
  }
  EXPECT_LT((AverageEmbeddings(many).vector - brute).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AverageEmbeddings, Errors) {
  testing::ExpectErrorCode([] { AverageEmbeddings(std::span<const Embedding>()); },
                           ErrorCode::kNoData);
  const std::vector<Embedding> mixed = {
      {Vector::Zero(2), "s", EmbeddingSource::kSingleUtterance, EmbeddingSpace::kRawTv},
      {Vector::Zero(2), "s", EmbeddingSource::kSingleUtterance, EmbeddingSpace::kLdaWhitened}};
  EXPECT_THROW(AverageEmbeddings(mixed), Error);
}

// Stats drawn from the generative model of a rank-1 TV with C = D = 2.
struct Rank1Fixture {
  DiagGmm ubm;
  Vector t_true;
  std::vector<BaumWelchStats> stats;
};

Rank1Fixture MakeRank1(int n_utts, std::uint64_t seed) {
  Rank1Fixture fx;
  Matrix mu(2, 2), var(2, 2);
  mu << -2.0, 1.0, 3.0, 0.5;
  var << 0.5, 1.0, 0.8, 0.3;
  fx.ubm = DiagGmm(Vector::Constant(2, 0.5), mu, var);
  fx.t_true.resize(4);
  fx.t_true << 1.0, -0.6, 0.4, 0.8;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int u = 0; u < n_utts; ++u) {
    const double w = n(rng);
    BaumWelchStats s = BaumWelchStats::Zero(2, 2, fx.ubm.Fingerprint());
    for (int c = 0; c < 2; ++c) {
      const int frames = 100;
      s.n(c) = frames;
      for (int k = 0; k < frames; ++k)
        for (int d = 0; d < 2; ++d)
          s.f(c, d) += mu(c, d) + fx.t_true(c * 2 + d) * w + std::sqrt(var(c, d)) * n(rng);
    }
    s.total_frames = 200;
    fx.stats.push_back(std::move(s));
  }
  return fx;
}

TEST(TrainTv, RecoversRank1Subspace) {
  const Rank1Fixture fx = MakeRank1(400, 11);
  TvTrainOptions opts;
  opts.rank = 1;
  opts.em_iters = 20;
  opts.seed = 5;
  const TvTrainResult r = TrainTv(fx.stats, fx.ubm, opts);
  const Vector t = r.model.t_matrix().col(0);
  EXPECT_GT(std::abs(t.dot(fx.t_true)) / (t.norm() * fx.t_true.norm()), 0.99);
  for (std::size_t i = 1; i < r.objective_history.size(); ++i)
    EXPECT_GE(r.objective_history[i],
              r.objective_history[i - 1] - 1e-6 * std::abs(r.objective_history[i - 1]));
}

TEST(TrainTv, ZeroIterationsReturnsSeededInit) {
  const Rank1Fixture fx = MakeRank1(10, 12);
  TvTrainOptions opts;
  opts.rank = 2;
  opts.em_iters = 0;
  opts.seed = 5;
  const TvTrainResult a = TrainTv(fx.stats, fx.ubm, opts);
  const TvTrainResult b = TrainTv(fx.stats, fx.ubm, opts);
  EXPECT_EQ(a.model, b.model);
  EXPECT_TRUE(a.objective_history.empty());
  opts.seed = 6;
  EXPECT_NE(TrainTv(fx.stats, fx.ubm, opts).model.t_matrix(), a.model.t_matrix());
}

}  // namespace
}  // namespace svak
