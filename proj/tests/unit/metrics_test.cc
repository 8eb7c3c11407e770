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

#include "eer_oracle.h"
#include "svak/metrics.h"
#include "unit/test_util.h"

namespace svak {
namespace {

namespace fs = std::filesystem;

TEST(ComputeEer, HandExample) {
  const std::vector<double> tar = {0.9, 0.8, 0.55}, non = {0.6, 0.4, 0.3};
  const EerResult r = ComputeEer(tar, non);
  EXPECT_NEAR(r.eer, 1.0 / 3.0, 1e-15);
  EXPECT_GT(r.threshold, 0.55);
  EXPECT_LE(r.threshold, 0.6);
  EXPECT_EQ(r.n_target, 3u);
  EXPECT_EQ(r.n_nontarget, 3u);
}

TEST(ComputeEer, SeparatedAndIdentical) {
  const std::vector<double> hi = {3, 4, 5}, lo = {0, 1, 2};
  EXPECT_EQ(ComputeEer(hi, lo).eer, 0.0);
  EXPECT_EQ(ComputeEer(lo, lo).eer, 0.5);
  EXPECT_THROW(ComputeEer(std::vector<double>{}, lo), Error);
}

TEST(ComputeEer, MatchesBruteForceAndMonotoneMaps) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> size(1, 100);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int inst = 0; inst < 100; ++inst) {
    std::vector<double> tar(size(rng)), non(size(rng));
    // coarse rounding forces ties and plateaus
    for (double &x : tar) x = std::round(4 * (n(rng) + 1.0)) / 4;
    for (double &x : non) x = std::round(4 * n(rng)) / 4;
    const double eer = ComputeEer(tar, non).eer;
    EXPECT_NEAR(eer, testing::BruteForceEer(tar, non), 1e-12) << inst;
    auto mapped = [](std::vector<double> v, auto f) {
      for (double &x : v) x = f(x);
      return v;
    };
    auto affine = [](double x) { return 3.0 * x - 2.0; };
    auto cubic = [](double x) { return x * x * x + x; };
    EXPECT_NEAR(ComputeEer(mapped(tar, affine), mapped(non, affine)).eer, eer, 1e-12);
    EXPECT_NEAR(ComputeEer(mapped(tar, cubic), mapped(non, cubic)).eer, eer, 1e-12);
  }
}

TEST(MeanCi, TableValue) {
  const std::vector<double> x = {1, 2, 3};
  const MeanCi c = ComputeMeanCi(x);
  EXPECT_DOUBLE_EQ(c.mean, 2.0);
  // t(0.975, 2) = 4.302652729749464 from standard tables
  EXPECT_NEAR(c.halfwidth, 4.302652729749464 / std::sqrt(3.0), 1e-12);
  EXPECT_NEAR(c.halfwidth, 2.484, 1e-3);
}

TEST(MeanCi, ConstantDoublingAndTooFew) {
  const std::vector<double> k = {4, 4, 4, 4};
  EXPECT_EQ(ComputeMeanCi(k).halfwidth, 0.0);
  const std::vector<double> x = {0.5, -1.0, 2.25, 3.0}, x2 = {1.0, -2.0, 4.5, 6.0};
  EXPECT_NEAR(ComputeMeanCi(x2).mean, 2 * ComputeMeanCi(x).mean, 1e-12);
  EXPECT_NEAR(ComputeMeanCi(x2).halfwidth, 2 * ComputeMeanCi(x).halfwidth, 1e-12);
  EXPECT_THROW(ComputeMeanCi(std::vector<double>{1.0}), Error);
}

TEST(MeanCi, HalfwidthShrinksAsInverseRootN) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(0.0, 1.0);
  auto avg_halfwidth = [&](int size) {
    double acc = 0;
    for (int rep = 0; rep < 400; ++rep) {
      std::vector<double> x(size);
      for (double &v : x) v = n(rng);
      acc += ComputeMeanCi(x).halfwidth;
    }
    return acc / 400;
  };
  const double h25 = avg_halfwidth(25), h100 = avg_halfwidth(100);
  // t(0.975, 24) = 2.0638985616, t(0.975, 99) = 1.9842169516
  const double expect = 0.5 * 1.9842169516 / 2.0638985616;
  EXPECT_NEAR(h100 / h25, expect, 0.05 * expect);
}

TEST(FormatCell, Rendering) {
  EXPECT_EQ(FormatCell({-9.7, 5.2, 6, true}), "-9.7 ± 5.2");
  EXPECT_EQ(FormatCell({-0.01, 0.0, 3, true}), "0.0 ± 0.0");
  EXPECT_EQ(FormatCell({2.5, 0.0, 1, false}), "2.5 (n=1)");
}

TEST(PairwiseAgreements, Counts) {
  EXPECT_EQ(PairwiseAgreements({3, 2, 1}, {3, 2, 1}), 3);
  EXPECT_EQ(PairwiseAgreements({3, 2, 1}, {3, 1, 2}), 2);
  EXPECT_EQ(PairwiseAgreements({3, 2, 1}, {1, 2, 3}), 0);
}

}  // namespace
}  // namespace svak
