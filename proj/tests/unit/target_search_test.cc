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

#include <gtest/gtest.h>

#include "svak/target_search.h"
#include "unit/test_util.h"
#include "unit/toy_system.h"

namespace svak {
namespace {

namespace fs = std::filesystem;

using testing::Backend;

Utterance MetaUtt(const std::string &utt, const std::string &spk, const std::string &nat) {
  Utterance u;
  u.utt_id = utt;
  u.speaker_id = spk;
  u.nationality = nat;
  u.language = nat == "Finnish" ? "fi" : "en";
  u.gender = "M";
  u.sample_rate_hz = 16000;
  u.duration_s = 1.0;
  return u;
}

UttEmbedding UttEmb(const std::string &utt, const std::string &spk, Vector v, double active = 5.0) {
  return {utt, Backend(std::move(v), spk, EmbeddingSource::kSingleUtterance), active};
}

// Targets at growing distance from the attacker along a random direction.
struct RadiusFixture {
  VerificationSystem system = testing::ToySystem(testing::IsotropicPlda(3));
  Embedding attacker;
  TargetDatabase db;
};

RadiusFixture MakeRadiusFixture() {
  RadiusFixture fx;
  std::mt19937_64 rng(1);
  const Vector a = testing::RandomVector(rng, 3, 0.3);
  const Vector dir = testing::RandomVector(rng, 3).normalized();
  fx.attacker = Backend(a, "attacker");
  std::vector<Utterance> utts;
  std::vector<UttEmbedding> embs;
  const double radii[] = {2.5, 0.5, 1.5, 3.5};  // ids t0..t3
  for (int j = 0; j < 4; ++j) {
    const std::string spk = "t" + std::to_string(j);
    utts.push_back(MetaUtt(spk + "-u0", spk, j % 2 == 0 ? "Finnish" : "English"));
    embs.push_back(UttEmb(spk + "-u0", spk, a + radii[j] * dir));
  }
  fx.db = BuildTargetDb("toy", Manifest(utts, ManifestRole::kTargetDb), embs);
  return fx;
}

TEST(BuildTargetDb, SingleUtteranceAverageAndMetadata) {
  Vector v(2);
  v << 0.5, -1.0;
  const std::vector<UttEmbedding> e = {UttEmb("u0", "s0", v)};
  const TargetDatabase db =
      BuildTargetDb("sys", Manifest({MetaUtt("u0", "s0", "Finnish")}, ManifestRole::kTargetDb), e);
  ASSERT_EQ(db.size(), 1u);
  EXPECT_EQ(db.at("s0").average.vector, v);
  EXPECT_EQ(db.at("s0").nationality, "Finnish");
  EXPECT_EQ(db.at("s0").language, "fi");
}

TEST(BuildTargetDb, DropsTargetsWithoutEmbeddings) {
  const std::vector<UttEmbedding> e = {UttEmb("u0", "s0", Vector::Zero(2))};
  const Manifest m({MetaUtt("u0", "s0", "Finnish"), MetaUtt("u1", "s1", "English")},
                   ManifestRole::kTargetDb);
  const TargetDatabase db = BuildTargetDb("sys", m, e);
  EXPECT_TRUE(db.contains("s0"));
  EXPECT_FALSE(db.contains("s1"));
}

TEST(RankTargets, FollowsPerturbationRadius) {
  const RadiusFixture fx = MakeRadiusFixture();
  const TargetRanking r = RankTargets(fx.system, fx.attacker, fx.db, {});
  ASSERT_EQ(r.entries.size(), 4u);
  EXPECT_EQ(r.entries[0].speaker_id, "t1");
  EXPECT_EQ(r.entries[1].speaker_id, "t2");
  EXPECT_EQ(r.entries[2].speaker_id, "t0");
  EXPECT_EQ(r.entries[3].speaker_id, "t3");
  const PldaScorer direct(testing::IsotropicPlda(3));
  for (const auto &e : r.entries)
    EXPECT_EQ(e.score, direct.Score(fx.db.at(e.speaker_id).average.vector, fx.attacker.vector));
  EXPECT_EQ(r.filter, "all");
}

TEST(RankTargets, OwnEmbeddingRanksFirst) {
  RadiusFixture fx = MakeRadiusFixture();
  std::map<std::string, TargetEntry> targets = fx.db.targets();
  TargetEntry self;
  self.speaker_id = "self";
  self.average = fx.attacker;
  self.utterances = {UttEmb("self-u0", "self", fx.attacker.vector)};
  targets["self"] = self;
  const TargetDatabase db("toy", targets);
  EXPECT_EQ(RankTargets(fx.system, fx.attacker, db, {}).entries[0].speaker_id, "self");
  EXPECT_NE(RankTargets(fx.system, fx.attacker, db, {}, {"self"}).entries[0].speaker_id, "self");
}

TEST(RankTargets, FilterEqualsRestrictionOfFullRanking) {
  const RadiusFixture fx = MakeRadiusFixture();
  const TargetRanking all = RankTargets(fx.system, fx.attacker, fx.db, {});
  const MetadataFilter fin = MetadataFilter::Parse("nationality=Finnish");
  const TargetRanking sub = RankTargets(fx.system, fx.attacker, fx.db, fin);
  EXPECT_EQ(sub.filter, "nationality=Finnish");
  std::vector<RankedTarget> restricted;
  for (const auto &e : all.entries)
    if (fx.db.at(e.speaker_id).nationality == "Finnish") restricted.push_back(e);
  ASSERT_EQ(sub.entries.size(), restricted.size());
  for (std::size_t i = 0; i < restricted.size(); ++i) {
    EXPECT_EQ(sub.entries[i].speaker_id, restricted[i].speaker_id);
    EXPECT_EQ(sub.entries[i].score, restricted[i].score);
  }
  testing::ExpectErrorCode(
      [&] { RankTargets(fx.system, fx.attacker, fx.db, MetadataFilter::Parse("nationality=Dutch")); },
      ErrorCode::kNoData);
}

TEST(SortRanking, TiesByIdAndAffineInvariance) {
  const std::vector<RankedTarget> raw = {{"b", 1.0}, {"a", 1.0}, {"c", 3.0}, {"d", -2.0}};
  const TargetRanking r = SortRanking("att", "all", raw);
  const std::vector<std::string> expect = {"c", "a", "b", "d"};
  for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_EQ(r.entries[i].speaker_id, expect[i]);
  std::vector<RankedTarget> moved = raw;
  for (auto &e : moved) e.score = 2.5 * e.score - 7.0;
  const TargetRanking r2 = SortRanking("att", "all", moved);
  for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_EQ(r2.entries[i].speaker_id, expect[i]);
}

TargetRanking RankingOf(int j) {
  TargetRanking r;
  for (int i = 0; i < j; ++i) r.entries.push_back({"t" + std::to_string(i), 10.0 - i});
  return r;
}

TEST(SelectTargets, Indices) {
  TargetSelection s = SelectTargets(RankingOf(3));
  EXPECT_EQ(s.closest.speaker_id, "t0");
  EXPECT_EQ(s.median.speaker_id, "t1");
  EXPECT_EQ(s.furthest.speaker_id, "t2");
  EXPECT_FALSE(s.degenerate);

  s = SelectTargets(RankingOf(1));
  EXPECT_EQ(s.closest.speaker_id, "t0");
  EXPECT_EQ(s.median.speaker_id, "t0");
  EXPECT_EQ(s.furthest.speaker_id, "t0");
  EXPECT_TRUE(s.degenerate);

  s = SelectTargets(RankingOf(4));
  EXPECT_EQ(s.median.speaker_id, "t1");
  EXPECT_GE(s.closest.score, s.median.score);
  EXPECT_GE(s.median.score, s.furthest.score);
  EXPECT_THROW(SelectTargets(RankingOf(0)), Error);
}

TEST(SelectUtterances, SingleLongUtterance) {
  const UtteranceSelection s =
      SelectUtterancesByScore({{"u0", 1.0, 40.0}}, TargetCategory::kClosest, 30.0);
  ASSERT_EQ(s.utt_ids.size(), 1u);
  EXPECT_EQ(s.utt_ids[0], "u0");
  EXPECT_FALSE(s.shortfall);
}

TEST(SelectUtterances, ClosestTakesTopUntilMinimum) {
  std::vector<ScoredUtterance> scored;
  for (int i = 0; i < 10; ++i) scored.push_back({"u" + std::to_string(i), 0.1 * ((i * 7) % 10), 5.0});
  const UtteranceSelection s = SelectUtterancesByScore(scored, TargetCategory::kClosest, 30.0);
  ASSERT_EQ(s.utt_ids.size(), 6u);
  EXPECT_DOUBLE_EQ(s.active_s, 30.0);
  std::vector<ScoredUtterance> sorted = scored;
  std::sort(sorted.begin(), sorted.end(), [](auto &a, auto &b) { return a.score > b.score; });
  for (int i = 0; i < 6; ++i) EXPECT_EQ(s.utt_ids[i], sorted[i].utt_id);

  const UtteranceSelection f = SelectUtterancesByScore(scored, TargetCategory::kFurthest, 30.0);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(f.utt_ids[i], sorted[9 - i].utt_id);
}

TEST(SelectUtterances, MedianOrdersByDistanceToMean) {
  const std::vector<ScoredUtterance> scored = {
      {"u5", 5.0, 1.0}, {"u2", 2.0, 1.0}, {"u4", 4.0, 1.0}, {"u1", 1.0, 1.0}, {"u3", 3.0, 1.0}};
  const UtteranceSelection s = SelectUtterancesByScore(scored, TargetCategory::kMedian, 5.0);
  const std::vector<std::string> expect = {"u3", "u2", "u4", "u1", "u5"};
  EXPECT_EQ(s.utt_ids, expect);
}

TEST(SelectUtterances, ShortfallReturnsEverything) {
  const UtteranceSelection s = SelectUtterancesByScore(
      {{"a", 1.0, 4.0}, {"b", 2.0, 4.0}}, TargetCategory::kClosest, 30.0);
  EXPECT_EQ(s.utt_ids.size(), 2u);
  EXPECT_TRUE(s.shortfall);
  EXPECT_DOUBLE_EQ(s.active_s, 8.0);
}

TEST(SelectUtterances, ScoresAgainstAttackerAndHonorsExcludes) {
  const RadiusFixture fx = MakeRadiusFixture();
  TargetEntry t;
  t.speaker_id = "t";
  std::mt19937_64 rng(4);
  for (int i = 0; i < 5; ++i)
    t.utterances.push_back(UttEmb("t-u" + std::to_string(i), "t", testing::RandomVector(rng, 3)));
  const UtteranceSelection all =
      SelectUtterances(fx.system, fx.attacker, t, TargetCategory::kClosest, 1.0);
  ASSERT_EQ(all.utt_ids.size(), 1u);
  const UtteranceSelection excl =
      SelectUtterances(fx.system, fx.attacker, t, TargetCategory::kClosest, 1.0, {all.utt_ids[0]});
  ASSERT_EQ(excl.utt_ids.size(), 1u);
  EXPECT_NE(excl.utt_ids[0], all.utt_ids[0]);
}

TEST(MetadataFilter, ParseAndDescribe) {
  EXPECT_EQ(MetadataFilter::Parse("all").Describe(), "all");
  EXPECT_EQ(MetadataFilter::Parse("gender=F").Describe(), "gender=F");
  EXPECT_THROW(MetadataFilter::Parse("nonsense"), Error);
}

}  // namespace
}  // namespace svak
