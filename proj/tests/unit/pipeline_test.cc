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

#include <gtest/gtest.h>

#include "svak/attack.h"
#include "svak/experiment.h"
#include "svak/report.h"
#include "unit/test_util.h"

namespace svak {
namespace {

namespace fs = std::filesystem;

// A small trained system shared by every test in this file.
class PipelineFixture : public ::testing::Test {
 protected:
  static constexpr int kSpeakers = 12;
  static constexpr int kUtts = 6;

  static void SetUpTestSuite() {
    dir_ = new testing::TempDir;
    SyntheticCorpusOptions copts;
    copts.min_utt_s = 3.0;
    copts.max_utt_s = 4.0;
    corpus_ = new Manifest(GenerateSyntheticCorpus(kSpeakers, kUtts, 21, dir_->path(), copts));
    const std::vector<std::string> spk = corpus_->speakers();
    auto subset = [&](int lo, int hi, ManifestRole role) {
      const std::set<std::string> keep(spk.begin() + lo, spk.begin() + hi);
      return corpus_->Filter([&](const Utterance &u) { return keep.count(u.speaker_id) > 0; },
                             role);
    };
    train_ = new Manifest(subset(0, 8, ManifestRole::kUbmTrain));
    targets_ = new Manifest(subset(0, 10, ManifestRole::kTargetDb));
    attackers_ = new Manifest(subset(10, 12, ManifestRole::kAttacker));
    eval_ = new Manifest(subset(8, 12, ManifestRole::kEval));

    SystemSpec spec;
    spec.id = "small";
    spec.features = FeatureProfile("attacker");
    spec.ubm.num_components = 8;
    spec.ubm.em_iters = 5;
    spec.tv.rank = 10;
    spec.tv.em_iters = 3;
    spec.backend.lda_dim = 6;
    spec.backend.plda_dim = 4;
    spec.backend.plda_iters = 5;
    system_ = new VerificationSystem(TrainSystem(spec, *train_, *train_, *train_, 5).system);
  }
  static void TearDownTestSuite() {
    delete system_;
    delete eval_;
    delete attackers_;
    delete targets_;
    delete train_;
    delete corpus_;
    delete dir_;
  }

  static AttackReport Attack(AttackerKind kind, double lambda,
                             const VerificationSystem *blackbox = nullptr) {
    AttackConfig cfg;
    cfg.min_active_s = 3.0;
    cfg.filters = {MetadataFilter{}, MetadataFilter::Parse("nationality=Finnish")};
    cfg.model.kind = kind;
    cfg.model.lambda = lambda;
    cfg.lambda_grid = {0.0, 1.0};
    cfg.common_targets = {{"M", {"spk0000", "spk0002"}}, {"F", {"spk0001", "spk0003"}}};
    std::vector<const VerificationSystem *> bb;
    if (blackbox) bb.push_back(blackbox);
    return RunAttackProtocol(*attackers_, *targets_, *system_, bb, cfg);
  }

  static testing::TempDir *dir_;
  static Manifest *corpus_, *train_, *targets_, *attackers_, *eval_;
  static VerificationSystem *system_;
};

testing::TempDir *PipelineFixture::dir_ = nullptr;
Manifest *PipelineFixture::corpus_ = nullptr;
Manifest *PipelineFixture::train_ = nullptr;
Manifest *PipelineFixture::targets_ = nullptr;
Manifest *PipelineFixture::attackers_ = nullptr;
Manifest *PipelineFixture::eval_ = nullptr;
VerificationSystem *PipelineFixture::system_ = nullptr;

TEST_F(PipelineFixture, EmptyTrialListScoresNothing) {
  EXPECT_TRUE(ScoreTrials(*system_, {}, {}, {}).empty());
}

TEST_F(PipelineFixture, TrialCountIsCrossProduct) {
  const EvalPlan plan = BuildEvalPlan(*eval_, 2);
  const std::size_t tests_per_speaker = kUtts - 2;
  EXPECT_EQ(plan.trials.size(), 4 * 4 * tests_per_speaker);
  const auto n_target = std::count_if(plan.trials.begin(), plan.trials.end(),
                                      [](const Trial &t) { return t.label == TrialLabel::kTarget; });
  EXPECT_EQ(static_cast<std::size_t>(n_target), 4 * tests_per_speaker);
}

TEST_F(PipelineFixture, SelfTrialsBeatImpostors) {
  const EvalResult r = RunEval(*system_, *eval_, 3);
  EXPECT_EQ(RunEval(*system_, *eval_, 3).records, r.records);  // deterministic
  // pair each target trial with every impostor trial on the same test utterance
  int wins = 0, total = 0;
  for (const auto &t : r.records) {
    if (t.label != TrialLabel::kTarget) continue;
    for (const auto &n : r.records) {
      if (n.label != TrialLabel::kNontarget || n.test_utt != t.test_utt) continue;
      ++total;
      wins += t.score > n.score;
    }
  }
  ASSERT_GT(total, 0);
  EXPECT_GE(static_cast<double>(wins) / total, 0.95);
}

TEST_F(PipelineFixture, ArchiveRoundTripKeepsScores) {
  SaveModel(*system_, dir_->path() / "small.svak");
  const auto back = LoadModel<VerificationSystem>(dir_->path() / "small.svak");
  const Utterance &u = eval_->entries()[0], &v = eval_->entries()[1];
  const UttEmbedding a = system_->Embed(u), b = system_->Embed(v);
  const UttEmbedding a2 = back.Embed(u), b2 = back.Embed(v);
  EXPECT_EQ(a.embedding.vector, a2.embedding.vector);
  EXPECT_EQ(system_->Score(a.embedding, b.embedding), back.Score(a2.embedding, b2.embedding));
}

TEST_F(PipelineFixture, ForeignFeaturesRejected) {
  const FeatureMatrix f = ExtractFeatures(eval_->entries()[0], FeatureProfile("attacked1"));
  testing::ExpectErrorCode([&] { system_->EmbedFeatures(f, "x"); }, ErrorCode::kFingerprint);
}

TEST_F(PipelineFixture, IdentityAttackerChangesNothing) {
  for (AttackerKind kind : {AttackerKind::kIdentity, AttackerKind::kEmbeddingInterp,
                            AttackerKind::kFeatureWarp}) {
    const AttackReport r = Attack(kind, kind == AttackerKind::kIdentity ? 0.7 : 0.0);
    for (const auto &a : r.attackers) {
      for (const auto &slot : a.slots)
        for (const auto &[sys, s] : slot.systems)
          for (const auto &p : s.pairs) EXPECT_EQ(p.mimic, p.natural);
      for (const auto &[sys, sv] : a.self_verification) {
        std::map<std::string, double> natural;
        for (const auto &s : sv.natural_self) natural[s.utt_id] = s.score;
        ASSERT_FALSE(sv.mimic_self.empty());
        for (const auto &s : sv.mimic_self)
          EXPECT_EQ(s.score, natural.at(s.utt_id.substr(0, s.utt_id.find("->"))));
      }
    }
    const DifferenceTable t = BuildDifferenceTable(r);
    for (const auto &[key, cell] : t.cells) {
      EXPECT_EQ(cell.mean, 0.0);
      EXPECT_EQ(cell.halfwidth, 0.0);
    }
  }
}

TEST_F(PipelineFixture, FullInterpolationHitsTargetSelfScore) {
  const AttackReport r = Attack(AttackerKind::kEmbeddingInterp, 1.0);
  int checked = 0;
  for (const auto &a : r.attackers)
    for (const auto &slot : a.slots)
      for (const auto &[sys, s] : slot.systems)
        for (const auto &p : s.pairs) {
          EXPECT_EQ(p.mimic, s.model_self);
          ++checked;
        }
  EXPECT_GT(checked, 0);
}

TEST_F(PipelineFixture, DisguiseLowersSelfScore) {
  const AttackReport r = Attack(AttackerKind::kEmbeddingInterp, 1.0);
  for (const auto &a : r.attackers) {
    const SelfVerification &sv = a.self_verification.at(system_->id());
    double nat = 0, mim = 0;
    for (const auto &s : sv.natural_self) nat += s.score;
    for (const auto &s : sv.mimic_self) mim += s.score;
    EXPECT_LT(mim / sv.mimic_self.size(), nat / sv.natural_self.size()) << a.attacker_id;
  }
}

TEST_F(PipelineFixture, ProtocolIsDeterministicAndCopyAgreesFully) {
  const VerificationSystem copy("copy", system_->feature_config(), system_->ubm(), system_->tv(),
                                system_->backend());
  const AttackReport a = Attack(AttackerKind::kEmbeddingInterp, 0.5, &copy);
  const AttackReport b = Attack(AttackerKind::kEmbeddingInterp, 0.5, &copy);
  EXPECT_EQ(AttackReportToJson(a), AttackReportToJson(b));
  for (const auto &row : OrderingConsistency(a)) EXPECT_EQ(row.agreements, 3);
  for (const auto &att : a.attackers) {
    EXPECT_EQ(att.slots.size(), 8u);  // 3 ranks x 2 filters + 2 common
    for (const auto &slot : att.slots)
      EXPECT_EQ(slot.systems.size(), 2u);
  }
}

}  // namespace
}  // namespace svak
