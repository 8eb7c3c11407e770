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

#ifndef SVAK_ATTACK_H_
#define SVAK_ATTACK_H_

#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "svak/backend.h"
#include "svak/metrics.h"
#include "svak/target_search.h"

namespace svak {

// Simulated mimicry. None of these kinds models real human imitation; they
// exist to exercise the protocol end to end.
enum class AttackerKind { kIdentity, kEmbeddingInterp, kFeatureWarp };
const char *AttackerKindName(AttackerKind k);
AttackerKind ParseAttackerKind(const std::string &s);

struct AttackerModel {
  AttackerKind kind = AttackerKind::kEmbeddingInterp;
  double lambda = 0.5;  // effort in [0, 1.5]; values above 1 overshoot
  std::uint64_t seed = 0;

  void Validate() const;
};

// (1 - lambda) * attacker + lambda * target; lambda == 0 returns `attacker`.
Embedding MimicEmbedding(const Embedding &attacker, const Embedding &target,
                         double lambda);

struct FeatureStats {
  Vector sum, sum_sq;
  double count = 0.0;

  void Add(const FeatureMatrix &f);
  void Merge(const FeatureStats &o);
  Vector Mean() const;
  Vector Stddev() const;
};

// Moves every dimension's mean and standard deviation from the utterance's
// own values towards the target's by `lambda`; lambda == 0 is the identity.
FeatureMatrix MimicFeatures(const FeatureMatrix &attacker, const FeatureStats &target,
                            double lambda);

struct AttackConfig {
  double min_active_s = 30.0;
  std::vector<MetadataFilter> filters = {MetadataFilter{},
                                         MetadataFilter{"nationality", "Finnish"}};
  // Fixed targets per attacker gender ("M", "F").
  std::map<std::string, std::vector<std::string>> common_targets;
  AttackerModel model;
  std::vector<double> lambda_grid = {0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5};
  std::set<std::string> exclude_utts;  // never selected as attack material
};

struct UttScore {
  std::string utt_id;
  double score = 0.0;
};

struct ScorePair {
  std::string test_utt;
  double natural = 0.0;
  double mimic = 0.0;
};

struct SlotScores {
  double model_self = 0.0;            // target model scored against itself
  std::vector<UttScore> target_self;  // selected target utts vs target model
  std::vector<ScorePair> pairs;       // attacker test utts vs target model
  std::string error;                  // set when this system could not score
};

struct TargetSlot {
  std::string filter;  // "all", "nationality=Finnish", or "common"
  TargetCategory category = TargetCategory::kClosest;
  std::string target_id;
  double search_score = 0.0;  // attacker-system ranking score
  bool degenerate = false;
  std::vector<std::string> selected_utts;
  double selected_active_s = 0.0;
  bool shortfall = false;
  std::map<std::string, SlotScores> systems;
};

struct SelfVerification {
  std::vector<UttScore> natural_self;  // attacker test utts vs own model
  std::vector<UttScore> mimic_self;    // mimicked test utts vs own model
};

struct AttackerResult {
  std::string attacker_id;
  std::string gender;
  std::vector<std::string> enroll_utts;
  std::vector<std::string> test_utts;
  std::vector<TargetSlot> slots;
  std::map<std::string, SelfVerification> self_verification;
  std::map<std::string, std::vector<RankedTarget>> rankings;  // per filter
};

struct LambdaPoint {
  std::string system_id;
  std::string category;
  double lambda = 0.0;
  double mean_natural = 0.0;
  double mean_mimic = 0.0;
  std::size_t n = 0;
};

struct AttackReport {
  std::string attacker_system;
  std::vector<std::string> systems;  // attacker system first
  AttackerModel model;
  double min_active_s = 0.0;
  std::vector<AttackerResult> attackers;
  std::vector<LambdaPoint> lambda_sweep;
  std::map<std::string, EerResult> eer;  // optional, from held-out trials
  std::size_t unique_targets = 0;
};

// Steps per attacker: average the natural enrollment half on the attacker
// system, rank and select targets per filter, pick attack utterances, then
// score natural and mimicked test utterances on every system. Target models
// exclude the selected utterances. Black-box scores never feed back.
AttackReport RunAttackProtocol(const Manifest &attackers, const Manifest &target_db,
                               const VerificationSystem &attacker_system,
                               std::span<const VerificationSystem *const> blackbox,
                               const AttackConfig &config);

// Utterances of one speaker split by sorted utt_id: first half enrolls,
// second half tests.
void SplitEnrollTest(std::vector<std::string> utt_ids,
                     std::vector<std::string> *enroll,
                     std::vector<std::string> *test);

// Flattens the report into score records for one system.
std::vector<ScoreRecord> AttackScoreRecords(const AttackReport &report,
                                            const std::string &system_id);

void SaveAttackReport(const AttackReport &report, const std::filesystem::path &path);
AttackReport LoadAttackReport(const std::filesystem::path &path);
std::string AttackReportToJson(const AttackReport &report);
AttackReport AttackReportFromJson(const std::string &text);

}  // namespace svak

#endif  // SVAK_ATTACK_H_
