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

#ifndef SVAK_TARGET_SEARCH_H_
#define SVAK_TARGET_SEARCH_H_

#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "svak/backend.h"
#include "svak/corpus.h"

namespace svak {

struct TargetEntry {
  std::string speaker_id;
  Embedding average;                     // mean of `utterances`
  std::vector<UttEmbedding> utterances;  // manifest order
  std::string nationality;
  std::string language;
  std::string gender;
};

class TargetDatabase {
 public:
  TargetDatabase() = default;
  TargetDatabase(std::string system_id, std::map<std::string, TargetEntry> targets);

  const std::string &system_id() const { return system_id_; }
  const std::map<std::string, TargetEntry> &targets() const { return targets_; }
  std::size_t size() const { return targets_.size(); }
  const TargetEntry &at(const std::string &speaker_id) const;
  bool contains(const std::string &speaker_id) const {
    return targets_.count(speaker_id) > 0;
  }

 private:
  std::string system_id_;
  std::map<std::string, TargetEntry> targets_;
};

// Groups precomputed utterance embeddings by speaker; utterances missing from
// `embeddings` are skipped and a speaker with none left is dropped.
TargetDatabase BuildTargetDb(const std::string &system_id, const Manifest &manifest,
                             std::span<const UttEmbedding> embeddings);
// Embeds the manifest with `system` first; per-utterance failures are logged.
TargetDatabase BuildTargetDb(const VerificationSystem &system,
                             const Manifest &manifest);

// key=value over nationality, language or gender. An empty key matches all.
struct MetadataFilter {
  std::string key;
  std::string value;

  bool Matches(const TargetEntry &t) const;
  std::string Describe() const;  // "all" or "key=value"
  static MetadataFilter Parse(const std::string &spec);
  bool operator==(const MetadataFilter &) const = default;
};

struct RankedTarget {
  std::string speaker_id;
  double score = 0.0;
};

struct TargetRanking {
  std::string attacker_id;
  std::string filter;
  std::vector<RankedTarget> entries;  // score descending, ties by id ascending
};

// Scores the attacker embedding against every filtered target average.
// Speakers in `exclude_speakers` never enter the ranking.
TargetRanking RankTargets(const VerificationSystem &system,
                          const Embedding &attacker, const TargetDatabase &db,
                          const MetadataFilter &filter,
                          const std::set<std::string> &exclude_speakers = {});

// Sorting step of RankTargets, exposed for callers that already hold scores.
TargetRanking SortRanking(std::string attacker_id, std::string filter,
                          std::vector<RankedTarget> scored);

struct TargetSelection {
  RankedTarget closest, median, furthest;
  bool degenerate = false;  // fewer than three distinct targets were ranked
};

// closest = 0, median = floor((J-1)/2), furthest = J-1.
TargetSelection SelectTargets(const TargetRanking &ranking);

enum class TargetCategory { kClosest, kMedian, kFurthest, kCommon };
const char *TargetCategoryName(TargetCategory c);
TargetCategory ParseTargetCategory(const std::string &s);

struct ScoredUtterance {
  std::string utt_id;
  double score = 0.0;
  double active_s = 0.0;
};

struct UtteranceSelection {
  std::vector<std::string> utt_ids;  // pick order
  double active_s = 0.0;
  bool shortfall = false;  // all utterances taken and still below the minimum
};

// Closest (and common) take the highest scores first, furthest the lowest,
// median the smallest |score - mean|; ties go to the lower utt_id. Stops as
// soon as the accumulated active speech reaches `min_active_s`.
UtteranceSelection SelectUtterancesByScore(std::vector<ScoredUtterance> scored,
                                           TargetCategory category,
                                           double min_active_s);

UtteranceSelection SelectUtterances(const VerificationSystem &system,
                                    const Embedding &attacker,
                                    const TargetEntry &target,
                                    TargetCategory category, double min_active_s,
                                    const std::set<std::string> &exclude_utts = {});

// Columns: rank, speaker_id, score, nationality, language, gender.
void WriteRanking(const std::filesystem::path &path, const TargetRanking &ranking,
                  const TargetDatabase &db);

}  // namespace svak

#endif  // SVAK_TARGET_SEARCH_H_
