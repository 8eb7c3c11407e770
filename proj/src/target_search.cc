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

#include "svak/target_search.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace svak {

TargetDatabase::TargetDatabase(std::string system_id,
                               std::map<std::string, TargetEntry> targets)
    : system_id_(std::move(system_id)), targets_(std::move(targets)) {
  for (const auto &[id, t] : targets_)
    if (t.utterances.empty())
      Fail(ErrorCode::kInvalidInput, "target " + id + " has no utterances");
}

const TargetEntry &TargetDatabase::at(const std::string &speaker_id) const {
  auto it = targets_.find(speaker_id);
  if (it == targets_.end())
    Fail(ErrorCode::kInvalidInput, "unknown target speaker " + speaker_id);
  return it->second;
}

TargetDatabase BuildTargetDb(const std::string &system_id, const Manifest &manifest,
                             std::span<const UttEmbedding> embeddings) {
  std::map<std::string, const UttEmbedding *> by_utt;
  for (const auto &e : embeddings) by_utt[e.utt_id] = &e;
  std::map<std::string, TargetEntry> targets;
  for (const auto &u : manifest.entries()) {
    auto it = by_utt.find(u.utt_id);
    if (it == by_utt.end()) continue;
    TargetEntry &t = targets[u.speaker_id];
    if (t.speaker_id.empty()) {
      t.speaker_id = u.speaker_id;
      t.nationality = u.nationality;
      t.language = u.language;
      t.gender = u.gender;
    }
    t.utterances.push_back(*it->second);
  }
  for (const auto &spk : manifest.speakers())
    if (!targets.count(spk))
      SVAK_WARN("search", "target " << spk << " dropped: no usable utterances");
  for (auto &[id, t] : targets) {
    std::vector<Embedding> e;
    for (const auto &u : t.utterances) e.push_back(u.embedding);
    t.average = AverageEmbeddings(e);
  }
  if (targets.empty()) Fail(ErrorCode::kNoData, "target database is empty");
  return TargetDatabase(system_id, std::move(targets));
}

TargetDatabase BuildTargetDb(const VerificationSystem &system,
                             const Manifest &manifest) {
  const std::vector<UttEmbedding> emb = EmbedManifest(system, manifest, true);
  return BuildTargetDb(system.id(), manifest, emb);
}

bool MetadataFilter::Matches(const TargetEntry &t) const {
  if (key.empty()) return true;
  if (key == "nationality") return t.nationality == value;
  if (key == "language") return t.language == value;
  if (key == "gender") return t.gender == value;
  Fail(ErrorCode::kInvalidInput, "unknown filter key '" + key + "'");
}

std::string MetadataFilter::Describe() const {
  return key.empty() ? "all" : key + "=" + value;
}

MetadataFilter MetadataFilter::Parse(const std::string &spec) {
  if (spec.empty() || spec == "all") return {};
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size())
    Fail(ErrorCode::kInvalidInput, "filter must look like key=value, got '" + spec + "'");
  MetadataFilter f{spec.substr(0, eq), spec.substr(eq + 1)};
  if (f.key != "nationality" && f.key != "language" && f.key != "gender")
    Fail(ErrorCode::kInvalidInput, "unknown filter key '" + f.key + "'");
  return f;
}

TargetRanking SortRanking(std::string attacker_id, std::string filter,
                          std::vector<RankedTarget> scored) {
  std::sort(scored.begin(), scored.end(),
            [](const RankedTarget &a, const RankedTarget &b) {
              if (a.score != b.score) return a.score > b.score;
              return a.speaker_id < b.speaker_id;
            });
  return TargetRanking{std::move(attacker_id), std::move(filter), std::move(scored)};
}

TargetRanking RankTargets(const VerificationSystem &system,
                          const Embedding &attacker, const TargetDatabase &db,
                          const MetadataFilter &filter,
                          const std::set<std::string> &exclude_speakers) {
  std::vector<const TargetEntry *> pool;
  for (const auto &[id, t] : db.targets())
    if (filter.Matches(t) && !exclude_speakers.count(id)) pool.push_back(&t);
  if (pool.empty())
    Fail(ErrorCode::kNoData, "no targets left after filter " + filter.Describe());
  std::vector<RankedTarget> scored(pool.size());
  ParallelFor(pool.size(), [&](std::size_t i) {
    scored[i] = {pool[i]->speaker_id, system.Score(pool[i]->average, attacker)};
  });
  return SortRanking(attacker.speaker_id, filter.Describe(), std::move(scored));
}

TargetSelection SelectTargets(const TargetRanking &ranking) {
  const std::size_t j = ranking.entries.size();
  if (j == 0) Fail(ErrorCode::kNoData, "cannot select from an empty ranking");
  TargetSelection s;
  s.closest = ranking.entries.front();
  s.median = ranking.entries[(j - 1) / 2];
  s.furthest = ranking.entries.back();
  s.degenerate = j < 3;
  return s;
}

const char *TargetCategoryName(TargetCategory c) {
  switch (c) {
    case TargetCategory::kClosest: return "closest";
    case TargetCategory::kMedian: return "median";
    case TargetCategory::kFurthest: return "furthest";
    case TargetCategory::kCommon: return "common";
  }
  return "?";
}

TargetCategory ParseTargetCategory(const std::string &s) {
  for (TargetCategory c : {TargetCategory::kClosest, TargetCategory::kMedian,
                           TargetCategory::kFurthest, TargetCategory::kCommon})
    if (s == TargetCategoryName(c)) return c;
  Fail(ErrorCode::kInvalidInput, "unknown target category '" + s + "'");
}

UtteranceSelection SelectUtterancesByScore(std::vector<ScoredUtterance> scored,
                                           TargetCategory category,
                                           double min_active_s) {
  if (scored.empty()) Fail(ErrorCode::kNoData, "target has no scored utterances");
  double mean = 0.0;
  for (const auto &s : scored) mean += s.score;
  mean /= static_cast<double>(scored.size());
  auto key = [&](const ScoredUtterance &s) {
    switch (category) {
      case TargetCategory::kFurthest: return s.score;
      case TargetCategory::kMedian: return std::abs(s.score - mean);
      default: return -s.score;
    }
  };
  std::sort(scored.begin(), scored.end(),
            [&](const ScoredUtterance &a, const ScoredUtterance &b) {
              const double ka = key(a), kb = key(b);
              if (ka != kb) return ka < kb;
              return a.utt_id < b.utt_id;
            });
  UtteranceSelection sel;
  for (const auto &s : scored) {
    if (sel.active_s >= min_active_s) break;
    sel.utt_ids.push_back(s.utt_id);
    sel.active_s += s.active_s;
  }
  sel.shortfall = sel.active_s < min_active_s;
  return sel;
}

UtteranceSelection SelectUtterances(const VerificationSystem &system,
                                    const Embedding &attacker,
                                    const TargetEntry &target,
                                    TargetCategory category, double min_active_s,
                                    const std::set<std::string> &exclude_utts) {
  std::vector<ScoredUtterance> scored;
  for (const auto &u : target.utterances)
    if (!exclude_utts.count(u.utt_id))
      scored.push_back({u.utt_id, system.Score(u.embedding, attacker), u.active_s});
  UtteranceSelection sel = SelectUtterancesByScore(std::move(scored), category,
                                                   min_active_s);
  if (sel.shortfall)
    SVAK_WARN("search", "target " << target.speaker_id << " has only "
                                  << sel.active_s << " s of active speech");
  return sel;
}

void WriteRanking(const std::filesystem::path &path, const TargetRanking &ranking,
                  const TargetDatabase &db) {
  std::ofstream os(path);
  if (!os) Fail(ErrorCode::kIo, "cannot write " + path.string());
  os << "rank\tspeaker_id\tscore\tnationality\tlanguage\tgender\n";
  char buf[64];
  for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
    const auto &e = ranking.entries[i];
    const TargetEntry &t = db.at(e.speaker_id);
    std::snprintf(buf, sizeof(buf), "%.6f", e.score);
    os << i + 1 << '\t' << e.speaker_id << '\t' << buf << '\t' << t.nationality
       << '\t' << t.language << '\t' << t.gender << '\n';
  }
}

}  // namespace svak
