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

#ifndef SVAK_REPORT_H_
#define SVAK_REPORT_H_

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "svak/attack.h"
#include "svak/metrics.h"

namespace svak {

// Column order of every category-indexed table.
const std::vector<std::string> &ReportCategories();

// Mean (mimic - natural) per system and category, pooled over attackers,
// filters and test utterances.
struct DifferenceTable {
  std::vector<std::string> systems;
  std::vector<std::string> categories;
  std::map<std::pair<std::string, std::string>, CellStat> cells;  // missing = empty

  const CellStat *Find(const std::string &system, const std::string &category) const;
};

DifferenceTable BuildDifferenceTable(const AttackReport &report);

// Tab-separated, one row per system; cells "mean ± halfwidth" or "-" when
// empty. Followed by one block per system with lines like "Closest: x ± y".
std::string RenderDifferenceTable(const DifferenceTable &table, int decimals = 1);

struct OrderingRow {
  std::string attacker_id;
  std::string filter;
  std::string system_id;
  int agreements = 0;  // 0..3
};

// For each attacker and ranking filter, the mean natural scores of the
// closest, median and furthest targets on each system are compared pairwise
// with the same triple on the attacker's own system.
std::vector<OrderingRow> OrderingConsistency(const AttackReport &report);

struct GroupedScore {
  std::string system_id;
  std::string category;
  std::string group;
  double score = 0.0;
};

struct GroupedRow {
  std::string system_id;
  std::string category;
  std::string group;
  CellStat stat;
};

// Rows sorted by (system order of first appearance, category, group).
std::vector<GroupedRow> GroupedScoreSummary(const std::vector<GroupedScore> &scores);

// Groups "target_self", "natural_attack" and "mimic_attack" per system and
// category.
std::vector<GroupedScore> AttackScoreGroups(const AttackReport &report);
// Groups "natural_self" and "mimic_self" per system (category "self").
std::vector<GroupedScore> SelfVerificationGroups(const AttackReport &report);

// Writes difference_table.txt, eer.txt, ordering.txt, grouped_scores.txt,
// self_verification.txt, lambda_sweep.txt, plot_scores.dat, plot_self.dat
// and summary.json into `out_dir`.
void WriteReport(const AttackReport &report, const std::filesystem::path &out_dir);

}  // namespace svak

#endif  // SVAK_REPORT_H_
