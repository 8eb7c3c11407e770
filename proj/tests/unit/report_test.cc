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

#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "svak/report.h"
#include "unit/test_util.h"

namespace svak {
namespace {

using testing::TempDir;
namespace fs = std::filesystem;

TargetSlot Slot(const std::string &filter, TargetCategory cat, const std::string &target) {
  TargetSlot s;
  s.filter = filter;
  s.category = cat;
  s.target_id = target;
  return s;
}

void AddPairs(TargetSlot *slot, const std::string &sys, const std::vector<double> &natural,
              const std::vector<double> &mimic) {
  SlotScores &s = slot->systems[sys];
  s.model_self = 10.0;
  s.target_self = {{slot->target_id + "-u0", 9.0}};
  for (std::size_t i = 0; i < natural.size(); ++i)
    s.pairs.push_back({"att-u" + std::to_string(i), natural[i], mimic[i]});
}

AttackReport OneSystemReport() {
  AttackReport r;
  r.attacker_system = "asv";
  r.systems = {"asv"};
  AttackerResult a;
  a.attacker_id = "att";
  r.attackers.push_back(a);
  return r;
}

TEST(DifferenceTable, RendersFixtureRow) {
  // six differences with mean -9.7 and 95% halfwidth 5.2:
  // halfwidth = t(0.975, 5) * s / sqrt(6), t(0.975, 5) = 2.5705818366
  const double s = 5.2 * std::sqrt(6.0) / 2.5705818366;
  const double z = s / std::sqrt(1.2);  // +-z has sample sd s
  std::vector<double> nat(6, 0.0), mim;
  for (int i = 0; i < 6; ++i) mim.push_back(-9.7 + (i < 3 ? -z : z));
  AttackReport r = OneSystemReport();
  TargetSlot slot = Slot("all", TargetCategory::kClosest, "tgt");
  AddPairs(&slot, "asv", nat, mim);
  r.attackers[0].slots.push_back(slot);
  const DifferenceTable t = BuildDifferenceTable(r);
  const CellStat *c = t.Find("asv", "closest");
  ASSERT_NE(c, nullptr);
  EXPECT_NEAR(c->mean, -9.7, 1e-9);
  EXPECT_NEAR(c->halfwidth, 5.2, 1e-6);
  EXPECT_NE(RenderDifferenceTable(t).find("Closest: -9.7 ± 5.2"), std::string::npos);
  EXPECT_EQ(t.Find("asv", "median"), nullptr);
}

TEST(DifferenceTable, IdentityIsZeroAndCategoriesIndependent) {
  AttackReport r = OneSystemReport();
  TargetSlot a = Slot("all", TargetCategory::kClosest, "t1");
  TargetSlot b = Slot("all", TargetCategory::kFurthest, "t2");
  AddPairs(&a, "asv", {1.5, -2.0, 3.0}, {1.5, -2.0, 3.0});
  AddPairs(&b, "asv", {0.0, 0.0}, {4.0, 6.0});
  r.attackers[0].slots = {a, b};
  const DifferenceTable t = BuildDifferenceTable(r);
  EXPECT_EQ(t.Find("asv", "closest")->mean, 0.0);
  EXPECT_EQ(t.Find("asv", "closest")->halfwidth, 0.0);
  EXPECT_EQ(t.Find("asv", "closest")->n, 3u);
  EXPECT_EQ(t.Find("asv", "furthest")->mean, 5.0);
  EXPECT_EQ(t.Find("asv", "furthest")->n, 2u);
}

AttackReport OrderingFixture(bool swap_on_b) {
  AttackReport r;
  r.attacker_system = "a";
  r.systems = {"a", "b"};
  AttackerResult att;
  att.attacker_id = "x";
  const TargetCategory cats[3] = {TargetCategory::kClosest, TargetCategory::kMedian,
                                  TargetCategory::kFurthest};
  const double a_scores[3] = {5.0, 0.0, -5.0};
  const double b_scores[3] = {4.0, swap_on_b ? -6.0 : -1.0, swap_on_b ? -1.0 : -6.0};
  for (int k = 0; k < 3; ++k) {
    TargetSlot s = Slot("all", cats[k], "t" + std::to_string(k));
    AddPairs(&s, "a", {a_scores[k]}, {a_scores[k]});
    AddPairs(&s, "b", {b_scores[k]}, {b_scores[k]});
    att.slots.push_back(s);
  }
  r.attackers.push_back(att);
  return r;
}

TEST(OrderingConsistency, SelfIsThreeAndSwapIsTwo) {
  for (bool swap : {false, true}) {
    const std::vector<OrderingRow> rows = OrderingConsistency(OrderingFixture(swap));
    ASSERT_EQ(rows.size(), 2u);
    for (const auto &row : rows) {
      if (row.system_id == "a") EXPECT_EQ(row.agreements, 3);
      if (row.system_id == "b") EXPECT_EQ(row.agreements, swap ? 2 : 3);
    }
  }
}

TEST(GroupedScoreSummary, SingletonHasNoInterval) {
  const std::vector<GroupedRow> rows =
      GroupedScoreSummary({{"s", "closest", "target_self", 4.5},
                           {"s", "closest", "natural_attack", 1.0},
                           {"s", "closest", "natural_attack", 3.0}});
  ASSERT_EQ(rows.size(), 2u);
  for (const auto &r : rows) {
    if (r.group == "target_self") {
      EXPECT_EQ(r.stat.n, 1u);
      EXPECT_FALSE(r.stat.has_ci);
      EXPECT_EQ(r.stat.mean, 4.5);
    } else {
      EXPECT_EQ(r.stat.n, 2u);
      EXPECT_TRUE(r.stat.has_ci);
      EXPECT_EQ(r.stat.mean, 2.0);
    }
  }
}

TEST(GroupedScoreSummary, AttackAndSelfGroups) {
  AttackReport r = OrderingFixture(false);
  r.attackers[0].self_verification["a"] = {{{"x-u1", 5.0}, {"x-u2", 6.0}}, {{"x-u1", 1.0}}};
  std::set<std::string> groups;
  for (const auto &g : AttackScoreGroups(r)) groups.insert(g.group);
  EXPECT_EQ(groups, (std::set<std::string>{"target_self", "natural_attack", "mimic_attack"}));
  std::set<std::string> self;
  for (const auto &g : SelfVerificationGroups(r)) {
    self.insert(g.group);
    EXPECT_EQ(g.category, "self");
  }
  EXPECT_EQ(self, (std::set<std::string>{"natural_self", "mimic_self"}));
}

TEST(WriteReport, EmitsAllFiles) {
  TempDir dir;
  WriteReport(OrderingFixture(true), dir.path());
  for (const char *f : {"difference_table.txt", "eer.txt", "ordering.txt", "grouped_scores.txt",
                        "self_verification.txt", "plot_scores.dat", "plot_self.dat",
                        "lambda_sweep.txt", "summary.json"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  std::ifstream is(dir / "ordering.txt");
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header, "attacker_id\tfilter\tsystem_id\tagreements\tout_of");
}

}  // namespace
}  // namespace svak
