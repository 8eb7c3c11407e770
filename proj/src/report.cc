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

#include "svak/report.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace svak {

const std::vector<std::string> &ReportCategories() {
  static const std::vector<std::string> k = {"closest", "median", "furthest", "common"};
  return k;
}

const CellStat *DifferenceTable::Find(const std::string &system,
                                      const std::string &category) const {
  auto it = cells.find({system, category});
  return it == cells.end() ? nullptr : &it->second;
}

DifferenceTable BuildDifferenceTable(const AttackReport &report) {
  DifferenceTable t;
  t.systems = report.systems;
  t.categories = ReportCategories();
  std::map<std::pair<std::string, std::string>, std::vector<double>> diffs;
  for (const auto &a : report.attackers)
    for (const auto &slot : a.slots)
      for (const auto &[sys, sc] : slot.systems) {
        if (!sc.error.empty()) continue;
        auto &d = diffs[{sys, TargetCategoryName(slot.category)}];
        for (const auto &p : sc.pairs) d.push_back(p.mimic - p.natural);
      }
  for (const auto &[key, d] : diffs)
    if (!d.empty()) t.cells[key] = SummarizeSamples(d);
  return t;
}

namespace {

std::string Capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 32);
  return s;
}

std::string Fixed(double v, int decimals = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

void WriteText(const std::filesystem::path &path, const std::string &text) {
  std::ofstream os(path);
  if (!os) Fail(ErrorCode::kIo, "cannot write " + path.string());
  os << text;
  if (!os) Fail(ErrorCode::kIo, "write failed for " + path.string());
}

double Mean(const std::vector<double> &v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

std::string RenderDifferenceTable(const DifferenceTable &table, int decimals) {
  std::ostringstream os;
  os << "system";
  for (const auto &c : table.categories) os << '\t' << c;
  os << '\n';
  for (const auto &s : table.systems) {
    os << s;
    for (const auto &c : table.categories) {
      const CellStat *cell = table.Find(s, c);
      os << '\t' << (cell ? FormatCell(*cell, decimals) : std::string("-"));
    }
    os << '\n';
  }
  for (const auto &s : table.systems) {
    os << "\n[" << s << "]\n";
    for (const auto &c : table.categories) {
      const CellStat *cell = table.Find(s, c);
      os << Capitalize(c) << ": " << (cell ? FormatCell(*cell, decimals) : "-");
      if (cell) os << " (n=" << cell->n << ")";
      os << '\n';
    }
  }
  return os.str();
}

std::vector<OrderingRow> OrderingConsistency(const AttackReport &report) {
  std::vector<OrderingRow> rows;
  const std::string cats[3] = {"closest", "median", "furthest"};
  for (const auto &a : report.attackers) {
    std::vector<std::string> filters;
    for (const auto &slot : a.slots)
      if (slot.category != TargetCategory::kCommon &&
          std::find(filters.begin(), filters.end(), slot.filter) == filters.end())
        filters.push_back(slot.filter);
    for (const auto &f : filters) {
      // triple of mean natural scores per system; absent when incomplete
      auto triple = [&](const std::string &sys, std::array<double, 3> *out) {
        int found = 0;
        for (const auto &slot : a.slots) {
          if (slot.filter != f) continue;
          for (int k = 0; k < 3; ++k) {
            if (TargetCategoryName(slot.category) != cats[k]) continue;
            auto it = slot.systems.find(sys);
            if (it == slot.systems.end() || !it->second.error.empty() ||
                it->second.pairs.empty())
              return false;
            std::vector<double> nat;
            for (const auto &p : it->second.pairs) nat.push_back(p.natural);
            (*out)[k] = Mean(nat);
            ++found;
          }
        }
        return found == 3;
      };
      std::array<double, 3> ref{};
      if (!triple(report.attacker_system, &ref)) {
        SVAK_WARN("report", a.attacker_id << "/" << f
                                          << ": missing category on attacker system");
        continue;
      }
      for (const auto &sys : report.systems) {
        std::array<double, 3> other{};
        if (!triple(sys, &other)) continue;
        rows.push_back({a.attacker_id, f, sys, PairwiseAgreements(ref, other)});
      }
    }
  }
  return rows;
}

std::vector<GroupedRow> GroupedScoreSummary(const std::vector<GroupedScore> &scores) {
  std::vector<std::tuple<std::string, std::string, std::string>> order;
  std::map<std::tuple<std::string, std::string, std::string>, std::vector<double>> groups;
  for (const auto &s : scores) {
    const auto key = std::make_tuple(s.system_id, s.category, s.group);
    auto it = groups.find(key);
    if (it == groups.end()) {
      order.push_back(key);
      it = groups.emplace(key, std::vector<double>{}).first;
    }
    it->second.push_back(s.score);
  }
  std::vector<GroupedRow> rows;
  for (const auto &key : order)
    rows.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key),
                    SummarizeSamples(groups.at(key))});
  return rows;
}

std::vector<GroupedScore> AttackScoreGroups(const AttackReport &report) {
  std::vector<GroupedScore> out;
  for (const auto &sys : report.systems)
    for (const auto &cat : ReportCategories())
      for (const auto &a : report.attackers)
        for (const auto &slot : a.slots) {
          if (TargetCategoryName(slot.category) != cat) continue;
          auto it = slot.systems.find(sys);
          if (it == slot.systems.end() || !it->second.error.empty()) continue;
          for (const auto &s : it->second.target_self)
            out.push_back({sys, cat, "target_self", s.score});
          for (const auto &p : it->second.pairs) {
            out.push_back({sys, cat, "natural_attack", p.natural});
            out.push_back({sys, cat, "mimic_attack", p.mimic});
          }
        }
  // Stable regrouping so every (system, category) lists its groups together.
  std::stable_sort(out.begin(), out.end(),
                   [&](const GroupedScore &x, const GroupedScore &y) {
                     auto rank = [](const std::string &g) {
                       return g == "target_self" ? 0 : g == "natural_attack" ? 1 : 2;
                     };
                     if (x.system_id != y.system_id || x.category != y.category)
                       return false;
                     return rank(x.group) < rank(y.group);
                   });
  return out;
}

std::vector<GroupedScore> SelfVerificationGroups(const AttackReport &report) {
  std::vector<GroupedScore> out;
  for (const auto &sys : report.systems) {
    for (const auto &a : report.attackers) {
      auto it = a.self_verification.find(sys);
      if (it == a.self_verification.end()) continue;
      for (const auto &s : it->second.natural_self)
        out.push_back({sys, "self", "natural_self", s.score});
    }
    for (const auto &a : report.attackers) {
      auto it = a.self_verification.find(sys);
      if (it == a.self_verification.end()) continue;
      for (const auto &s : it->second.mimic_self)
        out.push_back({sys, "self", "mimic_self", s.score});
    }
  }
  return out;
}

namespace {

std::string RenderGrouped(const std::vector<GroupedRow> &rows) {
  std::ostringstream os;
  os << "system_id\tcategory\tgroup\tn\tmean\tci_halfwidth\tflag\n";
  for (const auto &r : rows) {
    os << r.system_id << '\t' << r.category << '\t' << r.group << '\t' << r.stat.n
       << '\t' << Fixed(r.stat.mean) << '\t'
       << (r.stat.has_ci ? Fixed(r.stat.halfwidth) : std::string("NA")) << '\t'
       << (r.stat.has_ci ? "ok" : "n=1") << '\n';
  }
  return os.str();
}

// x is the category index in table order (0 for the self category).
std::string RenderPlot(const std::vector<GroupedRow> &rows) {
  std::ostringstream os;
  os << "# system_id\tgroup\tx\tcategory\ty\tci\n";
  const auto &cats = ReportCategories();
  for (const auto &r : rows) {
    const auto it = std::find(cats.begin(), cats.end(), r.category);
    const long x = it == cats.end() ? 0 : static_cast<long>(it - cats.begin());
    os << r.system_id << '\t' << r.group << '\t' << x << '\t' << r.category << '\t'
       << Fixed(r.stat.mean) << '\t' << (r.stat.has_ci ? Fixed(r.stat.halfwidth) : "NA")
       << '\n';
  }
  return os.str();
}

}  // namespace

void WriteReport(const AttackReport &report, const std::filesystem::path &out_dir) {
  std::filesystem::create_directories(out_dir);
  using json = nlohmann::json;
  json summary;

  const DifferenceTable table = BuildDifferenceTable(report);
  WriteText(out_dir / "difference_table.txt", RenderDifferenceTable(table));
  json jt = json::object();
  for (const auto &[key, c] : table.cells)
    jt[key.first][key.second] = {{"mean", c.mean},
                                 {"ci_halfwidth", c.has_ci ? json(c.halfwidth) : json()},
                                 {"n", c.n}};
  summary["difference_table"] = jt;

  {
    std::ostringstream os;
    os << "system_id\teer\tthreshold\tn_target\tn_nontarget\n";
    json je = json::object();
    for (const auto &[id, e] : report.eer) {
      os << id << '\t' << Fixed(e.eer) << '\t' << Fixed(e.threshold) << '\t'
         << e.n_target << '\t' << e.n_nontarget << '\n';
      je[id] = {{"eer", e.eer}, {"n_target", e.n_target}, {"n_nontarget", e.n_nontarget}};
    }
    WriteText(out_dir / "eer.txt", os.str());
    summary["eer"] = je;
  }

  {
    const std::vector<OrderingRow> rows = OrderingConsistency(report);
    std::ostringstream os;
    os << "attacker_id\tfilter\tsystem_id\tagreements\tout_of\n";
    std::map<std::string, std::vector<double>> frac;
    for (const auto &r : rows) {
      os << r.attacker_id << '\t' << r.filter << '\t' << r.system_id << '\t'
         << r.agreements << "\t3\n";
      frac[r.system_id].push_back(r.agreements / 3.0);
    }
    os << "\n# aggregate fraction of preserved pairwise orderings\n"
       << "system_id\tn\tmean\tci_halfwidth\n";
    json jo = json::object();
    for (const auto &sys : report.systems) {
      auto it = frac.find(sys);
      if (it == frac.end()) continue;
      const CellStat c = SummarizeSamples(it->second);
      os << sys << '\t' << c.n << '\t' << Fixed(c.mean) << '\t'
         << (c.has_ci ? Fixed(c.halfwidth) : std::string("NA")) << '\n';
      jo[sys] = {{"mean_fraction", c.mean}, {"n", c.n}};
    }
    WriteText(out_dir / "ordering.txt", os.str());
    summary["ordering"] = jo;
  }

  const std::vector<GroupedRow> grouped = GroupedScoreSummary(AttackScoreGroups(report));
  WriteText(out_dir / "grouped_scores.txt", RenderGrouped(grouped));
  WriteText(out_dir / "plot_scores.dat", RenderPlot(grouped));

  const std::vector<GroupedRow> self = GroupedScoreSummary(SelfVerificationGroups(report));
  WriteText(out_dir / "self_verification.txt", RenderGrouped(self));
  WriteText(out_dir / "plot_self.dat", RenderPlot(self));

  {
    std::ostringstream os;
    os << "system_id\tcategory\tlambda\tn\tmean_natural\tmean_mimic\tmean_difference\n";
    for (const auto &p : report.lambda_sweep)
      os << p.system_id << '\t' << p.category << '\t' << Fixed(p.lambda, 2) << '\t'
         << p.n << '\t' << Fixed(p.mean_natural) << '\t' << Fixed(p.mean_mimic) << '\t'
         << Fixed(p.mean_mimic - p.mean_natural) << '\n';
    WriteText(out_dir / "lambda_sweep.txt", os.str());
  }

  std::size_t degenerate = 0, shortfall = 0, slots = 0;
  for (const auto &a : report.attackers)
    for (const auto &s : a.slots) {
      ++slots;
      degenerate += s.degenerate;
      shortfall += s.shortfall;
    }
  summary["attacker_model"] = AttackerKindName(report.model.kind);
  summary["lambda"] = report.model.lambda;
  summary["attackers"] = report.attackers.size();
  summary["target_slots"] = slots;
  summary["unique_targets"] = report.unique_targets;
  summary["degenerate_selections"] = degenerate;
  summary["active_speech_shortfalls"] = shortfall;
  summary["systems"] = report.systems;
  WriteText(out_dir / "summary.json", summary.dump(2) + "\n");
}

}  // namespace svak
