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

#include "svak/attack.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace svak {

using json = nlohmann::json;

const char *AttackerKindName(AttackerKind k) {
  switch (k) {
    case AttackerKind::kIdentity: return "identity";
    case AttackerKind::kEmbeddingInterp: return "embedding-interp";
    case AttackerKind::kFeatureWarp: return "feature-warp";
  }
  return "?";
}

AttackerKind ParseAttackerKind(const std::string &s) {
  for (AttackerKind k : {AttackerKind::kIdentity, AttackerKind::kEmbeddingInterp,
                         AttackerKind::kFeatureWarp})
    if (s == AttackerKindName(k)) return k;
  Fail(ErrorCode::kInvalidInput, "unknown attacker model '" + s + "'");
}

void AttackerModel::Validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.5))
    Fail(ErrorCode::kInvalidInput, "mimic lambda must be in [0, 1.5]");
}

Embedding MimicEmbedding(const Embedding &attacker, const Embedding &target,
                         double lambda) {
  if (attacker.space != target.space)
    Fail(ErrorCode::kInvalidInput, "mimic endpoints live in different spaces");
  if (attacker.dim() != target.dim())
    Fail(ErrorCode::kDimensionMismatch, "mimic endpoints differ in dimension");
  if (lambda == 0.0) return attacker;
  Embedding out = attacker;
  out.vector = (1.0 - lambda) * attacker.vector + lambda * target.vector;
  return out;
}

void FeatureStats::Add(const FeatureMatrix &f) {
  if (sum.size() == 0) {
    sum = Vector::Zero(f.dim());
    sum_sq = Vector::Zero(f.dim());
  }
  if (f.dim() != sum.size())
    Fail(ErrorCode::kDimensionMismatch, "feature stats dimension mismatch");
  sum += f.frames.colwise().sum().transpose();
  sum_sq += f.frames.array().square().colwise().sum().matrix().transpose();
  count += static_cast<double>(f.num_frames());
}

void FeatureStats::Merge(const FeatureStats &o) {
  if (o.count == 0.0) return;
  if (sum.size() == 0) {
    *this = o;
    return;
  }
  if (o.sum.size() != sum.size())
    Fail(ErrorCode::kDimensionMismatch, "feature stats dimension mismatch");
  sum += o.sum;
  sum_sq += o.sum_sq;
  count += o.count;
}

Vector FeatureStats::Mean() const {
  if (count <= 0.0) Fail(ErrorCode::kNoData, "empty feature statistics");
  return sum / count;
}

Vector FeatureStats::Stddev() const {
  const Vector m = Mean();
  return (sum_sq / count - m.cwiseProduct(m)).cwiseMax(0.0).cwiseSqrt();
}

FeatureMatrix MimicFeatures(const FeatureMatrix &attacker, const FeatureStats &target,
                            double lambda) {
  if (lambda == 0.0) return attacker;
  if (attacker.num_frames() < 1) Fail(ErrorCode::kNoData, "no frames to warp");
  const Vector tm = target.Mean(), ts = target.Stddev();
  if (tm.size() != attacker.dim())
    Fail(ErrorCode::kDimensionMismatch, "target stats dim != feature dim");
  FeatureStats own;
  own.Add(attacker);
  const Vector am = own.Mean(), as = own.Stddev();
  FeatureMatrix out = attacker;
  for (Eigen::Index d = 0; d < attacker.dim(); ++d) {
    const double mean = am(d) + lambda * (tm(d) - am(d));
    const double sd = std::max(0.0, as(d) + lambda * (ts(d) - as(d)));
    const double gain = as(d) > 1e-12 ? sd / as(d) : 1.0;
    out.frames.col(d) = ((attacker.frames.col(d).array() - am(d)) * gain + mean).matrix();
  }
  return out;
}

void SplitEnrollTest(std::vector<std::string> utt_ids,
                     std::vector<std::string> *enroll,
                     std::vector<std::string> *test) {
  if (utt_ids.size() < 2)
    Fail(ErrorCode::kNoData, "an attacker needs at least two natural utterances");
  std::sort(utt_ids.begin(), utt_ids.end());
  const std::size_t half = utt_ids.size() / 2;
  enroll->assign(utt_ids.begin(), utt_ids.begin() + half);
  test->assign(utt_ids.begin() + half, utt_ids.end());
}

namespace {

// Everything one system knows about the corpus, computed once.
struct SystemView {
  const VerificationSystem *system = nullptr;
  std::map<std::string, UttEmbedding> attacker_emb;
  TargetDatabase db;
  // Only for feature-warp.
  std::map<std::string, FeatureMatrix> attacker_feats;
  std::map<std::string, FeatureStats> target_stats;
};

SystemView BuildView(const VerificationSystem &sys, const Manifest &attackers,
                     const Manifest &target_db, bool need_features) {
  SystemView v;
  v.system = &sys;
  for (auto &e : EmbedManifest(sys, attackers, false))
    v.attacker_emb.emplace(e.utt_id, std::move(e));
  const std::vector<UttEmbedding> temb = EmbedManifest(sys, target_db, true);
  v.db = BuildTargetDb(sys.id(), target_db, temb);
  if (need_features) {
    const auto &ae = attackers.entries();
    std::vector<FeatureMatrix> feats(ae.size());
    ParallelFor(ae.size(), [&](std::size_t i) {
      feats[i] = sys.Features(ReadAudio(ae[i].path));
    });
    for (std::size_t i = 0; i < ae.size(); ++i)
      v.attacker_feats.emplace(ae[i].utt_id, std::move(feats[i]));
    const auto &te = target_db.entries();
    std::vector<FeatureStats> stats(te.size());
    ParallelFor(te.size(), [&](std::size_t i) {
      try {
        stats[i].Add(sys.Features(ReadAudio(te[i].path)));
      } catch (const Error &) {
        // Unusable utterances were already reported while embedding.
      }
    });
    for (std::size_t i = 0; i < te.size(); ++i)
      if (stats[i].count > 0) v.target_stats.emplace(te[i].utt_id, std::move(stats[i]));
  }
  SVAK_INFO("attack", sys.id() << ": " << v.attacker_emb.size()
                               << " attacker utterances, " << v.db.size()
                               << " targets");
  return v;
}

struct MimicContext {
  const SystemView *view;
  const AttackerModel *model;
  const Embedding *target_model;
  FeatureStats target_stats;
};

Embedding Mimic(const MimicContext &ctx, const std::string &test_utt, double lambda) {
  const UttEmbedding &nat = ctx.view->attacker_emb.at(test_utt);
  switch (ctx.model->kind) {
    case AttackerKind::kIdentity:
      return nat.embedding;
    case AttackerKind::kEmbeddingInterp:
      return MimicEmbedding(nat.embedding, *ctx.target_model, lambda);
    case AttackerKind::kFeatureWarp:
      if (lambda == 0.0) return nat.embedding;
      return ctx.view->system->EmbedFeatures(
          MimicFeatures(ctx.view->attacker_feats.at(test_utt), ctx.target_stats, lambda),
          nat.embedding.speaker_id);
  }
  return nat.embedding;
}

struct SweepAcc {
  double natural = 0.0, mimic = 0.0;
  std::size_t n = 0;
};

}  // namespace

AttackReport RunAttackProtocol(const Manifest &attackers, const Manifest &target_db,
                               const VerificationSystem &attacker_system,
                               std::span<const VerificationSystem *const> blackbox,
                               const AttackConfig &config) {
  config.model.Validate();
  for (double l : config.lambda_grid)
    if (!(l >= 0.0 && l <= 1.5))
      Fail(ErrorCode::kInvalidInput, "lambda grid values must be in [0, 1.5]");
  if (attackers.empty()) Fail(ErrorCode::kNoData, "attacker manifest is empty");
  std::vector<const VerificationSystem *> systems = {&attacker_system};
  std::set<std::string> ids = {attacker_system.id()};
  for (const VerificationSystem *b : blackbox) {
    if (!ids.insert(b->id()).second)
      Fail(ErrorCode::kInvalidInput, "duplicate system id " + b->id());
    systems.push_back(b);
  }

  const bool warp = config.model.kind == AttackerKind::kFeatureWarp;
  std::vector<SystemView> views;
  for (const VerificationSystem *s : systems)
    views.push_back(BuildView(*s, attackers, target_db, warp));
  const SystemView &search = views.front();

  AttackReport report;
  report.attacker_system = attacker_system.id();
  for (const auto *s : systems) report.systems.push_back(s->id());
  report.model = config.model;
  report.min_active_s = config.min_active_s;

  // (system, category, lambda index) -> sums
  std::map<std::tuple<std::string, std::string, std::size_t>, SweepAcc> sweep;
  std::set<std::string> unique_targets;

  std::map<std::string, std::vector<const Utterance *>> by_speaker;
  for (const auto &u : attackers.entries()) by_speaker[u.speaker_id].push_back(&u);

  for (const auto &[attacker_id, utts] : by_speaker) {
    AttackerResult res;
    res.attacker_id = attacker_id;
    res.gender = utts.front()->gender;
    std::vector<std::string> all_ids;
    for (const Utterance *u : utts) all_ids.push_back(u->utt_id);
    SplitEnrollTest(all_ids, &res.enroll_utts, &res.test_utts);

    auto own_model = [&](const SystemView &v) {
      std::vector<UttEmbedding> e;
      for (const auto &id : res.enroll_utts) e.push_back(v.attacker_emb.at(id));
      return EnrollSpeaker(e);
    };
    const Embedding attacker_emb = own_model(search);
    const std::set<std::string> exclude_self = {attacker_id};

    std::vector<TargetSlot> slots;
    for (const auto &filter : config.filters) {
      TargetRanking ranking;
      try {
        ranking = RankTargets(attacker_system, attacker_emb, search.db, filter,
                              exclude_self);
      } catch (const Error &e) {
        SVAK_WARN("attack", attacker_id << ": filter " << filter.Describe()
                                        << " skipped: " << e.what());
        continue;
      }
      res.rankings[filter.Describe()] = ranking.entries;
      const TargetSelection sel = SelectTargets(ranking);
      const std::pair<TargetCategory, const RankedTarget *> picks[] = {
          {TargetCategory::kClosest, &sel.closest},
          {TargetCategory::kMedian, &sel.median},
          {TargetCategory::kFurthest, &sel.furthest}};
      for (const auto &[cat, rt] : picks) {
        TargetSlot slot;
        slot.filter = filter.Describe();
        slot.category = cat;
        slot.target_id = rt->speaker_id;
        slot.search_score = rt->score;
        slot.degenerate = sel.degenerate;
        slots.push_back(std::move(slot));
      }
    }
    auto common = config.common_targets.find(res.gender);
    if (common != config.common_targets.end()) {
      for (const auto &tid : common->second) {
        if (tid == attacker_id || !search.db.contains(tid)) {
          SVAK_WARN("attack", attacker_id << ": common target " << tid
                                          << " not in the target database");
          continue;
        }
        TargetSlot slot;
        slot.filter = "common";
        slot.category = TargetCategory::kCommon;
        slot.target_id = tid;
        slot.search_score = attacker_system.Score(search.db.at(tid).average, attacker_emb);
        slots.push_back(std::move(slot));
      }
    }

    for (auto &slot : slots) {
      unique_targets.insert(slot.target_id);
      const UtteranceSelection us =
          SelectUtterances(attacker_system, attacker_emb, search.db.at(slot.target_id),
                           slot.category, config.min_active_s, config.exclude_utts);
      slot.selected_utts = us.utt_ids;
      slot.selected_active_s = us.active_s;
      slot.shortfall = us.shortfall;
    }

    for (const SystemView &v : views) {
      const VerificationSystem &sys = *v.system;
      SelfVerification self;
      Embedding own;
      bool own_ok = true;
      try {
        own = own_model(v);
        for (const auto &t : res.test_utts)
          self.natural_self.push_back({t, sys.Score(own, v.attacker_emb.at(t).embedding)});
      } catch (const Error &e) {
        own_ok = false;
        SVAK_WARN("attack", sys.id() << ": self-verification of " << attacker_id
                                     << " failed: " << e.what());
      }
      for (auto &slot : slots) {
        SlotScores sc;
        try {
          const TargetEntry &entry = v.db.at(slot.target_id);
          const std::set<std::string> held(slot.selected_utts.begin(),
                                           slot.selected_utts.end());
          const Embedding model = EnrollSpeaker(entry.utterances, held);
          sc.model_self = sys.Score(model, model);
          for (const auto &u : entry.utterances)
            if (held.count(u.utt_id))
              sc.target_self.push_back({u.utt_id, sys.Score(model, u.embedding)});
          MimicContext ctx{&v, &config.model, &model, {}};
          if (warp)
            for (const auto &u : entry.utterances)
              if (!held.count(u.utt_id) && v.target_stats.count(u.utt_id))
                ctx.target_stats.Merge(v.target_stats.at(u.utt_id));
          for (const auto &t : res.test_utts) {
            const Embedding &nat = v.attacker_emb.at(t).embedding;
            const Embedding mim = Mimic(ctx, t, config.model.lambda);
            sc.pairs.push_back({t, sys.Score(model, nat), sys.Score(model, mim)});
            if (own_ok)
              self.mimic_self.push_back({t + "->" + slot.target_id, sys.Score(own, mim)});
            for (std::size_t li = 0; li < config.lambda_grid.size(); ++li) {
              const Embedding m = Mimic(ctx, t, config.lambda_grid[li]);
              SweepAcc &acc =
                  sweep[{sys.id(), TargetCategoryName(slot.category), li}];
              acc.natural += sc.pairs.back().natural;
              acc.mimic += sys.Score(model, m);
              ++acc.n;
            }
          }
        } catch (const Error &e) {
          sc = SlotScores{};
          sc.error = e.what();
          SVAK_WARN("attack", sys.id() << ": " << attacker_id << " -> "
                                       << slot.target_id << " failed: " << e.what());
        }
        slot.systems[sys.id()] = std::move(sc);
      }
      res.self_verification[sys.id()] = std::move(self);
    }
    res.slots = std::move(slots);
    SVAK_INFO("attack", attacker_id << ": " << res.slots.size() << " target slots");
    report.attackers.push_back(std::move(res));
  }

  for (const auto &[key, acc] : sweep) {
    const auto &[sys, cat, li] = key;
    report.lambda_sweep.push_back({sys, cat, config.lambda_grid[li],
                                   acc.natural / static_cast<double>(acc.n),
                                   acc.mimic / static_cast<double>(acc.n), acc.n});
  }
  report.unique_targets = unique_targets.size();
  return report;
}

std::vector<ScoreRecord> AttackScoreRecords(const AttackReport &report,
                                            const std::string &system_id) {
  std::vector<ScoreRecord> out;
  auto add = [&](std::string trial, const std::string &enroll,
                 const std::string &test, TrialLabel label, double score) {
    out.push_back({std::move(trial), enroll, test, system_id, label, score});
  };
  for (const auto &a : report.attackers) {
    for (const auto &slot : a.slots) {
      auto it = slot.systems.find(system_id);
      if (it == slot.systems.end() || !it->second.error.empty()) continue;
      const std::string base = a.attacker_id + "/" + slot.filter + "/" +
                               TargetCategoryName(slot.category) + "/" +
                               slot.target_id + "/";
      for (const auto &s : it->second.target_self)
        add(base + s.utt_id + "/target", slot.target_id, s.utt_id,
            TrialLabel::kTarget, s.score);
      for (const auto &p : it->second.pairs) {
        add(base + p.test_utt + "/natural", slot.target_id, p.test_utt,
            TrialLabel::kAttackNatural, p.natural);
        add(base + p.test_utt + "/mimic", slot.target_id, p.test_utt,
            TrialLabel::kAttackMimic, p.mimic);
      }
    }
    auto sv = a.self_verification.find(system_id);
    if (sv == a.self_verification.end()) continue;
    const std::string base = a.attacker_id + "/self/";
    for (const auto &s : sv->second.natural_self)
      add(base + s.utt_id + "/natural", a.attacker_id, s.utt_id, TrialLabel::kTarget,
          s.score);
    for (const auto &s : sv->second.mimic_self)
      add(base + s.utt_id + "/mimic", a.attacker_id, s.utt_id,
          TrialLabel::kAttackMimic, s.score);
  }
  return out;
}

// ---------------------------------------------------------------- JSON

namespace {

json UttScoresToJson(const std::vector<UttScore> &v) {
  json a = json::array();
  for (const auto &s : v) a.push_back({{"utt_id", s.utt_id}, {"score", s.score}});
  return a;
}

std::vector<UttScore> UttScoresFromJson(const json &a) {
  std::vector<UttScore> v;
  for (const auto &s : a) v.push_back({s.at("utt_id"), s.at("score")});
  return v;
}

}  // namespace

std::string AttackReportToJson(const AttackReport &r) {
  json j;
  j["attacker_system"] = r.attacker_system;
  j["systems"] = r.systems;
  j["attacker_model"] = {{"kind", AttackerKindName(r.model.kind)},
                         {"lambda", r.model.lambda},
                         {"seed", r.model.seed},
                         {"note", "simulated mimicry, not a model of human imitation"}};
  j["min_active_s"] = r.min_active_s;
  j["unique_targets"] = r.unique_targets;
  json attackers = json::array();
  for (const auto &a : r.attackers) {
    json ja;
    ja["attacker_id"] = a.attacker_id;
    ja["gender"] = a.gender;
    ja["enroll_utts"] = a.enroll_utts;
    ja["test_utts"] = a.test_utts;
    json slots = json::array();
    for (const auto &s : a.slots) {
      json js;
      js["filter"] = s.filter;
      js["category"] = TargetCategoryName(s.category);
      js["target_id"] = s.target_id;
      js["search_score"] = s.search_score;
      js["degenerate"] = s.degenerate;
      js["selected_utts"] = s.selected_utts;
      js["selected_active_s"] = s.selected_active_s;
      js["shortfall"] = s.shortfall;
      json sys = json::object();
      for (const auto &[id, sc] : s.systems) {
        json jc;
        jc["model_self"] = sc.model_self;
        jc["target_self"] = UttScoresToJson(sc.target_self);
        json pairs = json::array();
        for (const auto &p : sc.pairs)
          pairs.push_back(
              {{"test_utt", p.test_utt}, {"natural", p.natural}, {"mimic", p.mimic}});
        jc["pairs"] = pairs;
        if (!sc.error.empty()) jc["error"] = sc.error;
        sys[id] = jc;
      }
      js["systems"] = sys;
      slots.push_back(js);
    }
    ja["slots"] = slots;
    json self = json::object();
    for (const auto &[id, sv] : a.self_verification)
      self[id] = {{"natural_self", UttScoresToJson(sv.natural_self)},
                  {"mimic_self", UttScoresToJson(sv.mimic_self)}};
    ja["self_verification"] = self;
    json rankings = json::object();
    for (const auto &[f, entries] : a.rankings) {
      json e = json::array();
      for (const auto &t : entries)
        e.push_back({{"speaker_id", t.speaker_id}, {"score", t.score}});
      rankings[f] = e;
    }
    ja["rankings"] = rankings;
    attackers.push_back(ja);
  }
  j["attackers"] = attackers;
  json sweep = json::array();
  for (const auto &p : r.lambda_sweep)
    sweep.push_back({{"system_id", p.system_id}, {"category", p.category},
                     {"lambda", p.lambda}, {"mean_natural", p.mean_natural},
                     {"mean_mimic", p.mean_mimic}, {"n", p.n}});
  j["lambda_sweep"] = sweep;
  json eer = json::object();
  for (const auto &[id, e] : r.eer)
    eer[id] = {{"eer", e.eer}, {"threshold", e.threshold},
               {"n_target", e.n_target}, {"n_nontarget", e.n_nontarget}};
  j["eer"] = eer;
  return j.dump(2) + "\n";
}

AttackReport AttackReportFromJson(const std::string &text) {
  AttackReport r;
  try {
    const json j = json::parse(text);
    r.attacker_system = j.at("attacker_system");
    r.systems = j.at("systems").get<std::vector<std::string>>();
    const json &m = j.at("attacker_model");
    r.model.kind = ParseAttackerKind(m.at("kind"));
    r.model.lambda = m.at("lambda");
    r.model.seed = m.at("seed");
    r.min_active_s = j.at("min_active_s");
    r.unique_targets = j.at("unique_targets");
    for (const auto &ja : j.at("attackers")) {
      AttackerResult a;
      a.attacker_id = ja.at("attacker_id");
      a.gender = ja.at("gender");
      a.enroll_utts = ja.at("enroll_utts").get<std::vector<std::string>>();
      a.test_utts = ja.at("test_utts").get<std::vector<std::string>>();
      for (const auto &js : ja.at("slots")) {
        TargetSlot s;
        s.filter = js.at("filter");
        s.category = ParseTargetCategory(js.at("category"));
        s.target_id = js.at("target_id");
        s.search_score = js.at("search_score");
        s.degenerate = js.at("degenerate");
        s.selected_utts = js.at("selected_utts").get<std::vector<std::string>>();
        s.selected_active_s = js.at("selected_active_s");
        s.shortfall = js.at("shortfall");
        for (const auto &[id, jc] : js.at("systems").items()) {
          SlotScores sc;
          sc.model_self = jc.at("model_self");
          sc.target_self = UttScoresFromJson(jc.at("target_self"));
          for (const auto &p : jc.at("pairs"))
            sc.pairs.push_back({p.at("test_utt"), p.at("natural"), p.at("mimic")});
          if (jc.contains("error")) sc.error = jc.at("error");
          s.systems[id] = std::move(sc);
        }
        a.slots.push_back(std::move(s));
      }
      for (const auto &[id, jv] : ja.at("self_verification").items())
        a.self_verification[id] = {UttScoresFromJson(jv.at("natural_self")),
                                   UttScoresFromJson(jv.at("mimic_self"))};
      for (const auto &[f, je] : ja.at("rankings").items())
        for (const auto &t : je)
          a.rankings[f].push_back({t.at("speaker_id"), t.at("score")});
      r.attackers.push_back(std::move(a));
    }
    for (const auto &p : j.at("lambda_sweep"))
      r.lambda_sweep.push_back({p.at("system_id"), p.at("category"), p.at("lambda"),
                                p.at("mean_natural"), p.at("mean_mimic"), p.at("n")});
    for (const auto &[id, e] : j.at("eer").items())
      r.eer[id] = {e.at("eer"), e.at("threshold"), e.at("n_target"),
                   e.at("n_nontarget")};
  } catch (const json::exception &e) {
    Fail(ErrorCode::kFormat, std::string("malformed attack report: ") + e.what());
  }
  return r;
}

void SaveAttackReport(const AttackReport &report, const std::filesystem::path &path) {
  std::ofstream os(path);
  if (!os) Fail(ErrorCode::kIo, "cannot write " + path.string());
  os << AttackReportToJson(report);
  if (!os) Fail(ErrorCode::kIo, "write failed for " + path.string());
}

AttackReport LoadAttackReport(const std::filesystem::path &path) {
  std::ifstream is(path);
  if (!is) Fail(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return AttackReportFromJson(ss.str());
}

}  // namespace svak
