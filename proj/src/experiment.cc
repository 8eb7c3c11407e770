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

#include "svak/experiment.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "svak/report.h"
#include "svak/target_search.h"

namespace svak {

using json = nlohmann::json;

// ---------------------------------------------------------------- config

namespace {

const char *NormName(NormKind k) {
  return k == NormKind::kCmvnUtterance ? "cmvn" : "sliding_cmn";
}

NormKind ParseNorm(const std::string &s) {
  if (s == "cmvn") return NormKind::kCmvnUtterance;
  if (s == "sliding_cmn") return NormKind::kSlidingCmn;
  Fail(ErrorCode::kInvalidInput, "unknown normalization '" + s + "'");
}

json FeatureConfigToJson(const FeatureConfig &c) {
  return {{"profile", c.name},
          {"sample_rate_hz", c.sample_rate_hz},
          {"frame_len_ms", c.frame_len_ms},
          {"frame_hop_ms", c.frame_hop_ms},
          {"n_fft", c.n_fft},
          {"n_mel_filters", c.n_mel_filters},
          {"n_cepstra", c.n_cepstra},
          {"preemph", c.preemph},
          {"use_deltas", c.use_deltas},
          {"delta_window", c.delta_window},
          {"use_rasta", c.use_rasta},
          {"norm", NormName(c.norm)},
          {"sliding_window_frames", c.sliding_window_frames},
          {"vad_dynamic_range_db", c.vad.dynamic_range_db},
          {"vad_abs_floor_db", c.vad.abs_floor_db}};
}

// Starts from the named profile; every other key overrides one field.
FeatureConfig FeatureConfigFromJson(const json &j) {
  FeatureConfig c = FeatureProfile(j.value("profile", std::string("attacker")));
  c.sample_rate_hz = j.value("sample_rate_hz", c.sample_rate_hz);
  c.frame_len_ms = j.value("frame_len_ms", c.frame_len_ms);
  c.frame_hop_ms = j.value("frame_hop_ms", c.frame_hop_ms);
  c.n_fft = j.value("n_fft", c.n_fft);
  c.n_mel_filters = j.value("n_mel_filters", c.n_mel_filters);
  c.n_cepstra = j.value("n_cepstra", c.n_cepstra);
  c.preemph = j.value("preemph", c.preemph);
  c.use_deltas = j.value("use_deltas", c.use_deltas);
  c.delta_window = j.value("delta_window", c.delta_window);
  c.use_rasta = j.value("use_rasta", c.use_rasta);
  if (j.contains("norm")) c.norm = ParseNorm(j.at("norm"));
  c.sliding_window_frames = j.value("sliding_window_frames", c.sliding_window_frames);
  c.vad.dynamic_range_db = j.value("vad_dynamic_range_db", c.vad.dynamic_range_db);
  c.vad.abs_floor_db = j.value("vad_abs_floor_db", c.vad.abs_floor_db);
  c.Validate();
  return c;
}

fs::path Resolve(const fs::path &base, const std::string &p) {
  if (p.empty()) return {};
  const fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

json ParseOverrideValue(const std::string &v) {
  try {
    return json::parse(v);
  } catch (const json::exception &) {
    return json(v);
  }
}

void ApplyOverride(json *root, const std::string &spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0)
    Fail(ErrorCode::kInvalidInput, "override must look like key.path=value: " + spec);
  std::string pointer;
  std::stringstream keys(spec.substr(0, eq));
  for (std::string k; std::getline(keys, k, '.');) pointer += "/" + k;
  try {
    (*root)[json::json_pointer(pointer)] = ParseOverrideValue(spec.substr(eq + 1));
  } catch (const json::exception &e) {
    Fail(ErrorCode::kInvalidInput, "bad override '" + spec + "': " + e.what());
  }
}

}  // namespace

void RunConfig::Validate() const {
  if (threads < 1) Fail(ErrorCode::kInvalidInput, "threads must be >= 1");
  if (systems.empty()) Fail(ErrorCode::kInvalidInput, "config lists no systems");
  std::set<std::string> ids;
  for (const auto &s : systems) {
    if (s.id.empty()) Fail(ErrorCode::kInvalidInput, "system without an id");
    if (!ids.insert(s.id).second)
      Fail(ErrorCode::kInvalidInput, "duplicate system id " + s.id);
    if (!s.archive.empty()) {
      if (!fs::exists(s.archive))
        Fail(ErrorCode::kInvalidInput, "system archive not found: " + s.archive.string());
      continue;
    }
    for (const fs::path *p : {&s.ubm_manifest, &s.tv_manifest, &s.backend_manifest})
      if (p->empty() || !fs::exists(*p))
        Fail(ErrorCode::kInvalidInput, "system " + s.id + ": training manifest '" +
                                           p->string() + "' not found");
  }
  if (!ids.count(attacker_system))
    Fail(ErrorCode::kInvalidInput, "attacker_system '" + attacker_system +
                                       "' is not among the configured systems");
  for (const fs::path *p : {&attacker_manifest, &target_db_manifest})
    if (p->empty() || !fs::exists(*p))
      Fail(ErrorCode::kInvalidInput, "manifest '" + p->string() + "' not found");
  if (!eval_manifest.empty() && !fs::exists(eval_manifest))
    Fail(ErrorCode::kInvalidInput, "eval manifest '" + eval_manifest.string() +
                                       "' not found");
  if (eval_enroll_per_speaker < 1)
    Fail(ErrorCode::kInvalidInput, "eval enroll_per_speaker must be >= 1");
  attack.model.Validate();
}

RunConfig ParseRunConfig(const std::string &json_text, const fs::path &base_dir,
                         const std::vector<std::string> &overrides) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception &e) {
    Fail(ErrorCode::kFormat, std::string("config is not valid JSON: ") + e.what());
  }
  for (const auto &o : overrides) ApplyOverride(&j, o);
  RunConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    c.out_dir = Resolve(base_dir, j.value("out_dir", c.out_dir.string()));
    const json m = j.value("manifests", json::object());
    c.attacker_manifest = Resolve(base_dir, m.value("attacker", ""));
    c.target_db_manifest = Resolve(base_dir, m.value("target_db", ""));
    c.eval_manifest = Resolve(base_dir, m.value("eval", ""));
    c.eval_enroll_per_speaker =
        j.value("eval", json::object()).value("enroll_per_speaker", 5);
    for (const auto &js : j.value("systems", json::array())) {
      SystemSpec s;
      s.id = js.at("id");
      s.features = FeatureConfigFromJson(js.value("features", json::object()));
      const json u = js.value("ubm", json::object());
      s.ubm.num_components = u.value("components", s.ubm.num_components);
      s.ubm.em_iters = u.value("em_iters", s.ubm.em_iters);
      s.ubm.kmeans_iters = u.value("kmeans_iters", s.ubm.kmeans_iters);
      s.ubm.max_kmeans_frames = u.value("max_kmeans_frames", s.ubm.max_kmeans_frames);
      const json t = js.value("tv", json::object());
      s.tv.rank = t.value("rank", s.tv.rank);
      s.tv.em_iters = t.value("em_iters", s.tv.em_iters);
      const json b = js.value("backend", json::object());
      s.backend.lda_dim = b.value("lda_dim", s.backend.lda_dim);
      s.backend.plda_dim = b.value("plda_dim", s.backend.plda_dim);
      s.backend.plda_iters = b.value("plda_iters", s.backend.plda_iters);
      s.backend.length_norm = b.value("length_norm", s.backend.length_norm);
      const json sm = js.value("manifests", json::object());
      s.ubm_manifest = Resolve(base_dir, sm.value("ubm_train", ""));
      s.tv_manifest = Resolve(base_dir, sm.value("tv_train", ""));
      s.backend_manifest = Resolve(base_dir, sm.value("backend_train", ""));
      s.archive = Resolve(base_dir, js.value("archive", ""));
      c.systems.push_back(std::move(s));
    }
    c.attacker_system = j.value("attacker_system",
                                c.systems.empty() ? "" : c.systems.front().id);
    const json a = j.value("attack", json::object());
    const json am = a.value("model", json::object());
    c.attack.model.kind =
        ParseAttackerKind(am.value("kind", AttackerKindName(c.attack.model.kind)));
    c.attack.model.lambda = am.value("lambda", c.attack.model.lambda);
    c.attack.model.seed = am.value("seed", c.attack.model.seed);
    c.attack.min_active_s = a.value("min_active_s", c.attack.min_active_s);
    if (a.contains("lambda_grid"))
      c.attack.lambda_grid = a.at("lambda_grid").get<std::vector<double>>();
    if (a.contains("filters")) {
      c.attack.filters.clear();
      for (const auto &f : a.at("filters"))
        c.attack.filters.push_back(MetadataFilter::Parse(f.get<std::string>()));
    }
    if (a.contains("common_targets"))
      c.attack.common_targets =
          a.at("common_targets").get<std::map<std::string, std::vector<std::string>>>();
    if (a.contains("exclude_utts"))
      c.attack.exclude_utts = a.at("exclude_utts").get<std::set<std::string>>();
  } catch (const json::exception &e) {
    Fail(ErrorCode::kFormat, std::string("bad config field: ") + e.what());
  }
  return c;
}

RunConfig LoadRunConfig(const fs::path &path, const std::vector<std::string> &overrides) {
  std::ifstream is(path);
  if (!is) Fail(ErrorCode::kIo, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ParseRunConfig(ss.str(), fs::absolute(path).parent_path(), overrides);
}

std::string RunConfigToJson(const RunConfig &c) {
  json j;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["out_dir"] = c.out_dir.string();
  j["manifests"] = {{"attacker", c.attacker_manifest.string()},
                    {"target_db", c.target_db_manifest.string()},
                    {"eval", c.eval_manifest.string()}};
  j["eval"] = {{"enroll_per_speaker", c.eval_enroll_per_speaker}};
  j["attacker_system"] = c.attacker_system;
  json systems = json::array();
  for (const auto &s : c.systems) {
    json js;
    js["id"] = s.id;
    js["features"] = FeatureConfigToJson(s.features);
    js["ubm"] = {{"components", s.ubm.num_components},
                 {"em_iters", s.ubm.em_iters},
                 {"kmeans_iters", s.ubm.kmeans_iters},
                 {"max_kmeans_frames", s.ubm.max_kmeans_frames}};
    js["tv"] = {{"rank", s.tv.rank}, {"em_iters", s.tv.em_iters}};
    js["backend"] = {{"lda_dim", s.backend.lda_dim},
                     {"plda_dim", s.backend.plda_dim},
                     {"plda_iters", s.backend.plda_iters},
                     {"length_norm", s.backend.length_norm}};
    js["manifests"] = {{"ubm_train", s.ubm_manifest.string()},
                       {"tv_train", s.tv_manifest.string()},
                       {"backend_train", s.backend_manifest.string()}};
    if (!s.archive.empty()) js["archive"] = s.archive.string();
    systems.push_back(js);
  }
  j["systems"] = systems;
  json filters = json::array();
  for (const auto &f : c.attack.filters) filters.push_back(f.Describe());
  j["attack"] = {{"model",
                  {{"kind", AttackerKindName(c.attack.model.kind)},
                   {"lambda", c.attack.model.lambda},
                   {"seed", c.attack.model.seed}}},
                 {"min_active_s", c.attack.min_active_s},
                 {"lambda_grid", c.attack.lambda_grid},
                 {"filters", filters},
                 {"common_targets", c.attack.common_targets},
                 {"exclude_utts", c.attack.exclude_utts}};
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------- training

std::vector<std::optional<FeatureMatrix>> ExtractManifestFeatures(
    const Manifest &manifest, const FeatureConfig &config) {
  const auto &entries = manifest.entries();
  std::vector<std::optional<FeatureMatrix>> out(entries.size());
  ParallelFor(entries.size(), [&](std::size_t i) {
    try {
      out[i] = ExtractFeatures(entries[i], config);
    } catch (const Error &e) {
      SVAK_WARN("features", "skipping " << entries[i].utt_id << ": " << e.what());
    }
  });
  return out;
}

TrainedSystem TrainSystem(const SystemSpec &spec, const Manifest &ubm_manifest,
                          const Manifest &tv_manifest, const Manifest &backend_manifest,
                          std::uint64_t root_seed) {
  SVAK_INFO("train", spec.id << ": extracting features");
  // Union of the three manifests so shared utterances are extracted once.
  std::vector<Utterance> all;
  std::set<std::string> seen;
  for (const Manifest *m : {&ubm_manifest, &tv_manifest, &backend_manifest})
    for (const auto &u : m->entries())
      if (seen.insert(u.utt_id).second) all.push_back(u);
  const Manifest pooled(all, ManifestRole::kUnspecified);
  auto feats = ExtractManifestFeatures(pooled, spec.features);
  std::map<std::string, const FeatureMatrix *> by_utt;
  for (std::size_t i = 0; i < all.size(); ++i)
    if (feats[i]) by_utt[all[i].utt_id] = &*feats[i];

  auto collect = [&](const Manifest &m) {
    std::vector<std::pair<const Utterance *, const FeatureMatrix *>> v;
    for (const auto &u : m.entries()) {
      auto it = by_utt.find(u.utt_id);
      if (it != by_utt.end()) v.push_back({&u, it->second});
    }
    if (v.empty()) Fail(ErrorCode::kNoData, spec.id + ": no usable training audio");
    return v;
  };

  TrainedSystem out;
  const auto ubm_data = collect(ubm_manifest);
  std::vector<FeatureMatrix> ubm_feats;
  for (const auto &[u, f] : ubm_data) ubm_feats.push_back(*f);
  UbmTrainOptions uo = spec.ubm;
  uo.seed = DeriveSeed(root_seed, spec.id + "/ubm");
  UbmTrainResult ubm = TrainUbm(ubm_feats, uo);
  ubm_feats.clear();
  out.ubm_loglik = ubm.loglik_history;

  auto stats_of = [&](const std::vector<std::pair<const Utterance *, const FeatureMatrix *>> &d) {
    std::vector<BaumWelchStats> s(d.size());
    ParallelFor(d.size(), [&](std::size_t i) { s[i] = AccumulateStats(ubm.gmm, *d[i].second); });
    return s;
  };
  SVAK_INFO("train", spec.id << ": training TV model");
  const std::vector<BaumWelchStats> tv_stats = stats_of(collect(tv_manifest));
  TvTrainOptions to = spec.tv;
  to.seed = DeriveSeed(root_seed, spec.id + "/tv");
  TvTrainResult tv = TrainTv(tv_stats, ubm.gmm, to);
  out.tv_objective = tv.objective_history;

  SVAK_INFO("train", spec.id << ": training backend");
  const auto be_data = collect(backend_manifest);
  const std::vector<BaumWelchStats> be_stats = stats_of(be_data);
  std::vector<Embedding> raw(be_data.size());
  ParallelFor(be_data.size(), [&](std::size_t i) {
    raw[i] = ExtractEmbedding(tv.model, be_stats[i], be_data[i].first->speaker_id);
  });
  BackendTrainOptions bo = spec.backend;
  bo.seed = DeriveSeed(root_seed, spec.id + "/backend");
  BackendTrainResult be = TrainBackend(raw, bo);
  out.plda_loglik = be.plda_loglik_history;
  out.system = VerificationSystem(spec.id, spec.features, std::move(ubm.gmm),
                                  std::move(tv.model), std::move(be.backend));
  return out;
}

// ---------------------------------------------------------------- evaluation

EvalPlan BuildEvalPlan(const Manifest &eval, int enroll_per_speaker) {
  if (enroll_per_speaker < 1)
    Fail(ErrorCode::kInvalidInput, "enroll_per_speaker must be >= 1");
  std::map<std::string, std::vector<std::string>> by;
  for (const auto &u : eval.entries()) by[u.speaker_id].push_back(u.utt_id);
  EvalPlan plan;
  std::vector<std::pair<std::string, std::string>> tests;  // (speaker, utt)
  for (auto &[spk, utts] : by) {
    std::sort(utts.begin(), utts.end());
    if (static_cast<int>(utts.size()) <= enroll_per_speaker)
      Fail(ErrorCode::kNoData, "speaker " + spk + " has no test utterances left");
    plan.enroll[spk].assign(utts.begin(), utts.begin() + enroll_per_speaker);
    for (auto it = utts.begin() + enroll_per_speaker; it != utts.end(); ++it)
      tests.push_back({spk, *it});
  }
  if (plan.enroll.size() < 2)
    Fail(ErrorCode::kNoData, "evaluation needs at least two speakers");
  for (const auto &[model_spk, _] : plan.enroll)
    for (const auto &[test_spk, utt] : tests)
      plan.trials.push_back({model_spk + "/" + utt, model_spk, utt,
                             model_spk == test_spk ? TrialLabel::kTarget
                                                   : TrialLabel::kNontarget});
  return plan;
}

EvalResult RunEval(const VerificationSystem &system, const Manifest &eval,
                   int enroll_per_speaker) {
  const EvalPlan plan = BuildEvalPlan(eval, enroll_per_speaker);
  const std::vector<UttEmbedding> emb = EmbedManifest(system, eval, false);
  std::map<std::string, const UttEmbedding *> by_utt;
  for (const auto &e : emb) by_utt[e.utt_id] = &e;
  std::map<std::string, Embedding> models, tests;
  for (const auto &[spk, utts] : plan.enroll) {
    std::vector<UttEmbedding> e;
    for (const auto &u : utts) e.push_back(*by_utt.at(u));
    models[spk] = EnrollSpeaker(e);
  }
  for (const auto &t : plan.trials)
    if (!tests.count(t.test_utt)) tests[t.test_utt] = by_utt.at(t.test_utt)->embedding;
  EvalResult r;
  r.records = ScoreTrials(system, plan.trials, models, tests);
  std::vector<double> tar, non;
  for (const auto &rec : r.records)
    (rec.label == TrialLabel::kTarget ? tar : non).push_back(rec.score);
  r.eer = ComputeEer(tar, non);
  SVAK_INFO("eval", system.id() << ": EER " << 100.0 * r.eer.eer << "% over "
                                << tar.size() << " target / " << non.size()
                                << " nontarget trials");
  return r;
}

// ---------------------------------------------------------------- experiment

namespace {

void WriteRankings(const fs::path &dir, const AttackReport &report,
                   const Manifest &targets) {
  fs::create_directories(dir);
  std::map<std::string, const Utterance *> meta;
  for (const auto &u : targets.entries())
    if (!meta.count(u.speaker_id)) meta[u.speaker_id] = &u;
  for (const auto &a : report.attackers)
    for (const auto &[filter, entries] : a.rankings) {
      std::string name = a.attacker_id + "_" + filter + ".tsv";
      std::replace(name.begin(), name.end(), '=', '-');
      std::ofstream os(dir / name);
      if (!os) Fail(ErrorCode::kIo, "cannot write ranking for " + a.attacker_id);
      os << "rank\tspeaker_id\tscore\tnationality\tlanguage\tgender\n";
      char buf[64];
      for (std::size_t i = 0; i < entries.size(); ++i) {
        const Utterance *u = meta.at(entries[i].speaker_id);
        std::snprintf(buf, sizeof(buf), "%.6f", entries[i].score);
        os << i + 1 << '\t' << entries[i].speaker_id << '\t' << buf << '\t'
           << u->nationality << '\t' << u->language << '\t' << u->gender << '\n';
      }
    }
}

}  // namespace

ExperimentResult RunExperiment(const RunConfig &config) {
  config.Validate();
  SetNumThreads(config.threads);
  fs::create_directories(config.out_dir / "systems");

  std::map<fs::path, Manifest> manifests;
  auto manifest = [&](const fs::path &p, ManifestRole role) -> const Manifest & {
    auto it = manifests.find(p);
    if (it == manifests.end()) it = manifests.emplace(p, LoadManifest(p, role)).first;
    return it->second;
  };

  ExperimentResult result;
  for (const auto &spec : config.systems) {
    if (!spec.archive.empty()) {
      result.systems.push_back(LoadModel<VerificationSystem>(spec.archive));
      if (result.systems.back().id() != spec.id)
        Fail(ErrorCode::kInvalidInput, "archive " + spec.archive.string() +
                                           " holds system '" +
                                           result.systems.back().id() + "'");
    } else {
      TrainedSystem t = TrainSystem(spec, manifest(spec.ubm_manifest, ManifestRole::kUbmTrain),
                                    manifest(spec.tv_manifest, ManifestRole::kTvTrain),
                                    manifest(spec.backend_manifest, ManifestRole::kBackendTrain),
                                    config.seed);
      result.systems.push_back(std::move(t.system));
    }
    SaveModel(result.systems.back(), config.out_dir / "systems" / (spec.id + ".svak"));
  }

  const VerificationSystem *attacker_sys = nullptr;
  std::vector<const VerificationSystem *> blackbox;
  for (const auto &s : result.systems)
    (s.id() == config.attacker_system ? attacker_sys : blackbox.emplace_back()) = &s;

  if (!config.eval_manifest.empty()) {
    const Manifest &eval = manifest(config.eval_manifest, ManifestRole::kEval);
    for (const auto &s : result.systems) {
      result.eval[s.id()] = RunEval(s, eval, config.eval_enroll_per_speaker);
      WriteScores(config.out_dir / ("eval_scores_" + s.id() + ".tsv"),
                  result.eval[s.id()].records);
    }
  }

  const Manifest &attackers = manifest(config.attacker_manifest, ManifestRole::kAttacker);
  const Manifest &targets = manifest(config.target_db_manifest, ManifestRole::kTargetDb);
  result.report =
      RunAttackProtocol(attackers, targets, *attacker_sys, blackbox, config.attack);
  for (const auto &[id, e] : result.eval) result.report.eer[id] = e.eer;

  for (const auto &s : result.systems)
    WriteScores(config.out_dir / ("scores_" + s.id() + ".tsv"),
                AttackScoreRecords(result.report, s.id()));
  WriteRankings(config.out_dir / "rankings", result.report, targets);
  SaveAttackReport(result.report, config.out_dir / "attack_report.json");
  std::ofstream(config.out_dir / "config.json") << RunConfigToJson(config);
  return result;
}

// ---------------------------------------------------------------- benchmark

RunConfig PrepareBenchmark(const BenchmarkOptions &opts) {
  if (opts.n_speakers < 10)
    Fail(ErrorCode::kInvalidInput, "the benchmark needs at least 10 speakers");
  if (opts.utts_per_speaker < 4)
    Fail(ErrorCode::kInvalidInput, "the benchmark needs at least 4 utterances per speaker");
  const fs::path work = fs::absolute(opts.work_dir);
  const Manifest corpus = GenerateSyntheticCorpus(
      opts.n_speakers, opts.utts_per_speaker, DeriveSeed(opts.seed, "corpus"),
      work / "corpus", opts.corpus);

  const std::vector<std::string> spk = corpus.speakers();  // sorted ids
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < spk.size(); ++i) index[spk[i]] = static_cast<int>(i);
  const int n = opts.n_speakers;
  const int n_train = n * 3 / 5;
  const int n_attackers = std::max(2, n / 12);
  const int shift = n_train / 6;

  const fs::path mdir = work / "manifests";
  fs::create_directories(mdir);
  auto write = [&](const std::string &name, int lo, int hi, ManifestRole role) {
    const Manifest m = corpus.Filter(
        [&](const Utterance &u) {
          const int i = index.at(u.speaker_id);
          return i >= lo && i < hi;
        },
        role);
    const fs::path p = mdir / (name + ".jsonl");
    SaveManifest(m, p);
    return p;
  };
  const fs::path train_all = write("train_all", 0, n_train, ManifestRole::kUbmTrain);
  const fs::path train_late = write("train_late", shift, n_train, ManifestRole::kTvTrain);
  const fs::path train_early = write("train_early", 0, n_train - shift, ManifestRole::kTvTrain);

  RunConfig c;
  c.seed = opts.seed;
  c.threads = NumThreads();
  c.out_dir = work / "run";
  c.eval_manifest = write("eval", n_train, n, ManifestRole::kEval);
  c.attacker_manifest = write("attackers", n - n_attackers, n, ManifestRole::kAttacker);
  c.target_db_manifest = write("target_db", 0, n - n_attackers, ManifestRole::kTargetDb);
  c.eval_enroll_per_speaker = opts.utts_per_speaker / 2;

  auto system = [](const std::string &id, const std::string &profile, int comps,
                   int rank, int lda, int plda, const fs::path &ubm,
                   const fs::path &tv_be) {
    SystemSpec s;
    s.id = id;
    s.features = FeatureProfile(profile);
    s.ubm.num_components = comps;
    s.ubm.em_iters = 10;
    s.tv.rank = rank;
    s.tv.em_iters = 5;
    s.backend.lda_dim = lda;
    s.backend.plda_dim = plda;
    s.backend.plda_iters = 10;
    s.ubm_manifest = ubm;
    s.tv_manifest = tv_be;
    s.backend_manifest = tv_be;
    return s;
  };
  c.systems = {system("attacker", "attacker", 32, 40, 20, 10, train_all, train_all),
               system("attacked1", "attacked1", 32, 30, 16, 8, train_all, train_late),
               system("attacked2", "attacked2", 16, 30, 16, 8, train_early, train_early)};
  c.attacker_system = "attacker";
  c.attack.model = opts.attacker_model;
  c.attack.min_active_s = opts.min_active_s;
  // Gender-matched fixed targets: the first male and first female speaker.
  c.attack.common_targets = {{"M", {spk[0]}}, {"F", {spk[1]}}};
  std::ofstream(work / "config.json") << RunConfigToJson(c);
  return c;
}

ExperimentResult RunBenchmark(const BenchmarkOptions &opts) {
  const RunConfig c = PrepareBenchmark(opts);
  ExperimentResult r = RunExperiment(c);
  if (opts.write_report) WriteReport(r.report, fs::absolute(opts.work_dir) / "report");
  return r;
}

}  // namespace svak
