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

// svak: speaker-verification attack toolkit command line.
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "svak/attack.h"
#include "svak/backend.h"
#include "svak/corpus.h"
#include "svak/experiment.h"
#include "svak/features.h"
#include "svak/gmm.h"
#include "svak/ivector.h"
#include "svak/metrics.h"
#include "svak/report.h"
#include "svak/target_search.h"

namespace {

using namespace svak;

struct Globals {
  int threads = 1;
  std::uint64_t seed = 0;
  std::string log_level = "info";
};

void ApplyGlobals(const Globals &g) {
  SetNumThreads(g.threads);
  if (g.log_level == "debug") SetLogLevel(LogLevel::kDebug);
  else if (g.log_level == "info") SetLogLevel(LogLevel::kInfo);
  else if (g.log_level == "warning") SetLogLevel(LogLevel::kWarning);
  else if (g.log_level == "error") SetLogLevel(LogLevel::kError);
  else throw CLI::ValidationError("--log-level", "expected debug|info|warning|error");
}

std::vector<FeatureMatrix> FeaturesOf(const Manifest &m, const FeatureConfig &cfg) {
  std::vector<FeatureMatrix> out;
  for (auto &f : ExtractManifestFeatures(m, cfg))
    if (f) out.push_back(std::move(*f));
  if (out.empty()) Fail(ErrorCode::kNoData, "no usable audio in the manifest");
  return out;
}

std::set<std::string> ReadIdList(const std::string &path) {
  std::set<std::string> ids;
  if (path.empty()) return ids;
  std::ifstream is(path);
  if (!is) Fail(ErrorCode::kIo, "cannot open " + path);
  for (std::string line; std::getline(is, line);)
    if (!line.empty() && line[0] != '#') ids.insert(line);
  return ids;
}

// Closed-form checks that need no data; shared with `selftest`.
int RunSelftest() {
  int failures = 0;
  auto check = [&](const char *name, bool ok, double got, double want) {
    std::printf("%s %-40s got=%.12g want=%.12g\n", ok ? "PASS" : "FAIL", name, got, want);
    failures += !ok;
  };
  {
    // One-component, one-dimensional TV model: w = t f~/s2 / (1 + N t^2/s2).
    const double m = 0.5, s2 = 2.0, t = 0.7, n = 3.0, f = 4.2;
    DiagGmm ubm(Vector::Ones(1), Matrix::Constant(1, 1, m), Matrix::Constant(1, 1, s2));
    TvModel tv(Matrix::Constant(1, 1, t), ubm);
    BaumWelchStats st = BaumWelchStats::Zero(1, 1, ubm.Fingerprint());
    st.n(0) = n;
    st.f(0, 0) = f;
    const double got = ExtractEmbedding(tv, st).vector(0);
    const double want = t * (f - n * m) / s2 / (1.0 + n * t * t / s2);
    check("scalar i-vector posterior mean", std::abs(got - want) < 1e-9, got, want);
  }
  {
    PldaModel p{Vector::Zero(1), Matrix::Ones(1, 1), Matrix::Ones(1, 1)};
    const double got = PldaScorer(p).Score(Vector::Zero(1), Vector::Zero(1));
    const double want = 0.5 * std::log(4.0 / 3.0);
    check("scalar PLDA score at the origin", std::abs(got - want) < 1e-9, got, want);
  }
  {
    const std::vector<double> tar = {0.9, 0.8, 0.55}, non = {0.6, 0.4, 0.3};
    const EerResult e = ComputeEer(tar, non);
    check("EER of a three-by-three list", std::abs(e.eer - 1.0 / 3.0) < 1e-12, e.eer,
          1.0 / 3.0);
  }
  {
    const std::vector<double> x = {1.0, 2.0, 3.0};
    const MeanCi c = ComputeMeanCi(x);
    const double want = 4.302652729749464 / std::sqrt(3.0);
    check("Student-t halfwidth for {1,2,3}", std::abs(c.halfwidth - want) < 1e-9,
          c.halfwidth, want);
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"svak: speaker-verification attack toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "root seed");
  app.add_option("--log-level", g.log_level, "debug|info|warning|error");

  // gen-corpus
  auto *gen = app.add_subcommand("gen-corpus", "write a synthetic speaker corpus");
  int n_speakers = 50, n_utts = 10;
  bool benchmark = false;
  double min_active = 8.0;
  std::string out;
  gen->add_option("--n-speakers", n_speakers)->check(CLI::Range(2, 100000));
  auto *utts_opt = gen->add_option("--utts", n_utts, "utterances per speaker")->check(CLI::PositiveNumber);
  gen->add_flag("--benchmark", benchmark,
                "also write role manifests and a ready-to-run config.json");
  gen->add_option("--min-active-s", min_active, "benchmark attack-utterance minimum");
  SyntheticCorpusOptions corpus_opts;
  auto *min_utt_opt =
      gen->add_option("--min-utt-s", corpus_opts.min_utt_s)->check(CLI::PositiveNumber);
  auto *max_utt_opt =
      gen->add_option("--max-utt-s", corpus_opts.max_utt_s)->check(CLI::PositiveNumber);
  gen->add_option("--out", out)->required();

  // extract-features
  auto *ext = app.add_subcommand("extract-features", "write one feature archive per utterance");
  std::string manifest, profile = "attacker";
  ext->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);
  ext->add_option("--profile", profile)->check(CLI::IsMember(FeatureProfileNames()));
  ext->add_option("--out", out)->required();

  // train-ubm
  auto *tubm = app.add_subcommand("train-ubm", "train a diagonal GMM universal background model");
  UbmTrainOptions ubm_opts;
  tubm->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);
  tubm->add_option("--profile", profile)->check(CLI::IsMember(FeatureProfileNames()));
  tubm->add_option("--components", ubm_opts.num_components)->check(CLI::PositiveNumber);
  tubm->add_option("--iters", ubm_opts.em_iters)->check(CLI::NonNegativeNumber);
  tubm->add_option("--out", out)->required();

  // train-tv
  auto *ttv = app.add_subcommand("train-tv", "train a total-variability matrix");
  TvTrainOptions tv_opts;
  std::string ubm_path, tv_path;
  ttv->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);
  ttv->add_option("--profile", profile)->check(CLI::IsMember(FeatureProfileNames()));
  ttv->add_option("--ubm", ubm_path)->required()->check(CLI::ExistingFile);
  ttv->add_option("--rank", tv_opts.rank)->check(CLI::PositiveNumber);
  ttv->add_option("--iters", tv_opts.em_iters)->check(CLI::NonNegativeNumber);
  ttv->add_option("--out", out)->required();

  // train-backend
  auto *tbe = app.add_subcommand("train-backend", "train LDA, whitening and PLDA");
  BackendTrainOptions be_opts;
  tbe->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);
  tbe->add_option("--profile", profile)->check(CLI::IsMember(FeatureProfileNames()));
  tbe->add_option("--ubm", ubm_path)->required()->check(CLI::ExistingFile);
  tbe->add_option("--tv", tv_path)->required()->check(CLI::ExistingFile);
  tbe->add_option("--lda-dim", be_opts.lda_dim)->check(CLI::PositiveNumber);
  tbe->add_option("--plda-dim", be_opts.plda_dim)->check(CLI::PositiveNumber);
  tbe->add_option("--iters", be_opts.plda_iters)->check(CLI::NonNegativeNumber);
  tbe->add_flag("--length-norm", be_opts.length_norm);
  tbe->add_option("--out", out, "output directory")->required();

  // build-system
  auto *bsys = app.add_subcommand("build-system", "bundle trained models into one system");
  std::string sys_id, lda_path, wh_path, plda_path;
  bool length_norm = false;
  bsys->add_option("--id", sys_id)->required();
  bsys->add_option("--profile", profile)->check(CLI::IsMember(FeatureProfileNames()));
  bsys->add_option("--ubm", ubm_path)->required()->check(CLI::ExistingFile);
  bsys->add_option("--tv", tv_path)->required()->check(CLI::ExistingFile);
  bsys->add_option("--lda", lda_path)->required()->check(CLI::ExistingFile);
  bsys->add_option("--whitener", wh_path)->required()->check(CLI::ExistingFile);
  bsys->add_option("--plda", plda_path)->required()->check(CLI::ExistingFile);
  bsys->add_flag("--length-norm", length_norm);
  bsys->add_option("--out", out)->required();

  // embed
  auto *emb = app.add_subcommand("embed", "write backend-space embeddings of a manifest");
  std::string system_path;
  emb->add_option("--system", system_path)->required()->check(CLI::ExistingFile);
  emb->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);
  emb->add_option("--out", out)->required();

  // search-targets
  auto *srch = app.add_subcommand("search-targets", "rank target speakers for each attacker");
  std::string attacker_manifest, target_db, exclude_list;
  std::vector<std::string> filters = {"all"};
  srch->add_option("--system", system_path)->required()->check(CLI::ExistingFile);
  srch->add_option("--attacker-manifest", attacker_manifest)->required()->check(CLI::ExistingFile);
  srch->add_option("--target-db", target_db)->required()->check(CLI::ExistingFile);
  srch->add_option("--filter", filters, "all or key=value; repeatable");
  srch->add_option("--exclude-list", exclude_list,
                   "utterance ids (one per line) never used as attack material")
      ->check(CLI::ExistingFile);
  double search_min_active = 30.0;
  srch->add_option("--min-active-s", search_min_active, "active speech per selection");
  srch->add_option("--out", out, "output directory")->required();

  // run-attack
  auto *run = app.add_subcommand("run-attack", "train or load systems and run the attack protocol");
  std::string config_path;
  std::vector<std::string> overrides;
  if (const char *env = std::getenv("SVAK_CONFIG")) config_path = env;
  run->add_option("--config", config_path, "JSON run config (default: $SVAK_CONFIG)");
  run->add_option("--set", overrides, "config override key.path=value; repeatable");
  run->add_option("--out", out, "overrides out_dir");

  // report
  auto *rep = app.add_subcommand("report", "summarize a finished attack run");
  std::string attack_report;
  rep->add_option("--attack-report", attack_report, "run directory or attack_report.json")
      ->required()
      ->check(CLI::ExistingPath);
  rep->add_option("--out", out)->required();

  auto *self = app.add_subcommand("selftest", "run the closed-form oracle checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    std::cerr << app.help() << "\nerror: " << e.what() << "\n";
    return 2;
  }

  try {
    ApplyGlobals(g);
    if (*gen) {
      if (benchmark) {
        BenchmarkOptions bo;
        bo.work_dir = out;
        bo.seed = g.seed;
        bo.n_speakers = n_speakers;
        bo.min_active_s = min_active;
        // Benchmark defaults differ from the plain generator; keep them unless overridden.
        if (utts_opt->count()) bo.utts_per_speaker = n_utts;
        if (min_utt_opt->count()) bo.corpus.min_utt_s = corpus_opts.min_utt_s;
        if (max_utt_opt->count()) bo.corpus.max_utt_s = corpus_opts.max_utt_s;
        const RunConfig c = PrepareBenchmark(bo);
        SVAK_INFO("cli", "wrote " << (fs::path(out) / "config.json").string()
                                  << "; run it with: svak run-attack --config "
                                  << (fs::path(out) / "config.json").string());
      } else {
        const Manifest m = GenerateSyntheticCorpus(n_speakers, n_utts,
                                                   DeriveSeed(g.seed, "corpus"), out,
                                                   corpus_opts);
        SVAK_INFO("cli", "wrote " << m.size() << " utterances to " << out);
      }
    } else if (*ext) {
      const FeatureConfig cfg = FeatureProfile(profile);
      const Manifest m = LoadManifest(manifest);
      fs::create_directories(out);
      auto feats = ExtractManifestFeatures(m, cfg);
      int written = 0;
      for (std::size_t i = 0; i < feats.size(); ++i)
        if (feats[i]) {
          SaveModel(*feats[i], fs::path(out) / (m.entries()[i].utt_id + ".feat"));
          ++written;
        }
      SVAK_INFO("cli", "wrote " << written << " feature archives");
    } else if (*tubm) {
      ubm_opts.seed = DeriveSeed(g.seed, "ubm");
      const auto feats = FeaturesOf(LoadManifest(manifest, ManifestRole::kUbmTrain),
                                    FeatureProfile(profile));
      const UbmTrainResult r = TrainUbm(feats, ubm_opts);
      SaveModel(r.gmm, out);
    } else if (*ttv) {
      tv_opts.seed = DeriveSeed(g.seed, "tv");
      const DiagGmm ubm = LoadModel<DiagGmm>(ubm_path);
      const auto feats = FeaturesOf(LoadManifest(manifest, ManifestRole::kTvTrain),
                                    FeatureProfile(profile));
      std::vector<BaumWelchStats> stats(feats.size());
      ParallelFor(feats.size(), [&](std::size_t i) { stats[i] = AccumulateStats(ubm, feats[i]); });
      SaveModel(TrainTv(stats, ubm, tv_opts).model, out);
    } else if (*tbe) {
      be_opts.seed = DeriveSeed(g.seed, "backend");
      const DiagGmm ubm = LoadModel<DiagGmm>(ubm_path);
      const TvModel tv = LoadModel<TvModel>(tv_path);
      const Manifest m = LoadManifest(manifest, ManifestRole::kBackendTrain);
      auto feats = ExtractManifestFeatures(m, FeatureProfile(profile));
      std::vector<Embedding> raw;
      for (std::size_t i = 0; i < feats.size(); ++i)
        if (feats[i])
          raw.push_back(ExtractEmbedding(tv, AccumulateStats(ubm, *feats[i]),
                                         m.entries()[i].speaker_id));
      const BackendTrainResult r = TrainBackend(raw, be_opts);
      fs::create_directories(out);
      SaveModel(r.backend.lda(), fs::path(out) / "lda.svak");
      SaveModel(r.backend.whitener(), fs::path(out) / "whitener.svak");
      SaveModel(r.backend.plda(), fs::path(out) / "plda.svak");
    } else if (*bsys) {
      PldaBackend be(LoadModel<LdaTransform>(lda_path), LoadModel<Whitener>(wh_path),
                     LoadModel<PldaModel>(plda_path), length_norm);
      const VerificationSystem s(sys_id, FeatureProfile(profile), LoadModel<DiagGmm>(ubm_path),
                                 LoadModel<TvModel>(tv_path), std::move(be));
      SaveModel(s, out);
    } else if (*emb) {
      const auto s = LoadModel<VerificationSystem>(system_path);
      const auto e = EmbedManifest(s, LoadManifest(manifest), true);
      std::ofstream os(out);
      if (!os) Fail(ErrorCode::kIo, "cannot write " + out);
      os << "utt_id\tspeaker_id\tactive_s\tembedding\n";
      char buf[64];
      for (const auto &u : e) {
        os << u.utt_id << '\t' << u.embedding.speaker_id << '\t' << u.active_s << '\t';
        for (Eigen::Index k = 0; k < u.embedding.dim(); ++k) {
          std::snprintf(buf, sizeof(buf), "%.9g", u.embedding.vector(k));
          os << (k ? " " : "") << buf;
        }
        os << '\n';
      }
    } else if (*srch) {
      const auto s = LoadModel<VerificationSystem>(system_path);
      const Manifest att = LoadManifest(attacker_manifest, ManifestRole::kAttacker);
      const TargetDatabase db = BuildTargetDb(s, LoadManifest(target_db, ManifestRole::kTargetDb));
      const std::set<std::string> excluded = ReadIdList(exclude_list);
      const auto att_emb = EmbedManifest(s, att);
      std::map<std::string, std::vector<UttEmbedding>> by_spk;
      for (std::size_t i = 0; i < att.size(); ++i)
        by_spk[att.entries()[i].speaker_id].push_back(att_emb[i]);
      fs::create_directories(out);
      std::ofstream sel(fs::path(out) / "selections.tsv");
      sel << "attacker_id\tfilter\tcategory\tspeaker_id\tscore\tdegenerate\tutterances\n";
      for (const auto &[spk, utts] : by_spk) {
        std::vector<std::string> ids, enroll, test;
        for (const auto &u : utts) ids.push_back(u.utt_id);
        SplitEnrollTest(ids, &enroll, &test);
        std::vector<UttEmbedding> en;
        for (const auto &u : utts)
          if (std::find(enroll.begin(), enroll.end(), u.utt_id) != enroll.end()) en.push_back(u);
        const Embedding a = EnrollSpeaker(en);
        for (const auto &fs_ : filters) {
          const MetadataFilter f = MetadataFilter::Parse(fs_);
          const TargetRanking r = RankTargets(s, a, db, f, {spk});
          std::string name = spk + "_" + f.Describe() + ".tsv";
          std::replace(name.begin(), name.end(), '=', '-');
          WriteRanking(fs::path(out) / name, r, db);
          const TargetSelection ts = SelectTargets(r);
          const std::pair<TargetCategory, RankedTarget> picks[] = {
              {TargetCategory::kClosest, ts.closest},
              {TargetCategory::kMedian, ts.median},
              {TargetCategory::kFurthest, ts.furthest}};
          for (const auto &[cat, rt] : picks) {
            const UtteranceSelection us =
                SelectUtterances(s, a, db.at(rt.speaker_id), cat, search_min_active, excluded);
            sel << spk << '\t' << f.Describe() << '\t' << TargetCategoryName(cat) << '\t'
                << rt.speaker_id << '\t' << rt.score << '\t' << ts.degenerate << '\t';
            for (std::size_t k = 0; k < us.utt_ids.size(); ++k)
              sel << (k ? "," : "") << us.utt_ids[k];
            sel << '\n';
          }
        }
      }
    } else if (*run) {
      if (config_path.empty())
        throw CLI::RequiredError("--config (or SVAK_CONFIG)");
      RunConfig c = LoadRunConfig(config_path, overrides);
      if (!out.empty()) c.out_dir = out;
      if (app.count("--threads")) c.threads = g.threads;
      RunExperiment(c);
      SVAK_INFO("cli", "attack run written to " << c.out_dir.string());
    } else if (*rep) {
      fs::path p = attack_report;
      if (fs::is_directory(p)) p /= "attack_report.json";
      WriteReport(LoadAttackReport(p), out);
      SVAK_INFO("cli", "report written to " << out);
    } else if (*self) {
      return RunSelftest();
    }
  } catch (const CLI::Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error &e) {
    std::cerr << "error [" << ErrorCodeName(e.code()) << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
