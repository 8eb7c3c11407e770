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

#ifndef SVAK_EXPERIMENT_H_
#define SVAK_EXPERIMENT_H_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "svak/attack.h"
#include "svak/backend.h"
#include "svak/corpus.h"
#include "svak/features.h"
#include "svak/gmm.h"
#include "svak/ivector.h"
#include "svak/metrics.h"

namespace svak {

namespace fs = std::filesystem;

struct SystemSpec {
  std::string id;
  FeatureConfig features;
  UbmTrainOptions ubm;
  TvTrainOptions tv;
  BackendTrainOptions backend;
  fs::path ubm_manifest, tv_manifest, backend_manifest;
  fs::path archive;  // when set, the system is loaded instead of trained
};

struct RunConfig {
  std::uint64_t seed = 0;
  int threads = 1;
  fs::path out_dir = "svak_out";
  fs::path attacker_manifest;
  fs::path target_db_manifest;
  fs::path eval_manifest;  // optional held-out verification trials
  int eval_enroll_per_speaker = 5;
  std::vector<SystemSpec> systems;
  std::string attacker_system;
  AttackConfig attack;

  // Throws kInvalidInput naming the first problem: unknown attacker system,
  // duplicate ids, or referenced files that do not exist.
  void Validate() const;
};

// JSON config. Relative paths resolve against `base_dir`. `overrides` are
// "dotted.key=value" strings applied before parsing; values are JSON when
// they parse as JSON and strings otherwise.
RunConfig ParseRunConfig(const std::string &json_text, const fs::path &base_dir,
                         const std::vector<std::string> &overrides = {});
RunConfig LoadRunConfig(const fs::path &path,
                        const std::vector<std::string> &overrides = {});
std::string RunConfigToJson(const RunConfig &config);

// Feature extraction for a whole manifest, parallel over utterances. Slots
// follow manifest order; failed utterances are logged and left empty.
std::vector<std::optional<FeatureMatrix>> ExtractManifestFeatures(
    const Manifest &manifest, const FeatureConfig &config);

struct TrainedSystem {
  VerificationSystem system;
  std::vector<double> ubm_loglik;
  std::vector<double> tv_objective;
  std::vector<double> plda_loglik;
};

// UBM -> TV -> LDA/whitening/PLDA. Child seeds derive from `root_seed` and the
// system id.
TrainedSystem TrainSystem(const SystemSpec &spec, const Manifest &ubm_manifest,
                          const Manifest &tv_manifest, const Manifest &backend_manifest,
                          std::uint64_t root_seed);

// Per speaker (sorted utt ids): the first `enroll_per_speaker` utterances
// enroll, the rest are test utterances scored against every speaker model.
struct EvalPlan {
  std::map<std::string, std::vector<std::string>> enroll;  // speaker -> utts
  std::vector<Trial> trials;
};
EvalPlan BuildEvalPlan(const Manifest &eval, int enroll_per_speaker);

struct EvalResult {
  std::vector<ScoreRecord> records;
  EerResult eer;
};
EvalResult RunEval(const VerificationSystem &system, const Manifest &eval,
                   int enroll_per_speaker);

struct ExperimentResult {
  std::vector<VerificationSystem> systems;
  std::map<std::string, EvalResult> eval;
  AttackReport report;
};

// Trains or loads every system, runs the held-out evaluation when configured
// and the attack protocol, and writes under config.out_dir:
//   systems/<id>.svak, scores_<id>.tsv, eval_scores_<id>.tsv,
//   rankings/<attacker>_<filter>.tsv, attack_report.json, config.json.
ExperimentResult RunExperiment(const RunConfig &config);

struct BenchmarkOptions {
  fs::path work_dir;
  std::uint64_t seed = 7;
  int n_speakers = 50;
  int utts_per_speaker = 20;
  double min_active_s = 8.0;
  // Long utterances keep phonetic-content variance below speaker variance.
  SyntheticCorpusOptions corpus{16000, 10.0, 14.0, 3};
  AttackerModel attacker_model;
  bool write_report = true;
};

// Synthetic corpus plus role manifests and a ready-to-run config:
//   speakers [0, 30) train the systems, [30, 50) form the held-out trial set,
//   [46, 50) are attackers and [0, 46) the target database.
RunConfig PrepareBenchmark(const BenchmarkOptions &opts);

// PrepareBenchmark + RunExperiment (+ WriteReport into work_dir/report).
ExperimentResult RunBenchmark(const BenchmarkOptions &opts);

}  // namespace svak

#endif  // SVAK_EXPERIMENT_H_
