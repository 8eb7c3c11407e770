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

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "svak/attack.h"
#include "svak/backend.h"
#include "svak/corpus.h"
#include "svak/experiment.h"
#include "svak/features.h"
#include "svak/metrics.h"
#include "svak/report.h"
#include "svak/target_search.h"

namespace py = pybind11;
using namespace svak;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Speaker-verification attack toolkit: native core";

  static py::exception<Error> exc(m, "SvakError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error &e) {
      py::set_error(exc, (std::string(ErrorCodeName(e.code())) + ": " + e.what()).c_str());
    }
  });

  m.def("set_num_threads", &SetNumThreads);
  m.def("set_log_level", [](const std::string &level) {
    if (level == "debug") SetLogLevel(LogLevel::kDebug);
    else if (level == "info") SetLogLevel(LogLevel::kInfo);
    else if (level == "warning") SetLogLevel(LogLevel::kWarning);
    else SetLogLevel(LogLevel::kError);
  });
  m.def("derive_seed", &DeriveSeed, py::arg("root"), py::arg("label"));

  py::class_<FeatureConfig>(m, "FeatureConfig")
      .def_readonly("name", &FeatureConfig::name)
      .def_readonly("sample_rate_hz", &FeatureConfig::sample_rate_hz)
      .def_readonly("n_cepstra", &FeatureConfig::n_cepstra)
      .def_readonly("use_deltas", &FeatureConfig::use_deltas)
      .def_property_readonly("output_dim", &FeatureConfig::output_dim);
  m.def("feature_profile", &FeatureProfile, py::arg("name"));
  m.def("feature_profile_names", &FeatureProfileNames);

  m.def(
      "read_audio",
      [](const fs::path &p) {
        Waveform w = ReadAudio(p);
        return py::make_tuple(Vector(Eigen::Map<const Vector>(w.samples.data(),
                                                              static_cast<Eigen::Index>(w.samples.size()))),
                              w.sample_rate_hz);
      },
      py::arg("path"), "Returns (samples in [-1, 1), sample_rate_hz).");
  m.def(
      "extract_features",
      [](const Eigen::Ref<const Vector> &samples, int rate, const std::string &profile) {
        Waveform w;
        w.samples.assign(samples.data(), samples.data() + samples.size());
        w.sample_rate_hz = rate;
        return ExtractFeatures(w, FeatureProfile(profile)).frames;
      },
      py::arg("samples"), py::arg("sample_rate_hz"), py::arg("profile") = "attacker",
      "Frames x dims matrix of voiced, normalized features.");

  m.def(
      "generate_corpus",
      [](int n_speakers, int utts, std::uint64_t seed, const fs::path &out) {
        return GenerateSyntheticCorpus(n_speakers, utts, seed, out).size();
      },
      py::arg("n_speakers"), py::arg("utts_per_speaker"), py::arg("seed"), py::arg("out_dir"),
      "Writes a synthetic corpus; returns the utterance count.");
  m.def(
      "load_manifest",
      [](const fs::path &p) {
        py::list rows;
        const Manifest manifest = LoadManifest(p);
        for (const auto &u : manifest.entries()) {
          py::dict d;
          d["utt_id"] = u.utt_id;
          d["speaker_id"] = u.speaker_id;
          d["path"] = u.path.string();
          d["sample_rate_hz"] = u.sample_rate_hz;
          d["duration_s"] = u.duration_s;
          d["language"] = u.language;
          d["nationality"] = u.nationality;
          d["gender"] = u.gender;
          rows.append(d);
        }
        return rows;
      },
      py::arg("path"));

  py::class_<EerResult>(m, "EerResult")
      .def_readonly("eer", &EerResult::eer)
      .def_readonly("threshold", &EerResult::threshold)
      .def_readonly("n_target", &EerResult::n_target)
      .def_readonly("n_nontarget", &EerResult::n_nontarget);
  m.def(
      "compute_eer",
      [](const std::vector<double> &tar, const std::vector<double> &non) {
        return ComputeEer(tar, non);
      },
      py::arg("targets"), py::arg("nontargets"));
  m.def(
      "mean_ci",
      [](const std::vector<double> &x, double level) {
        const MeanCi c = ComputeMeanCi(x, level);
        return py::make_tuple(c.mean, c.halfwidth);
      },
      py::arg("samples"), py::arg("level") = 0.95);

  m.def(
      "plda_score",
      [](const Vector &mu, const Matrix &v, const Matrix &sigma, const Vector &x,
         const Vector &y) { return PldaScorer(PldaModel{mu, v, sigma}).Score(x, y); },
      py::arg("mu"), py::arg("v"), py::arg("sigma"), py::arg("enroll"), py::arg("test"),
      "Verification log-likelihood ratio under x = mu + V h + e.");

  py::class_<VerificationSystem>(m, "VerificationSystem")
      .def_static("load", [](const fs::path &p) { return LoadModel<VerificationSystem>(p); })
      .def("save", [](const VerificationSystem &s, const fs::path &p) { SaveModel(s, p); })
      .def_property_readonly("id", &VerificationSystem::id)
      .def_property_readonly("embedding_dim",
                             [](const VerificationSystem &s) { return s.backend().OutputDim(); })
      .def(
          "embed_file",
          [](const VerificationSystem &s, const fs::path &wav, const std::string &speaker) {
            return s.EmbedFeatures(s.Features(ReadAudio(wav)), speaker).vector;
          },
          py::arg("wav"), py::arg("speaker_id") = "")
      .def(
          "score",
          [](const VerificationSystem &s, const Vector &enroll, const Vector &test) {
            Embedding a{enroll, "", EmbeddingSource::kAveraged, EmbeddingSpace::kLdaWhitened};
            Embedding b{test, "", EmbeddingSource::kSingleUtterance, EmbeddingSpace::kLdaWhitened};
            return s.Score(a, b);
          },
          py::arg("enroll"), py::arg("test"));

  m.def(
      "run_benchmark",
      [](const fs::path &work_dir, std::uint64_t seed, int n_speakers, int utts,
         double min_active_s, const std::string &kind, double lambda) {
        BenchmarkOptions o;
        o.work_dir = work_dir;
        o.seed = seed;
        o.n_speakers = n_speakers;
        o.utts_per_speaker = utts;
        o.min_active_s = min_active_s;
        o.attacker_model.kind = ParseAttackerKind(kind);
        o.attacker_model.lambda = lambda;
        py::gil_scoped_release release;
        const ExperimentResult r = RunBenchmark(o);
        std::map<std::string, double> eer;
        for (const auto &[id, e] : r.eval) eer[id] = e.eer.eer;
        return eer;
      },
      py::arg("work_dir"), py::arg("seed") = 7, py::arg("n_speakers") = 50,
      py::arg("utts_per_speaker") = 20, py::arg("min_active_s") = 8.0,
      py::arg("attacker_model") = "embedding-interp", py::arg("lam") = 0.5,
      "Synthetic end-to-end run; returns the held-out EER per system.");
  m.def(
      "run_attack",
      [](const fs::path &config, const std::vector<std::string> &overrides) {
        const RunConfig c = LoadRunConfig(config, overrides);
        py::gil_scoped_release release;
        RunExperiment(c);
        return c.out_dir;
      },
      py::arg("config"), py::arg("overrides") = std::vector<std::string>{});
  m.def(
      "write_report",
      [](const fs::path &attack_report, const fs::path &out) {
        WriteReport(LoadAttackReport(attack_report), out);
      },
      py::arg("attack_report_json"), py::arg("out_dir"));
}
