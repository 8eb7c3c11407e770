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

#ifndef SVAK_CORPUS_H_
#define SVAK_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "svak/common.h"

namespace svak {

struct Waveform {
  std::vector<double> samples;  // scaled to [-1, 1)
  int sample_rate_hz = 0;

  double duration_s() const {
    return sample_rate_hz > 0
               ? static_cast<double>(samples.size()) / sample_rate_hz
               : 0.0;
  }
};

struct WavInfo {
  int sample_rate_hz = 0;
  int channels = 0;
  std::size_t num_frames = 0;
};

// Parses the RIFF header only. PCM, 16-bit integer samples.
WavInfo ReadWavInfo(const std::filesystem::path &path);

// Reads channel 0 of a 16-bit PCM WAV file; samples are divided by 32768.
Waveform ReadAudio(const std::filesystem::path &path);

// Writes mono 16-bit PCM; samples are scaled by 32768, rounded and clipped.
void WriteWav(const std::filesystem::path &path, const Waveform &wave);

enum class UttStyle { kNatural, kMimic, kReadTranscript };
const char *UttStyleName(UttStyle s);
UttStyle ParseUttStyle(const std::string &s);

struct Utterance {
  std::string utt_id;
  std::string speaker_id;
  std::filesystem::path path;  // resolved against the manifest directory
  int sample_rate_hz = 0;
  double duration_s = 0.0;
  std::string language;
  std::string nationality;
  UttStyle style = UttStyle::kNatural;
  std::optional<std::string> target_id;
  std::string gender;  // optional: "M", "F" or empty

  bool operator==(const Utterance &) const = default;
};

enum class ManifestRole {
  kUnspecified,
  kUbmTrain,
  kTvTrain,
  kBackendTrain,
  kTargetDb,
  kAttacker,
  kEval,
};
const char *ManifestRoleName(ManifestRole r);
ManifestRole ParseManifestRole(const std::string &s);

class Manifest {
 public:
  Manifest() = default;
  // Validates id uniqueness and per-record invariants (not file existence).
  Manifest(std::vector<Utterance> entries, ManifestRole role);

  const std::vector<Utterance> &entries() const { return entries_; }
  ManifestRole role() const { return role_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  // Utterance count per speaker, keyed by speaker_id.
  const std::map<std::string, int> &speaker_counts() const {
    return speaker_counts_;
  }
  std::vector<std::string> speakers() const;
  const Utterance *Find(const std::string &utt_id) const;

  // Subset keeping manifest order.
  Manifest Filter(const std::function<bool(const Utterance &)> &keep,
                  ManifestRole role) const;

  bool operator==(const Manifest &) const = default;

 private:
  std::vector<Utterance> entries_;
  ManifestRole role_ = ManifestRole::kUnspecified;
  std::map<std::string, int> speaker_counts_;
};

// One JSON object per line. Mandatory keys: utt_id, speaker_id, path,
// sample_rate_hz, duration_s, language, nationality, style. Optional:
// target_id (required when style is "mimic"), gender. Relative paths are
// resolved against the manifest's directory. Every audio file must exist and
// carry a parseable WAV header.
Manifest LoadManifest(const std::filesystem::path &path,
                      ManifestRole role = ManifestRole::kUnspecified);

// Paths are written relative to the manifest directory when possible.
void SaveManifest(const Manifest &manifest, const std::filesystem::path &path);

struct SyntheticCorpusOptions {
  int sample_rate_hz = 16000;
  double min_utt_s = 3.0;
  double max_utt_s = 5.0;
  int finnish_every = 3;  // speaker i is tagged Finnish when i % n == 0
};

// Writes <out_dir>/wav/<speaker>/<utt>.wav and <out_dir>/manifest.jsonl.
// Each speaker has its own formant map, fundamental frequency, glottal tilt
// and breathiness; utterances are random phone strings rendered through a
// source-filter model. Output is a pure function of the arguments.
Manifest GenerateSyntheticCorpus(int n_speakers, int utts_per_speaker,
                                 std::uint64_t seed,
                                 const std::filesystem::path &out_dir,
                                 const SyntheticCorpusOptions &opts = {});

}  // namespace svak

#endif  // SVAK_CORPUS_H_
