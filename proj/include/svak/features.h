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

#ifndef SVAK_FEATURES_H_
#define SVAK_FEATURES_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "svak/archive.h"
#include "svak/common.h"
#include "svak/corpus.h"

namespace svak {

enum class NormKind { kCmvnUtterance, kSlidingCmn };

struct VadConfig {
  // A frame is speech when its log-energy is within `dynamic_range_db` of the
  // loudest frame and above the absolute floor (dB relative to full scale).
  double dynamic_range_db = 30.0;
  double abs_floor_db = -75.0;
};

struct FeatureConfig {
  std::string name = "attacker";
  int sample_rate_hz = 16000;
  double frame_len_ms = 25.0;
  double frame_hop_ms = 10.0;
  int n_fft = 512;
  int n_mel_filters = 20;
  int n_cepstra = 20;
  double preemph = 0.97;
  bool use_deltas = true;
  int delta_window = 2;
  bool use_rasta = true;
  NormKind norm = NormKind::kCmvnUtterance;
  int sliding_window_frames = 300;
  VadConfig vad;

  int frame_len() const;  // samples
  int frame_hop() const;  // samples
  int output_dim() const { return use_deltas ? 3 * n_cepstra : n_cepstra; }

  // Throws kInvalidInput when the invariants on the fields do not hold.
  void Validate() const;
  std::uint64_t Fingerprint() const;

  void Write(ArchiveWriter &w) const;
  static FeatureConfig Read(ArchiveReader &r);
  bool operator==(const FeatureConfig &) const = default;
};

// Named profiles: "attacker" (16 kHz, 20 MFCC + deltas, RASTA, CMVN),
// "attacked1" (16 kHz, 30 MFCC, sliding CMN), "attacked2" (8 kHz, 23 MFCC,
// sliding CMN).
FeatureConfig FeatureProfile(const std::string &name);
std::vector<std::string> FeatureProfileNames();

struct FeatureMatrix {
  static constexpr ModelKind kKind = ModelKind::kFeatures;

  Matrix frames;  // T x D
  std::uint64_t config_fingerprint = 0;
  std::vector<bool> vad_mask;  // optional; when set, length is the
                               // pre-selection frame count

  Eigen::Index num_frames() const { return frames.rows(); }
  Eigen::Index dim() const { return frames.cols(); }

  void Write(ArchiveWriter &w) const;
  static FeatureMatrix Read(ArchiveReader &r);
  bool operator==(const FeatureMatrix &) const = default;
};

int NumFrames(std::size_t num_samples, int frame_len, int frame_hop);

// Windowed-sinc low-pass and rational-rate resampling. Equal rates return an
// exact copy; upsampling is rejected.
Waveform Resample(const Waveform &in, int target_rate_hz);

// HTK mel scale.
double HzToMel(double hz);
double MelToHz(double mel);
// Centre frequencies (Hz) of the triangular filters spanning 0..Nyquist.
std::vector<double> MelFilterCenters(int n_filters, int sample_rate_hz);

// Log mel filterbank energies (floored at 1e-10 before the log), T x M.
Matrix ComputeLogFbank(const Waveform &wave, const FeatureConfig &config);

// Static cepstra: DCT-II of the log filterbank energies, T x n_cepstra.
FeatureMatrix ComputeMfcc(const Waveform &wave, const FeatureConfig &config);

// Appends regression deltas and double deltas with edge replication.
FeatureMatrix AppendDeltas(const FeatureMatrix &features, int delta_window);

// Per-dimension band-pass IIR over time:
//   y[t] = 0.94 y[t-1] + 0.2 x[t] + 0.1 x[t-1] - 0.1 x[t-3] - 0.2 x[t-4]
// with zero initial state.
FeatureMatrix RastaFilter(const FeatureMatrix &features);

// Frame log-energy in dB (mean square of the raw frame), same grid as MFCC.
std::vector<double> FrameLogEnergyDb(const Waveform &wave,
                                     const FeatureConfig &config);
std::vector<bool> EnergyVad(const Waveform &wave, const FeatureConfig &config);

// Mean/variance normalization over the frames where mask is true (all frames
// when the mask is empty). Variances below 1e-10 are not scaled.
FeatureMatrix Cmvn(const FeatureMatrix &features,
                   const std::vector<bool> &mask = {});

// Subtracts the mean of a centred window of `window_frames`, clipped at the
// edges.
FeatureMatrix SlidingCmn(const FeatureMatrix &features, int window_frames);

// Resample -> MFCC -> RASTA -> deltas -> VAD selection -> normalization.
// Only voiced frames are returned; vad_mask holds the full-length mask.
FeatureMatrix ExtractFeatures(const Waveform &wave, const FeatureConfig &config);
FeatureMatrix ExtractFeatures(const Utterance &utt, const FeatureConfig &config);

}  // namespace svak

#endif  // SVAK_FEATURES_H_
