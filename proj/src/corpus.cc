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

#include "svak/corpus.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

#include "json.hpp"

namespace svak {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------- WAV

namespace {

std::uint32_t Le32(const unsigned char *p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t Le16(const unsigned char *p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

struct ParsedWav {
  WavInfo info;
  std::streamoff data_offset = 0;
};

ParsedWav ParseWavHeader(std::ifstream &is, const fs::path &path) {
  unsigned char riff[12];
  if (!is.read(reinterpret_cast<char *>(riff), 12) ||
      std::string_view(reinterpret_cast<char *>(riff), 4) != "RIFF" ||
      std::string_view(reinterpret_cast<char *>(riff) + 8, 4) != "WAVE")
    Fail(ErrorCode::kFormat, "not a RIFF/WAVE file: " + path.string());

  ParsedWav out;
  bool have_fmt = false;
  int bits = 0;
  unsigned char chunk[8];
  while (is.read(reinterpret_cast<char *>(chunk), 8)) {
    const std::string_view id(reinterpret_cast<char *>(chunk), 4);
    const std::uint32_t size = Le32(chunk + 4);
    if (id == "fmt ") {
      if (size < 16) Fail(ErrorCode::kFormat, "short fmt chunk: " + path.string());
      std::vector<unsigned char> fmt(size);
      if (!is.read(reinterpret_cast<char *>(fmt.data()), size))
        Fail(ErrorCode::kFormat, "truncated fmt chunk: " + path.string());
      std::uint16_t format = Le16(&fmt[0]);
      if (format == 0xFFFE && size >= 26) format = Le16(&fmt[24]);
      if (format != 1)
        Fail(ErrorCode::kFormat,
             "unsupported encoding (only integer PCM): " + path.string());
      out.info.channels = Le16(&fmt[2]);
      out.info.sample_rate_hz = static_cast<int>(Le32(&fmt[4]));
      bits = Le16(&fmt[14]);
      if (bits != 16)
        Fail(ErrorCode::kFormat, "unsupported sample width " +
                                     std::to_string(bits) + " bits: " +
                                     path.string());
      if (out.info.channels < 1 || out.info.sample_rate_hz <= 0)
        Fail(ErrorCode::kFormat, "invalid fmt chunk: " + path.string());
      have_fmt = true;
      if (size & 1) is.ignore(1);
    } else if (id == "data") {
      if (!have_fmt)
        Fail(ErrorCode::kFormat, "data chunk before fmt: " + path.string());
      out.data_offset = is.tellg();
      out.info.num_frames = size / (2u * out.info.channels);
      return out;
    } else {
      is.ignore(size + (size & 1));
    }
  }
  Fail(ErrorCode::kFormat, "no data chunk: " + path.string());
}

}  // namespace

WavInfo ReadWavInfo(const fs::path &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) Fail(ErrorCode::kIo, "cannot open audio file: " + path.string());
  return ParseWavHeader(is, path).info;
}

Waveform ReadAudio(const fs::path &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) Fail(ErrorCode::kIo, "cannot open audio file: " + path.string());
  ParsedWav hdr = ParseWavHeader(is, path);
  if (hdr.info.num_frames == 0)
    Fail(ErrorCode::kNoData, "zero-length audio: " + path.string());
  const std::size_t stride = 2u * hdr.info.channels;
  std::vector<unsigned char> raw(hdr.info.num_frames * stride);
  is.read(reinterpret_cast<char *>(raw.data()),
          static_cast<std::streamsize>(raw.size()));
  const auto got = static_cast<std::size_t>(is.gcount()) / stride;
  if (got == 0) Fail(ErrorCode::kNoData, "zero-length audio: " + path.string());
  Waveform w;
  w.sample_rate_hz = hdr.info.sample_rate_hz;
  w.samples.resize(got);
  for (std::size_t i = 0; i < got; ++i) {
    const auto s = static_cast<std::int16_t>(Le16(&raw[i * stride]));
    w.samples[i] = s / 32768.0;
  }
  return w;
}

void WriteWav(const fs::path &path, const Waveform &wave) {
  std::string buf;
  auto put32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>(v >> (8 * i)));
  };
  auto put16 = [&](std::uint16_t v) {
    buf.push_back(static_cast<char>(v & 0xff));
    buf.push_back(static_cast<char>(v >> 8));
  };
  const auto n = static_cast<std::uint32_t>(wave.samples.size());
  buf.append("RIFF");
  put32(36 + 2 * n);
  buf.append("WAVEfmt ");
  put32(16);
  put16(1);
  put16(1);
  put32(static_cast<std::uint32_t>(wave.sample_rate_hz));
  put32(static_cast<std::uint32_t>(wave.sample_rate_hz) * 2);
  put16(2);
  put16(16);
  buf.append("data");
  put32(2 * n);
  for (double x : wave.samples) {
    const long q = std::clamp(std::lround(x * 32768.0), -32768L, 32767L);
    put16(static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) Fail(ErrorCode::kIo, "cannot write audio file: " + path.string());
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

// ---------------------------------------------------------------- manifest

const char *UttStyleName(UttStyle s) {
  switch (s) {
    case UttStyle::kNatural: return "natural";
    case UttStyle::kMimic: return "mimic";
    case UttStyle::kReadTranscript: return "read-transcript";
  }
  return "natural";
}

UttStyle ParseUttStyle(const std::string &s) {
  if (s == "natural") return UttStyle::kNatural;
  if (s == "mimic") return UttStyle::kMimic;
  if (s == "read-transcript") return UttStyle::kReadTranscript;
  Fail(ErrorCode::kFormat, "unknown utterance style '" + s + "'");
}

const char *ManifestRoleName(ManifestRole r) {
  switch (r) {
    case ManifestRole::kUnspecified: return "unspecified";
    case ManifestRole::kUbmTrain: return "ubm-train";
    case ManifestRole::kTvTrain: return "tv-train";
    case ManifestRole::kBackendTrain: return "backend-train";
    case ManifestRole::kTargetDb: return "target-db";
    case ManifestRole::kAttacker: return "attacker";
    case ManifestRole::kEval: return "eval";
  }
  return "unspecified";
}

ManifestRole ParseManifestRole(const std::string &s) {
  for (auto r : {ManifestRole::kUnspecified, ManifestRole::kUbmTrain,
                 ManifestRole::kTvTrain, ManifestRole::kBackendTrain,
                 ManifestRole::kTargetDb, ManifestRole::kAttacker,
                 ManifestRole::kEval})
    if (s == ManifestRoleName(r)) return r;
  Fail(ErrorCode::kInvalidInput, "unknown manifest role '" + s + "'");
}

Manifest::Manifest(std::vector<Utterance> entries, ManifestRole role)
    : entries_(std::move(entries)), role_(role) {
  std::set<std::string> seen;
  for (const auto &u : entries_) {
    if (u.utt_id.empty() || u.speaker_id.empty())
      Fail(ErrorCode::kFormat, "utterance with empty utt_id or speaker_id");
    if (!seen.insert(u.utt_id).second)
      Fail(ErrorCode::kInvalidInput, "duplicate utt_id '" + u.utt_id + "'");
    if (!(u.duration_s > 0))
      Fail(ErrorCode::kInvalidInput,
           "non-positive duration for '" + u.utt_id + "'");
    if (u.style == UttStyle::kMimic && !u.target_id)
      Fail(ErrorCode::kInvalidInput,
           "mimic utterance '" + u.utt_id + "' has no target_id");
    ++speaker_counts_[u.speaker_id];
  }
}

std::vector<std::string> Manifest::speakers() const {
  std::vector<std::string> out;
  out.reserve(speaker_counts_.size());
  for (const auto &[spk, n] : speaker_counts_) out.push_back(spk);
  return out;
}

const Utterance *Manifest::Find(const std::string &utt_id) const {
  for (const auto &u : entries_)
    if (u.utt_id == utt_id) return &u;
  return nullptr;
}

Manifest Manifest::Filter(const std::function<bool(const Utterance &)> &keep,
                          ManifestRole role) const {
  std::vector<Utterance> out;
  for (const auto &u : entries_)
    if (keep(u)) out.push_back(u);
  return Manifest(std::move(out), role);
}

namespace {

template <typename T>
T RequireField(const json &rec, const char *key, int line) {
  if (!rec.contains(key) || rec[key].is_null())
    Fail(ErrorCode::kFormat, "manifest line " + std::to_string(line) +
                                 ": missing mandatory field '" + key + "'");
  try {
    return rec[key].get<T>();
  } catch (const json::exception &) {
    Fail(ErrorCode::kFormat, "manifest line " + std::to_string(line) +
                                 ": bad type for field '" + key + "'");
  }
}

}  // namespace

Manifest LoadManifest(const fs::path &path, ManifestRole role) {
  std::ifstream is(path);
  if (!is) Fail(ErrorCode::kIo, "cannot open manifest: " + path.string());
  const fs::path base = path.parent_path();
  std::vector<Utterance> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error &e) {
      Fail(ErrorCode::kFormat, "manifest line " + std::to_string(lineno) +
                                   ": " + e.what());
    }
    Utterance u;
    u.utt_id = RequireField<std::string>(rec, "utt_id", lineno);
    u.speaker_id = RequireField<std::string>(rec, "speaker_id", lineno);
    fs::path p = RequireField<std::string>(rec, "path", lineno);
    u.path = p.is_absolute() ? p : base / p;
    u.sample_rate_hz = RequireField<int>(rec, "sample_rate_hz", lineno);
    u.duration_s = RequireField<double>(rec, "duration_s", lineno);
    u.language = RequireField<std::string>(rec, "language", lineno);
    u.nationality = RequireField<std::string>(rec, "nationality", lineno);
    u.style = ParseUttStyle(RequireField<std::string>(rec, "style", lineno));
    if (rec.contains("target_id") && !rec["target_id"].is_null())
      u.target_id = rec["target_id"].get<std::string>();
    if (rec.contains("gender") && !rec["gender"].is_null())
      u.gender = rec["gender"].get<std::string>();
    entries.push_back(std::move(u));
  }
  if (entries.empty())
    Fail(ErrorCode::kNoData, "empty manifest: " + path.string());
  Manifest m(std::move(entries), role);
  for (const auto &u : m.entries()) {
    if (!fs::exists(u.path))
      Fail(ErrorCode::kIo, "dangling audio path for '" + u.utt_id +
                               "': " + u.path.string());
    ReadWavInfo(u.path);
  }
  return m;
}

void SaveManifest(const Manifest &manifest, const fs::path &path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) Fail(ErrorCode::kIo, "cannot write manifest: " + path.string());
  const fs::path base = fs::absolute(path).parent_path();
  for (const auto &u : manifest.entries()) {
    json rec;
    rec["utt_id"] = u.utt_id;
    rec["speaker_id"] = u.speaker_id;
    fs::path p = u.path;
    if (p.is_absolute()) {
      fs::path rel = p.lexically_relative(base);
      if (!rel.empty() && *rel.begin() != "..") p = rel;
    }
    rec["path"] = p.generic_string();
    rec["sample_rate_hz"] = u.sample_rate_hz;
    rec["duration_s"] = u.duration_s;
    rec["language"] = u.language;
    rec["nationality"] = u.nationality;
    rec["style"] = UttStyleName(u.style);
    rec["target_id"] = u.target_id ? json(*u.target_id) : json(nullptr);
    if (!u.gender.empty()) rec["gender"] = u.gender;
    os << rec.dump() << "\n";
  }
}

// ---------------------------------------------------------------- synthesis

namespace {

constexpr double kPi = std::numbers::pi;

enum class PhoneClass { kVowel, kNasal, kFricative };

struct Phone {
  PhoneClass cls;
  std::array<double, 3> formants;  // Hz, adult male reference
  double level;
};

// Small vowel/nasal/fricative inventory; formants for fricatives give the
// centre of the noise band.
const std::array<Phone, 12> kPhones = {{
    {PhoneClass::kVowel, {270, 2290, 3010}, 1.0},
    {PhoneClass::kVowel, {530, 1840, 2480}, 1.0},
    {PhoneClass::kVowel, {730, 1090, 2440}, 1.0},
    {PhoneClass::kVowel, {570, 840, 2410}, 1.0},
    {PhoneClass::kVowel, {300, 870, 2240}, 1.0},
    {PhoneClass::kVowel, {660, 1720, 2410}, 1.0},
    {PhoneClass::kVowel, {490, 1350, 1690}, 1.0},
    {PhoneClass::kVowel, {390, 1990, 2550}, 1.0},
    {PhoneClass::kNasal, {250, 1100, 2300}, 0.5},
    {PhoneClass::kNasal, {250, 1700, 2500}, 0.5},
    {PhoneClass::kFricative, {5000, 0, 0}, 0.25},
    {PhoneClass::kFricative, {3000, 0, 0}, 0.25},
}};

struct SpeakerVoice {
  bool male = true;
  double f0 = 120;
  double vtl_scale = 1.0;
  std::array<std::array<double, 3>, kPhones.size()> formant_mult{};
  std::array<double, kPhones.size()> phone_weight{};
  double bandwidth_scale = 1.0;
  double glottal_pole = 0.7;
  double breathiness = 0.05;
  double fricative_shift = 1.0;
  double mean_phone_s = 0.12;
};

SpeakerVoice DrawVoice(std::mt19937_64 &rng, bool male) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  auto uni = [&](double a, double b) { return a + (b - a) * u(rng); };
  SpeakerVoice v;
  v.male = male;
  v.f0 = male ? uni(90, 150) : uni(170, 260);
  v.vtl_scale = male ? uni(0.9, 1.05) : uni(1.08, 1.22);
  for (auto &fm : v.formant_mult)
    for (double &m : fm) m = std::exp(0.12 * n(rng));
  for (double &w : v.phone_weight) w = std::exp(0.4 * n(rng));
  v.bandwidth_scale = uni(0.7, 1.5);
  v.glottal_pole = uni(0.45, 0.9);
  v.breathiness = uni(0.01, 0.2);
  v.fricative_shift = uni(0.85, 1.15);
  v.mean_phone_s = uni(0.08, 0.16);
  return v;
}

// Two-pole resonator normalized to unit gain at DC.
class Resonator {
 public:
  void Set(double freq, double bw, double fs) {
    const double r = std::exp(-kPi * bw / fs);
    a1_ = 2.0 * r * std::cos(2.0 * kPi * freq / fs);
    a2_ = -r * r;
    g_ = 1.0 - a1_ - a2_;
  }
  double operator()(double x) {
    const double y = g_ * x + a1_ * y1_ + a2_ * y2_;
    y2_ = y1_;
    y1_ = y;
    return y;
  }

 private:
  double a1_ = 0, a2_ = 0, g_ = 1, y1_ = 0, y2_ = 0;
};

struct Segment {
  int phone = -1;  // -1 = pause
  std::size_t n = 0;
};

Waveform SynthesizeUtterance(const SpeakerVoice &voice, std::mt19937_64 &rng,
                             int fs, double target_s) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  auto uni = [&](double a, double b) { return a + (b - a) * u(rng); };

  // Per-utterance session variability.
  const double f0 = voice.f0 * uni(0.94, 1.06);
  const double formant_jitter = std::exp(0.015 * n(rng));
  const double channel_tilt = uni(-0.3, 0.3);
  const double gain = uni(0.15, 0.45);

  std::discrete_distribution<int> pick_phone(voice.phone_weight.begin(),
                                             voice.phone_weight.end());
  std::vector<Segment> segs;
  const auto total = static_cast<std::size_t>(target_s * fs);
  std::size_t acc = 0;
  auto push = [&](int phone, double secs) {
    auto len = static_cast<std::size_t>(secs * fs);
    segs.push_back({phone, len});
    acc += len;
  };
  push(-1, uni(0.1, 0.3));
  while (acc < total) {
    const int nphones = 2 + static_cast<int>(u(rng) * 4);
    for (int k = 0; k < nphones; ++k)
      push(pick_phone(rng), voice.mean_phone_s * uni(0.6, 1.5));
    if (u(rng) < 0.6) push(-1, uni(0.05, 0.25));
  }
  push(-1, uni(0.1, 0.3));

  std::vector<double> out;
  out.reserve(acc);
  std::array<Resonator, 4> tract;
  Resonator fric;
  double phase = 0.0, glottal = 0.0;
  double env = 0.0;
  const double env_step = 1.0 / (0.01 * fs);
  const double nyq_guard = 0.45 * fs;
  std::array<double, 4> cur = {500, 1500, 2500, 3500};
  for (const Segment &seg : segs) {
    const bool pause = seg.phone < 0;
    const Phone *ph = pause ? nullptr : &kPhones[seg.phone];
    std::array<double, 4> goal = cur;
    double fric_center = 0.0;
    if (ph && ph->cls != PhoneClass::kFricative) {
      for (int k = 0; k < 3; ++k)
        goal[k] = ph->formants[k] * voice.vtl_scale *
                  voice.formant_mult[seg.phone][k] * formant_jitter;
      goal[3] = 3500.0 * voice.vtl_scale;
    } else if (ph) {
      fric_center = ph->formants[0] * voice.fricative_shift *
                    voice.formant_mult[seg.phone][0];
      fric_center = std::min(fric_center, nyq_guard);
      fric.Set(fric_center, 900.0, fs);
    }
    const std::array<double, 4> from = cur;
    const std::size_t glide = std::min<std::size_t>(seg.n, fs / 50);
    for (std::size_t i = 0; i < seg.n; ++i) {
      if (!pause && ph->cls != PhoneClass::kFricative && i % 32 == 0) {
        const double a = glide ? std::min(1.0, double(i) / glide) : 1.0;
        for (int k = 0; k < 4; ++k) {
          cur[k] = from[k] + a * (goal[k] - from[k]);
          const double f = std::min(cur[k], nyq_guard);
          tract[k].Set(f, (60.0 + 0.06 * f) * voice.bandwidth_scale, fs);
        }
      }
      // Glottal source: pulse train with slow vibrato through a one-pole
      // low-pass, plus aspiration noise.
      const double inst_f0 =
          f0 * (1.0 + 0.02 * std::sin(2 * kPi * 5.0 * out.size() / fs));
      phase += inst_f0 / fs;
      double pulse = 0.0;
      if (phase >= 1.0) {
        phase -= 1.0;
        pulse = 1.0;
      }
      glottal = (1.0 - voice.glottal_pole) * pulse +
                voice.glottal_pole * glottal;
      const double noise = n(rng);
      double s = 0.0;
      double level = 0.0;
      if (!pause) {
        level = ph->level;
        if (ph->cls == PhoneClass::kFricative) {
          s = 0.02 * fric(noise);
        } else {
          s = glottal + voice.breathiness * 0.05 * noise;
          for (auto &r : tract) s = r(s);
        }
      } else {
        for (auto &r : tract) r(0.0);
      }
      env = pause ? std::max(0.0, env - env_step)
                  : std::min(level, env + env_step);
      out.push_back(env * s);
    }
  }

  // Channel: first-order FIR tilt, then peak normalization and a stationary
  // noise floor well below the speech level.
  double prev = 0.0, peak = 1e-12;
  for (double &x : out) {
    const double y = x + channel_tilt * prev;
    prev = x;
    x = y;
    peak = std::max(peak, std::abs(x));
  }
  Waveform w;
  w.sample_rate_hz = fs;
  w.samples.resize(out.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    w.samples[i] = gain * out[i] / peak + 3e-4 * n(rng);
  return w;
}

}  // namespace

Manifest GenerateSyntheticCorpus(int n_speakers, int utts_per_speaker,
                                 std::uint64_t seed, const fs::path &out_dir,
                                 const SyntheticCorpusOptions &opts) {
  if (n_speakers < 2)
    Fail(ErrorCode::kInvalidInput, "synthetic corpus needs n_speakers >= 2");
  if (utts_per_speaker < 1)
    Fail(ErrorCode::kInvalidInput, "synthetic corpus needs utts_per_speaker >= 1");
  if (!(opts.min_utt_s > 0.0) || opts.max_utt_s < opts.min_utt_s)
    Fail(ErrorCode::kInvalidInput, "synthetic corpus needs 0 < min_utt_s <= max_utt_s");
  fs::create_directories(out_dir / "wav");

  std::vector<std::vector<Utterance>> per_speaker(n_speakers);
  ParallelFor(static_cast<std::size_t>(n_speakers), [&](std::size_t i) {
    char spk[32];
    std::snprintf(spk, sizeof(spk), "spk%04zu", i);
    std::mt19937_64 rng(DeriveSeed(seed, spk));
    const bool male = (i % 2 == 0);
    const SpeakerVoice voice = DrawVoice(rng, male);
    const bool finnish = opts.finnish_every > 0 && i % opts.finnish_every == 0;
    fs::create_directories(out_dir / "wav" / spk);
    std::uniform_real_distribution<double> dur(opts.min_utt_s, opts.max_utt_s);
    for (int k = 0; k < utts_per_speaker; ++k) {
      char utt[48];
      std::snprintf(utt, sizeof(utt), "%s-u%03d", spk, k);
      const double target_s = dur(rng);
      Waveform w = SynthesizeUtterance(voice, rng, opts.sample_rate_hz, target_s);
      const fs::path rel = fs::path("wav") / spk / (std::string(utt) + ".wav");
      WriteWav(out_dir / rel, w);
      Utterance u;
      u.utt_id = utt;
      u.speaker_id = spk;
      u.path = fs::absolute(out_dir / rel);
      u.sample_rate_hz = w.sample_rate_hz;
      u.duration_s = w.duration_s();
      u.language = finnish ? "fi" : "en";
      u.nationality = finnish ? "Finnish" : "English";
      u.style = UttStyle::kNatural;
      u.gender = male ? "M" : "F";
      per_speaker[i].push_back(std::move(u));
    }
  });
  std::vector<Utterance> all;
  for (auto &v : per_speaker)
    for (auto &u : v) all.push_back(std::move(u));
  Manifest m(std::move(all), ManifestRole::kUnspecified);
  SaveManifest(m, out_dir / "manifest.jsonl");
  return m;
}

}  // namespace svak
