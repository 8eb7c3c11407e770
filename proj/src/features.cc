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

#include "svak/features.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>

namespace svak {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLogFloor = 1e-10;
constexpr double kVarianceGuard = 1e-10;

// FFTW plans are created once per size; plan creation is not thread-safe but
// fftw_execute_dft_r2c on a shared plan is.
class RealFft {
 public:
  static const RealFft &ForSize(int n) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<RealFft>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto &slot = cache[n];
    if (!slot) slot.reset(new RealFft(n));
    return *slot;
  }

  // power[k] = |X_k|^2 for k = 0..n/2. `in` is overwritten by FFTW only for
  // in-place transforms, which we do not use.
  void PowerSpectrum(std::vector<double> &in, std::vector<double> &power) const {
    std::vector<fftw_complex> out(n_ / 2 + 1);
    fftw_execute_dft_r2c(plan_, in.data(), out.data());
    power.resize(n_ / 2 + 1);
    for (int k = 0; k <= n_ / 2; ++k)
      power[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
  }

  ~RealFft() { fftw_destroy_plan(plan_); }

 private:
  explicit RealFft(int n) : n_(n) {
    std::vector<double> in(n);
    std::vector<fftw_complex> out(n / 2 + 1);
    plan_ = fftw_plan_dft_r2c_1d(n, in.data(), out.data(),
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
  }

  int n_;
  fftw_plan plan_;
};

// Triangular filters (in the mel domain) sampled on the FFT bin grid, M x
// (n_fft/2+1).
Matrix MelFilterbank(int n_filters, int n_fft, int fs) {
  const int nbins = n_fft / 2 + 1;
  const double mel_hi = HzToMel(fs / 2.0);
  std::vector<double> edges(n_filters + 2);
  for (int i = 0; i < n_filters + 2; ++i)
    edges[i] = mel_hi * i / (n_filters + 1);
  Matrix fb = Matrix::Zero(n_filters, nbins);
  for (int b = 0; b < nbins; ++b) {
    const double mel = HzToMel(static_cast<double>(b) * fs / n_fft);
    for (int m = 0; m < n_filters; ++m) {
      const double lo = edges[m], c = edges[m + 1], hi = edges[m + 2];
      if (mel > lo && mel < hi)
        fb(m, b) = mel <= c ? (mel - lo) / (c - lo) : (hi - mel) / (hi - c);
    }
  }
  return fb;
}

void CheckFinite(const Matrix &m, const char *what) {
  if (!m.allFinite())
    Fail(ErrorCode::kNumerical, std::string("non-finite values in ") + what);
}

}  // namespace

// ---------------------------------------------------------------- config

int FeatureConfig::frame_len() const {
  return static_cast<int>(std::lround(frame_len_ms * sample_rate_hz / 1000.0));
}
int FeatureConfig::frame_hop() const {
  return static_cast<int>(std::lround(frame_hop_ms * sample_rate_hz / 1000.0));
}

void FeatureConfig::Validate() const {
  auto bad = [&](const std::string &why) {
    Fail(ErrorCode::kInvalidInput, "feature config '" + name + "': " + why);
  };
  if (sample_rate_hz <= 0) bad("sample_rate_hz must be positive");
  if (frame_len() < 2 || frame_hop() < 1) bad("frame too short");
  if (frame_hop_ms > frame_len_ms) bad("frame_hop_ms > frame_len_ms");
  if (n_fft < frame_len()) bad("n_fft shorter than the frame");
  if (n_mel_filters < 1 || n_cepstra < 1) bad("empty filterbank or cepstra");
  if (n_cepstra > n_mel_filters) bad("n_cepstra > n_mel_filters");
  if (use_deltas && delta_window < 1) bad("delta_window must be >= 1");
  if (norm == NormKind::kSlidingCmn && sliding_window_frames < 1)
    bad("sliding_window_frames must be >= 1");
}

std::uint64_t FeatureConfig::Fingerprint() const {
  svak::Fingerprint f;
  f.Add(std::string_view(name));
  f.Add(std::int64_t{sample_rate_hz});
  f.Add(frame_len_ms);
  f.Add(frame_hop_ms);
  f.Add(std::int64_t{n_fft});
  f.Add(std::int64_t{n_mel_filters});
  f.Add(std::int64_t{n_cepstra});
  f.Add(preemph);
  f.Add(std::int64_t{use_deltas});
  f.Add(std::int64_t{delta_window});
  f.Add(std::int64_t{use_rasta});
  f.Add(static_cast<std::int64_t>(norm));
  f.Add(std::int64_t{sliding_window_frames});
  f.Add(vad.dynamic_range_db);
  f.Add(vad.abs_floor_db);
  return f.value();
}

void FeatureConfig::Write(ArchiveWriter &w) const {
  w.WriteString(name);
  w.WriteI64(sample_rate_hz);
  w.WriteF64(frame_len_ms);
  w.WriteF64(frame_hop_ms);
  w.WriteI64(n_fft);
  w.WriteI64(n_mel_filters);
  w.WriteI64(n_cepstra);
  w.WriteF64(preemph);
  w.WriteI64(use_deltas);
  w.WriteI64(delta_window);
  w.WriteI64(use_rasta);
  w.WriteI64(static_cast<std::int64_t>(norm));
  w.WriteI64(sliding_window_frames);
  w.WriteF64(vad.dynamic_range_db);
  w.WriteF64(vad.abs_floor_db);
}

FeatureConfig FeatureConfig::Read(ArchiveReader &r) {
  FeatureConfig c;
  c.name = r.ReadString();
  c.sample_rate_hz = static_cast<int>(r.ReadI64());
  c.frame_len_ms = r.ReadF64();
  c.frame_hop_ms = r.ReadF64();
  c.n_fft = static_cast<int>(r.ReadI64());
  c.n_mel_filters = static_cast<int>(r.ReadI64());
  c.n_cepstra = static_cast<int>(r.ReadI64());
  c.preemph = r.ReadF64();
  c.use_deltas = r.ReadI64() != 0;
  c.delta_window = static_cast<int>(r.ReadI64());
  c.use_rasta = r.ReadI64() != 0;
  c.norm = static_cast<NormKind>(r.ReadI64());
  c.sliding_window_frames = static_cast<int>(r.ReadI64());
  c.vad.dynamic_range_db = r.ReadF64();
  c.vad.abs_floor_db = r.ReadF64();
  c.Validate();
  return c;
}

FeatureConfig FeatureProfile(const std::string &name) {
  FeatureConfig c;
  c.name = name;
  if (name == "attacker") {
    return c;
  } else if (name == "attacked1") {
    c.n_mel_filters = 30;
    c.n_cepstra = 30;
    c.use_deltas = false;
    c.use_rasta = false;
    c.norm = NormKind::kSlidingCmn;
    return c;
  } else if (name == "attacked2") {
    c.sample_rate_hz = 8000;
    c.n_fft = 256;
    c.n_mel_filters = 23;
    c.n_cepstra = 23;
    c.use_deltas = false;
    c.use_rasta = false;
    c.norm = NormKind::kSlidingCmn;
    return c;
  }
  Fail(ErrorCode::kInvalidInput, "unknown feature profile '" + name + "'");
}

std::vector<std::string> FeatureProfileNames() {
  return {"attacker", "attacked1", "attacked2"};
}

void FeatureMatrix::Write(ArchiveWriter &w) const {
  w.WriteU64(config_fingerprint);
  w.WriteMatrix(frames);
  w.WriteU64(vad_mask.size());
  for (bool b : vad_mask) w.WriteU64(b ? 1 : 0);
}

FeatureMatrix FeatureMatrix::Read(ArchiveReader &r) {
  FeatureMatrix f;
  f.config_fingerprint = r.ReadU64();
  f.frames = r.ReadMatrix();
  const std::uint64_t n = r.ReadU64();
  f.vad_mask.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) f.vad_mask.push_back(r.ReadU64() != 0);
  return f;
}

// ---------------------------------------------------------------- ops

int NumFrames(std::size_t num_samples, int frame_len, int frame_hop) {
  if (num_samples < static_cast<std::size_t>(frame_len)) return 0;
  return static_cast<int>((num_samples - frame_len) / frame_hop) + 1;
}

Waveform Resample(const Waveform &in, int target_rate_hz) {
  const int fi = in.sample_rate_hz;
  const int fo = target_rate_hz;
  if (fi <= 0 || fo <= 0)
    Fail(ErrorCode::kInvalidInput, "sample rates must be positive");
  if (fo == fi) return in;
  if (fo > fi)
    Fail(ErrorCode::kInvalidInput, "upsampling from " + std::to_string(fi) +
                                       " to " + std::to_string(fo) +
                                       " Hz is not supported");
  constexpr double kNumZeros = 32.0;
  const double cutoff = 0.95 * 0.5 * fo;
  const double half_width = kNumZeros / (2.0 * cutoff);  // seconds
  const int g = std::gcd(fi, fo);
  const int out_period = fo / g;  // outputs per period
  const int in_period = fi / g;   // inputs per period

  struct Phase {
    long first = 0;  // input offset relative to the period base
    std::vector<double> weights;
  };
  std::vector<Phase> phases(out_period);
  for (int p = 0; p < out_period; ++p) {
    const double t = static_cast<double>(p) / fo;
    const long lo = static_cast<long>(std::ceil((t - half_width) * fi));
    const long hi = static_cast<long>(std::floor((t + half_width) * fi));
    phases[p].first = lo;
    for (long j = lo; j <= hi; ++j) {
      const double d = t - static_cast<double>(j) / fi;
      double w = 0.0;
      if (std::abs(d) < half_width) {
        const double win = 0.5 * (1.0 + std::cos(kPi * d / half_width));
        const double sinc = d == 0.0 ? 2.0 * cutoff
                                     : std::sin(2.0 * kPi * cutoff * d) / (kPi * d);
        w = win * sinc / fi;
      }
      phases[p].weights.push_back(w);
    }
  }

  const auto n_in = static_cast<long>(in.samples.size());
  const long n_out = static_cast<long>(
      (static_cast<long long>(n_in) * fo) / fi);
  Waveform out;
  out.sample_rate_hz = fo;
  out.samples.assign(static_cast<std::size_t>(n_out), 0.0);
  for (long n = 0; n < n_out; ++n) {
    const Phase &ph = phases[n % out_period];
    const long base = (n / out_period) * in_period + ph.first;
    double acc = 0.0;
    for (std::size_t k = 0; k < ph.weights.size(); ++k) {
      const long j = base + static_cast<long>(k);
      if (j >= 0 && j < n_in) acc += ph.weights[k] * in.samples[j];
    }
    out.samples[n] = acc;
  }
  return out;
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> MelFilterCenters(int n_filters, int sample_rate_hz) {
  const double mel_hi = HzToMel(sample_rate_hz / 2.0);
  std::vector<double> c(n_filters);
  for (int m = 0; m < n_filters; ++m)
    c[m] = MelToHz(mel_hi * (m + 1) / (n_filters + 1));
  return c;
}

Matrix ComputeLogFbank(const Waveform &wave, const FeatureConfig &config) {
  config.Validate();
  if (wave.sample_rate_hz != config.sample_rate_hz)
    Fail(ErrorCode::kInvalidInput,
         "waveform rate " + std::to_string(wave.sample_rate_hz) +
             " Hz does not match config rate " +
             std::to_string(config.sample_rate_hz) + " Hz");
  const int len = config.frame_len();
  const int hop = config.frame_hop();
  const int T = NumFrames(wave.samples.size(), len, hop);
  if (T < 1)
    Fail(ErrorCode::kInvalidInput, "waveform shorter than one frame");

  const Matrix fb = MelFilterbank(config.n_mel_filters, config.n_fft,
                                  config.sample_rate_hz);
  std::vector<double> window(len);
  for (int i = 0; i < len; ++i)
    window[i] = 0.54 - 0.46 * std::cos(2.0 * kPi * i / (len - 1));
  const RealFft &fft = RealFft::ForSize(config.n_fft);

  Matrix out(T, config.n_mel_filters);
  std::vector<double> buf(config.n_fft), power;
  Vector pw(config.n_fft / 2 + 1);
  for (int t = 0; t < T; ++t) {
    const double *x = wave.samples.data() + static_cast<std::size_t>(t) * hop;
    std::fill(buf.begin(), buf.end(), 0.0);
    for (int i = len - 1; i > 0; --i)
      buf[i] = (x[i] - config.preemph * x[i - 1]) * window[i];
    buf[0] = (x[0] - config.preemph * x[0]) * window[0];
    fft.PowerSpectrum(buf, power);
    pw = Eigen::Map<const Vector>(power.data(), static_cast<Eigen::Index>(power.size()));
    Vector e = fb * pw;
    for (int m = 0; m < config.n_mel_filters; ++m)
      out(t, m) = std::log(std::max(e(m), kLogFloor));
  }
  return out;
}

FeatureMatrix ComputeMfcc(const Waveform &wave, const FeatureConfig &config) {
  const Matrix logfb = ComputeLogFbank(wave, config);
  const int M = config.n_mel_filters;
  Matrix dct(M, config.n_cepstra);
  const double scale = std::sqrt(2.0 / M);
  for (int m = 0; m < M; ++m)
    for (int i = 0; i < config.n_cepstra; ++i)
      dct(m, i) = scale * std::cos(kPi * i * (m + 0.5) / M);
  FeatureMatrix f;
  f.frames = logfb * dct;
  f.config_fingerprint = config.Fingerprint();
  return f;
}

FeatureMatrix AppendDeltas(const FeatureMatrix &features, int delta_window) {
  const Eigen::Index T = features.num_frames();
  const Eigen::Index D = features.dim();
  if (delta_window < 1)
    Fail(ErrorCode::kInvalidInput, "delta window must be >= 1");
  if (T < 2 * delta_window + 1)
    Fail(ErrorCode::kInvalidInput,
         "need at least " + std::to_string(2 * delta_window + 1) +
             " frames for deltas, got " + std::to_string(T));
  double denom = 0.0;
  for (int n = 1; n <= delta_window; ++n) denom += 2.0 * n * n;

  auto regress = [&](const Matrix &x) {
    Matrix d = Matrix::Zero(T, D);
    for (Eigen::Index t = 0; t < T; ++t) {
      for (int n = 1; n <= delta_window; ++n) {
        const Eigen::Index fwd = std::min<Eigen::Index>(t + n, T - 1);
        const Eigen::Index back = std::max<Eigen::Index>(t - n, 0);
        d.row(t) += n * (x.row(fwd) - x.row(back));
      }
    }
    return Matrix(d / denom);
  };
  const Matrix d1 = regress(features.frames);
  const Matrix d2 = regress(d1);
  FeatureMatrix out;
  out.frames.resize(T, 3 * D);
  out.frames << features.frames, d1, d2;
  out.config_fingerprint = features.config_fingerprint;
  out.vad_mask = features.vad_mask;
  return out;
}

FeatureMatrix RastaFilter(const FeatureMatrix &features) {
  static constexpr double kNum[5] = {0.2, 0.1, 0.0, -0.1, -0.2};
  static constexpr double kPole = 0.94;
  const Eigen::Index T = features.num_frames();
  FeatureMatrix out = features;
  for (Eigen::Index d = 0; d < features.dim(); ++d) {
    double prev = 0.0;
    for (Eigen::Index t = 0; t < T; ++t) {
      double y = kPole * prev;
      for (int k = 0; k < 5; ++k)
        if (t - k >= 0) y += kNum[k] * features.frames(t - k, d);
      out.frames(t, d) = y;
      prev = y;
    }
  }
  return out;
}

std::vector<double> FrameLogEnergyDb(const Waveform &wave,
                                     const FeatureConfig &config) {
  const int len = config.frame_len();
  const int hop = config.frame_hop();
  const int T = NumFrames(wave.samples.size(), len, hop);
  std::vector<double> e(T);
  for (int t = 0; t < T; ++t) {
    const double *x = wave.samples.data() + static_cast<std::size_t>(t) * hop;
    double ss = 0.0;
    for (int i = 0; i < len; ++i) ss += x[i] * x[i];
    e[t] = 10.0 * std::log10(ss / len + 1e-30);
  }
  return e;
}

std::vector<bool> EnergyVad(const Waveform &wave, const FeatureConfig &config) {
  const std::vector<double> e = FrameLogEnergyDb(wave, config);
  std::vector<bool> mask(e.size(), false);
  if (e.empty()) return mask;
  const double emax = *std::max_element(e.begin(), e.end());
  const double thr =
      std::max(emax - config.vad.dynamic_range_db, config.vad.abs_floor_db);
  for (std::size_t t = 0; t < e.size(); ++t) mask[t] = e[t] > thr;
  return mask;
}

FeatureMatrix Cmvn(const FeatureMatrix &features, const std::vector<bool> &mask) {
  const Eigen::Index T = features.num_frames();
  const Eigen::Index D = features.dim();
  if (!mask.empty() && static_cast<Eigen::Index>(mask.size()) != T)
    Fail(ErrorCode::kDimensionMismatch, "CMVN mask length != frame count");
  Vector sum = Vector::Zero(D);
  Eigen::Index n = 0;
  for (Eigen::Index t = 0; t < T; ++t) {
    if (!mask.empty() && !mask[t]) continue;
    sum += features.frames.row(t).transpose();
    ++n;
  }
  if (n < 2)
    Fail(ErrorCode::kNoData, "CMVN needs at least 2 retained frames, got " +
                                 std::to_string(n));
  const Vector mean = sum / static_cast<double>(n);
  Vector var = Vector::Zero(D);
  for (Eigen::Index t = 0; t < T; ++t) {
    if (!mask.empty() && !mask[t]) continue;
    var += (features.frames.row(t).transpose() - mean).cwiseAbs2();
  }
  var /= static_cast<double>(n);
  Vector inv_std(D);
  for (Eigen::Index d = 0; d < D; ++d)
    inv_std(d) = var(d) < kVarianceGuard ? 1.0 : 1.0 / std::sqrt(var(d));
  FeatureMatrix out = features;
  for (Eigen::Index t = 0; t < T; ++t)
    out.frames.row(t) =
        (features.frames.row(t) - mean.transpose()).cwiseProduct(inv_std.transpose());
  return out;
}

FeatureMatrix SlidingCmn(const FeatureMatrix &features, int window_frames) {
  if (window_frames < 1)
    Fail(ErrorCode::kInvalidInput, "sliding CMN window must be >= 1");
  const Eigen::Index T = features.num_frames();
  FeatureMatrix out = features;
  for (Eigen::Index t = 0; t < T; ++t) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, t - window_frames / 2);
    const Eigen::Index hi =
        std::min<Eigen::Index>(T - 1, t - window_frames / 2 + window_frames - 1);
    const Eigen::RowVectorXd mean =
        features.frames.middleRows(lo, hi - lo + 1).colwise().mean();
    out.frames.row(t) = features.frames.row(t) - mean;
  }
  return out;
}

FeatureMatrix ExtractFeatures(const Waveform &wave, const FeatureConfig &config) {
  config.Validate();
  const Waveform w = Resample(wave, config.sample_rate_hz);
  FeatureMatrix f = ComputeMfcc(w, config);
  if (config.use_rasta) f = RastaFilter(f);
  if (config.use_deltas) f = AppendDeltas(f, config.delta_window);
  const std::vector<bool> mask = EnergyVad(w, config);

  std::vector<Eigen::Index> keep;
  for (std::size_t t = 0; t < mask.size(); ++t)
    if (mask[t]) keep.push_back(static_cast<Eigen::Index>(t));
  if (keep.empty()) Fail(ErrorCode::kNoData, "no voiced frames");

  FeatureMatrix voiced;
  voiced.config_fingerprint = config.Fingerprint();
  voiced.frames = f.frames(keep, Eigen::all);
  if (config.norm == NormKind::kCmvnUtterance)
    voiced = Cmvn(voiced);
  else
    voiced = SlidingCmn(voiced, config.sliding_window_frames);
  voiced.vad_mask = mask;
  CheckFinite(voiced.frames, "features");
  return voiced;
}

FeatureMatrix ExtractFeatures(const Utterance &utt, const FeatureConfig &config) {
  return ExtractFeatures(ReadAudio(utt.path), config);
}

}  // namespace svak
