// Copyright 2026 The Palmsense Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "palmsense/features.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "palmsense/digest.h"
#include "palmsense/error.h"

namespace palmsense {
namespace {

constexpr double kChromaMinHz = 27.5;

const char* window_name(WindowKind w) {
  switch (w) {
    case WindowKind::kNone:
      return "none";
    case WindowKind::kHamming:
      return "hamming";
    case WindowKind::kHann:
      return "hann";
  }
  return "none";
}

bool is_cepstral(FeatureKind kind) {
  return kind == FeatureKind::kMfcc || kind == FeatureKind::kCqcc ||
         kind == FeatureKind::kBfcc || kind == FeatureKind::kLfcc ||
         kind == FeatureKind::kGfcc;
}

void require_frames(const AudioClip& clip, const ExtractionConfig& cfg) {
  if (clip.size() < cfg.frame_len) {
    throw InputError("clip '" + clip.source_id() + "' has " +
                     std::to_string(clip.size()) +
                     " samples, shorter than one frame of " +
                     std::to_string(cfg.frame_len));
  }
}

FeatureMatrix make_matrix(FeatureKind kind, const AudioClip& clip,
                          const ExtractionConfig& cfg, RealMatrix values) {
  FeatureMatrix m;
  m.values = std::move(values);
  m.kind = kind;
  m.clip_id = clip.source_id();
  m.params_digest = params_digest(kind, cfg);
  return m;
}

// Rows of `m` followed by the rows of its deltas.
FeatureMatrix with_deltas(FeatureMatrix m, int width) {
  if (m.n_frames() < 2) return m;
  const FeatureMatrix d = delta(m, width);
  RealMatrix stacked(m.n_coeffs() * 2, m.n_frames());
  std::copy(m.values.data().begin(), m.values.data().end(),
            stacked.data().begin());
  std::copy(d.values.data().begin(), d.values.data().end(),
            stacked.data().begin() +
                static_cast<std::ptrdiff_t>(m.values.size()));
  m.values = std::move(stacked);
  return m;
}

// Log filterbank energies, n_filters x n_frames.
RealMatrix log_bank_energies(const AudioClip& clip, const ExtractionConfig& cfg,
                             const Filterbank& bank) {
  const RealMatrix power = stft_power(clip, cfg, /*emphasize=*/true);
  RealMatrix out(bank.n_filters(), power.rows());
  for (std::size_t t = 0; t < power.rows(); ++t) {
    const auto energies = bank.apply(power.row(t));
    for (std::size_t i = 0; i < energies.size(); ++i) {
      out(i, t) = std::log(std::max(energies[i], cfg.log_floor));
    }
  }
  return out;
}

// DCT-II down each column of `log_spec`, keeping n_ceps rows.
RealMatrix cepstra_from_log(const RealMatrix& log_spec, std::size_t n_ceps) {
  RealMatrix out(n_ceps, log_spec.cols());
  std::vector<double> column(log_spec.rows());
  for (std::size_t t = 0; t < log_spec.cols(); ++t) {
    for (std::size_t i = 0; i < log_spec.rows(); ++i) column[i] = log_spec(i, t);
    const auto c = dct_ii(column);
    for (std::size_t p = 0; p < n_ceps; ++p) out(p, t) = c[p];
  }
  return out;
}

}  // namespace

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kMfcc:
      return "mfcc";
    case FeatureKind::kCqcc:
      return "cqcc";
    case FeatureKind::kBfcc:
      return "bfcc";
    case FeatureKind::kLfcc:
      return "lfcc";
    case FeatureKind::kGfcc:
      return "gfcc";
    case FeatureKind::kChroma:
      return "chroma";
    case FeatureKind::kMelSpectrogram:
      return "mel_spectrogram";
    case FeatureKind::kSpectralCentroid:
      return "spectral_centroid";
  }
  return "unknown";
}

std::optional<FeatureKind> parse_feature_kind(std::string_view name) {
  for (FeatureKind k : kAllFeatureKinds) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

void ExtractionConfig::validate() const {
  if (frame_len < 2) throw ArgumentError("frame_len must be at least 2");
  if (hop_len < 1) throw ArgumentError("hop_len must be at least 1");
  if (n_fft < frame_len || (n_fft & (n_fft - 1)) != 0) {
    throw ArgumentError("n_fft must be a power of two >= frame_len");
  }
  if (!(pre_emphasis >= 0.0 && pre_emphasis < 1.0)) {
    throw ArgumentError("pre_emphasis must be in [0, 1)");
  }
  if (!(log_floor > 0.0)) throw ArgumentError("log_floor must be positive");
  if (n_ceps < 1) throw ArgumentError("n_ceps must be at least 1");
  const std::size_t k_bins =
      static_cast<std::size_t>(std::max(cqt_bins_per_octave, 0)) *
      static_cast<std::size_t>(std::max(cqt_octaves, 0));
  for (std::size_t n : {n_mel, n_bark, n_linear, n_gammatone, k_bins}) {
    if (n_ceps > n) {
      throw ArgumentError("n_ceps (" + std::to_string(n_ceps) +
                          ") exceeds a filterbank size (" + std::to_string(n) +
                          ")");
    }
  }
  if (delta_width < 1) throw ArgumentError("delta_width must be at least 1");
}

std::string params_digest(FeatureKind kind, const ExtractionConfig& cfg) {
  Digest d;
  d.add("format", "palmsense-features-1").add("kind", std::string(to_string(kind)));
  if (kind == FeatureKind::kCqcc) {
    d.add("cqt_f_min", cfg.cqt_f_min)
        .add("cqt_bins_per_octave", cfg.cqt_bins_per_octave)
        .add("cqt_octaves", cfg.cqt_octaves)
        .add("hop_len", cfg.hop_len)
        .add("log_floor", cfg.log_floor)
        .add("n_ceps", cfg.n_ceps);
  } else {
    d.add("frame_len", cfg.frame_len)
        .add("hop_len", cfg.hop_len)
        .add("n_fft", cfg.n_fft)
        .add("window", window_name(cfg.window));
  }
  switch (kind) {
    case FeatureKind::kMfcc:
    case FeatureKind::kMelSpectrogram:
      d.add("n_mel", cfg.n_mel);
      break;
    case FeatureKind::kBfcc:
      d.add("n_bark", cfg.n_bark)
          .add("bark_variant",
               cfg.bark_variant == BarkVariant::kPaper ? "paper"
                                                       : "traunmueller");
      break;
    case FeatureKind::kLfcc:
      d.add("n_linear", cfg.n_linear);
      break;
    case FeatureKind::kGfcc:
      d.add("n_gammatone", cfg.n_gammatone);
      break;
    default:
      break;
  }
  const bool bank_kind =
      kind == FeatureKind::kMfcc || kind == FeatureKind::kBfcc ||
      kind == FeatureKind::kLfcc || kind == FeatureKind::kGfcc ||
      kind == FeatureKind::kMelSpectrogram;
  if (bank_kind) {
    d.add("pre_emphasis", cfg.pre_emphasis)
        .add("f_min", cfg.f_min)
        .add("f_max", cfg.f_max)
        .add("log_floor", cfg.log_floor);
  }
  if (bank_kind && kind != FeatureKind::kMelSpectrogram) {
    d.add("n_ceps", cfg.n_ceps);
  }
  if (is_cepstral(kind)) {
    d.add("append_deltas", cfg.append_deltas);
    if (cfg.append_deltas) d.add("delta_width", cfg.delta_width);
  }
  return d.hex();
}

RealMatrix stft_power(const AudioClip& clip, const ExtractionConfig& cfg,
                      bool emphasize) {
  require_frames(clip, cfg);
  const AudioClip src = emphasize && cfg.pre_emphasis > 0.0
                            ? pre_emphasize(clip, cfg.pre_emphasis)
                            : clip;
  FrameSequence frames = frame_signal(src, cfg.frame_len, cfg.hop_len);
  if (cfg.window != WindowKind::kNone) frames = apply_window(frames, cfg.window);

  const std::size_t n_bins = cfg.n_fft / 2 + 1;
  RealMatrix power(frames.n_frames(), n_bins);
  for (std::size_t t = 0; t < frames.n_frames(); ++t) {
    const auto p = power_spectrum(
        fft_real(frames.frames.row(t), cfg.n_fft, clip.sample_rate_hz()));
    std::copy(p.begin(), p.end(), power.row(t).begin());
  }
  return power;
}

Filterbank bank_for(FeatureKind kind, const ExtractionConfig& cfg,
                    int sample_rate_hz) {
  switch (kind) {
    case FeatureKind::kMfcc:
    case FeatureKind::kMelSpectrogram:
      return triangular_filterbank(FilterScale::kMel, cfg.n_mel, cfg.n_fft,
                                   sample_rate_hz, cfg.f_min, cfg.f_max);
    case FeatureKind::kBfcc:
      return triangular_filterbank(cfg.bark_variant == BarkVariant::kPaper
                                       ? FilterScale::kBarkPaper
                                       : FilterScale::kBarkTraunmueller,
                                   cfg.n_bark, cfg.n_fft, sample_rate_hz,
                                   cfg.f_min, cfg.f_max);
    case FeatureKind::kLfcc:
      return triangular_filterbank(FilterScale::kLinear, cfg.n_linear,
                                   cfg.n_fft, sample_rate_hz, cfg.f_min,
                                   cfg.f_max);
    case FeatureKind::kGfcc:
      return gammatone_filterbank(cfg.n_gammatone, cfg.n_fft, sample_rate_hz,
                                  cfg.f_min, cfg.f_max);
    default:
      throw ArgumentError("feature kind '" + std::string(to_string(kind)) +
                          "' has no filterbank");
  }
}

FeatureMatrix filterbank_cepstra(const AudioClip& clip,
                                 const ExtractionConfig& cfg,
                                 const Filterbank& bank, FeatureKind kind) {
  if (cfg.n_ceps > bank.n_filters()) {
    throw ArgumentError("n_ceps exceeds the number of filters");
  }
  const RealMatrix log_spec = log_bank_energies(clip, cfg, bank);
  return make_matrix(kind, clip, cfg, cepstra_from_log(log_spec, cfg.n_ceps));
}

FeatureMatrix mfcc(const AudioClip& clip, const ExtractionConfig& cfg) {
  return filterbank_cepstra(
      clip, cfg, bank_for(FeatureKind::kMfcc, cfg, clip.sample_rate_hz()),
      FeatureKind::kMfcc);
}

FeatureMatrix bfcc(const AudioClip& clip, const ExtractionConfig& cfg) {
  return filterbank_cepstra(
      clip, cfg, bank_for(FeatureKind::kBfcc, cfg, clip.sample_rate_hz()),
      FeatureKind::kBfcc);
}

FeatureMatrix lfcc(const AudioClip& clip, const ExtractionConfig& cfg) {
  return filterbank_cepstra(
      clip, cfg, bank_for(FeatureKind::kLfcc, cfg, clip.sample_rate_hz()),
      FeatureKind::kLfcc);
}

FeatureMatrix gfcc(const AudioClip& clip, const ExtractionConfig& cfg) {
  return filterbank_cepstra(
      clip, cfg, bank_for(FeatureKind::kGfcc, cfg, clip.sample_rate_hz()),
      FeatureKind::kGfcc);
}

FeatureMatrix mel_spectrogram(const AudioClip& clip,
                              const ExtractionConfig& cfg) {
  const Filterbank bank =
      bank_for(FeatureKind::kMelSpectrogram, cfg, clip.sample_rate_hz());
  return make_matrix(FeatureKind::kMelSpectrogram, clip, cfg,
                     log_bank_energies(clip, cfg, bank));
}

std::vector<double> uniform_resample(std::span<const double> values,
                                     std::span<const double> positions,
                                     std::size_t count) {
  if (values.size() != positions.size() || values.empty()) {
    throw ArgumentError("resample needs matching, non-empty values/positions");
  }
  if (count == 0) throw ArgumentError("resample count must be positive");
  if (values.size() == 1 || count == 1) {
    return std::vector<double>(count, values.front());
  }
  const double lo = positions.front();
  const double hi = positions.back();
  std::vector<double> out(count);
  std::size_t seg = 0;
  for (std::size_t j = 0; j < count; ++j) {
    if (j == 0) {
      out[j] = values.front();
      continue;
    }
    if (j == count - 1) {
      out[j] = values.back();
      continue;
    }
    const double u =
        lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(count - 1);
    while (seg + 2 < positions.size() && positions[seg + 1] < u) ++seg;
    const double x0 = positions[seg];
    const double x1 = positions[seg + 1];
    const double frac = (u - x0) / (x1 - x0);
    out[j] = values[seg] + frac * (values[seg + 1] - values[seg]);
  }
  return out;
}

FeatureMatrix cqcc(const AudioClip& clip, const ExtractionConfig& cfg) {
  const CqtMatrix spec = cqt(clip, cfg.cqt_f_min, cfg.cqt_bins_per_octave,
                             cfg.cqt_octaves, cfg.hop_len);
  const std::size_t k_bins = spec.n_bins();
  if (cfg.n_ceps > k_bins) {
    throw ArgumentError("n_ceps exceeds the number of CQT bins");
  }
  // The geometric bins are resampled onto a uniform frequency grid with the
  // same number of points before the DCT.
  RealMatrix log_uniform(k_bins, spec.n_frames());
  std::vector<double> column(k_bins);
  for (std::size_t t = 0; t < spec.n_frames(); ++t) {
    for (std::size_t k = 0; k < k_bins; ++k) {
      column[k] = std::log(std::max(std::norm(spec.values(k, t)), cfg.log_floor));
    }
    const auto uniform = uniform_resample(column, spec.bin_freqs_hz, k_bins);
    for (std::size_t k = 0; k < k_bins; ++k) log_uniform(k, t) = uniform[k];
  }
  return make_matrix(FeatureKind::kCqcc, clip, cfg,
                     cepstra_from_log(log_uniform, cfg.n_ceps));
}

int pitch_class(double hz) {
  if (!(hz > 0.0)) throw ArgumentError("pitch class needs a positive frequency");
  const auto semis = static_cast<long>(std::lround(12.0 * std::log2(hz / 440.0)));
  // semis is relative to A; A is index 9 when C is 0.
  return static_cast<int>(((semis + 9) % 12 + 12) % 12);
}

FeatureMatrix chroma(const AudioClip& clip, const ExtractionConfig& cfg) {
  const RealMatrix power = stft_power(clip, cfg, /*emphasize=*/false);
  const std::size_t n_bins = power.cols();
  std::vector<int> bin_class(n_bins, -1);
  for (std::size_t b = 1; b < n_bins; ++b) {
    const double f = static_cast<double>(b) * clip.sample_rate_hz() /
                     static_cast<double>(cfg.n_fft);
    if (f > kChromaMinHz) bin_class[b] = pitch_class(f);
  }
  RealMatrix out(12, power.rows(), 0.0);
  for (std::size_t t = 0; t < power.rows(); ++t) {
    for (std::size_t b = 0; b < n_bins; ++b) {
      if (bin_class[b] >= 0) {
        out(static_cast<std::size_t>(bin_class[b]), t) += power(t, b);
      }
    }
    double peak = 0.0;
    for (std::size_t c = 0; c < 12; ++c) peak = std::max(peak, out(c, t));
    if (peak > 0.0) {
      for (std::size_t c = 0; c < 12; ++c) out(c, t) /= peak;
    }
  }
  return make_matrix(FeatureKind::kChroma, clip, cfg, std::move(out));
}

FeatureMatrix spectral_centroid(const AudioClip& clip,
                                const ExtractionConfig& cfg) {
  const RealMatrix power = stft_power(clip, cfg, /*emphasize=*/false);
  RealMatrix out(1, power.rows(), 0.0);
  for (std::size_t t = 0; t < power.rows(); ++t) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t b = 0; b < power.cols(); ++b) {
      const double f = static_cast<double>(b) * clip.sample_rate_hz() /
                       static_cast<double>(cfg.n_fft);
      num += f * power(t, b);
      den += power(t, b);
    }
    out(0, t) = den > 0.0 ? num / den : 0.0;
  }
  return make_matrix(FeatureKind::kSpectralCentroid, clip, cfg, std::move(out));
}

FeatureMatrix delta(const FeatureMatrix& m, int width) {
  if (width < 1) throw ArgumentError("delta width must be at least 1");
  const std::size_t n_frames = m.n_frames();
  if (n_frames < 2) throw InputError("delta needs at least two frames");

  double norm = 0.0;
  for (int n = 1; n <= width; ++n) norm += static_cast<double>(n * n);
  norm *= 2.0;

  FeatureMatrix out = m;
  const auto last = static_cast<std::ptrdiff_t>(n_frames) - 1;
  for (std::size_t i = 0; i < m.n_coeffs(); ++i) {
    for (std::size_t t = 0; t < n_frames; ++t) {
      double acc = 0.0;
      for (int n = 1; n <= width; ++n) {
        const auto ahead = static_cast<std::size_t>(
            std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(t) + n, last));
        const auto behind = static_cast<std::size_t>(
            std::max<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(t) - n, 0));
        acc += n * (m.values(i, ahead) - m.values(i, behind));
      }
      out.values(i, t) = acc / norm;
    }
  }
  return out;
}

FeatureMatrix extract(FeatureKind kind, const AudioClip& clip,
                      const ExtractionConfig& cfg) {
  cfg.validate();
  FeatureMatrix m;
  switch (kind) {
    case FeatureKind::kMfcc:
      m = mfcc(clip, cfg);
      break;
    case FeatureKind::kCqcc:
      m = cqcc(clip, cfg);
      break;
    case FeatureKind::kBfcc:
      m = bfcc(clip, cfg);
      break;
    case FeatureKind::kLfcc:
      m = lfcc(clip, cfg);
      break;
    case FeatureKind::kGfcc:
      m = gfcc(clip, cfg);
      break;
    case FeatureKind::kChroma:
      m = chroma(clip, cfg);
      break;
    case FeatureKind::kMelSpectrogram:
      m = mel_spectrogram(clip, cfg);
      break;
    case FeatureKind::kSpectralCentroid:
      m = spectral_centroid(clip, cfg);
      break;
  }
  if (cfg.append_deltas && is_cepstral(kind)) {
    m = with_deltas(std::move(m), cfg.delta_width);
  }
  return m;
}

void write_csv(const FeatureMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  char buf[40];
  for (std::size_t r = 0; r < m.n_coeffs(); ++r) {
    for (std::size_t c = 0; c < m.n_frames(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", m.values(r, c));
      if (c > 0) out << ',';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace palmsense
