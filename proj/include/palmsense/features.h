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

// Feature extractors. Every extractor maps an AudioClip to a coefficients x
// frames FeatureMatrix and is a pure function of (clip, config).

#ifndef PALMSENSE_FEATURES_H_
#define PALMSENSE_FEATURES_H_

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "palmsense/audio_io.h"
#include "palmsense/dsp.h"
#include "palmsense/matrix.h"

namespace palmsense {

enum class FeatureKind {
  kMfcc,
  kCqcc,
  kBfcc,
  kLfcc,
  kGfcc,
  kChroma,
  kMelSpectrogram,
  kSpectralCentroid,
};

inline constexpr std::array<FeatureKind, 8> kAllFeatureKinds = {
    FeatureKind::kMfcc,   FeatureKind::kCqcc,
    FeatureKind::kBfcc,   FeatureKind::kLfcc,
    FeatureKind::kGfcc,   FeatureKind::kChroma,
    FeatureKind::kMelSpectrogram, FeatureKind::kSpectralCentroid,
};

std::string_view to_string(FeatureKind kind);
// Lowercase identifiers: mfcc, cqcc, bfcc, lfcc, gfcc, chroma,
// mel_spectrogram, spectral_centroid.
std::optional<FeatureKind> parse_feature_kind(std::string_view name);

struct ExtractionConfig {
  std::size_t frame_len = 400;  // 25 ms at 16 kHz
  std::size_t hop_len = 160;    // 10 ms
  std::size_t n_fft = 512;
  WindowKind window = WindowKind::kHamming;
  double pre_emphasis = 0.97;

  std::size_t n_mel = 40;
  std::size_t n_bark = 40;
  std::size_t n_linear = 40;
  std::size_t n_gammatone = 26;
  std::size_t n_ceps = 20;
  double f_min = 20.0;
  double f_max = 7600.0;
  BarkVariant bark_variant = BarkVariant::kPaper;

  double cqt_f_min = 32.7;
  int cqt_bins_per_octave = 12;
  int cqt_octaves = 7;

  double log_floor = 1e-10;

  bool append_deltas = false;
  int delta_width = 2;

  // Throws ArgumentError when a field is out of range.
  void validate() const;
};

struct FeatureMatrix {
  RealMatrix values;  // n_coeffs x n_frames
  FeatureKind kind = FeatureKind::kMfcc;
  std::string clip_id;
  std::string params_digest;

  std::size_t n_coeffs() const { return values.rows(); }
  std::size_t n_frames() const { return values.cols(); }
};

// Stable hash of every config field `kind` reads.
std::string params_digest(FeatureKind kind, const ExtractionConfig& cfg);

// |DFT|^2 of each windowed frame, n_frames x (n_fft / 2 + 1). Pre-emphasis
// from cfg is applied first when `emphasize` is set.
RealMatrix stft_power(const AudioClip& clip, const ExtractionConfig& cfg,
                      bool emphasize);

// The cepstral pipeline shared by mfcc/bfcc/lfcc/gfcc: pre-emphasis,
// framing, windowing, power spectrum, bank, log with floor, DCT-II, first
// n_ceps coefficients.
FeatureMatrix filterbank_cepstra(const AudioClip& clip,
                                 const ExtractionConfig& cfg,
                                 const Filterbank& bank, FeatureKind kind);

Filterbank bank_for(FeatureKind kind, const ExtractionConfig& cfg,
                    int sample_rate_hz);

FeatureMatrix mfcc(const AudioClip& clip, const ExtractionConfig& cfg);
FeatureMatrix cqcc(const AudioClip& clip, const ExtractionConfig& cfg);
FeatureMatrix bfcc(const AudioClip& clip, const ExtractionConfig& cfg);
FeatureMatrix lfcc(const AudioClip& clip, const ExtractionConfig& cfg);
FeatureMatrix gfcc(const AudioClip& clip, const ExtractionConfig& cfg);
FeatureMatrix chroma(const AudioClip& clip, const ExtractionConfig& cfg);
FeatureMatrix mel_spectrogram(const AudioClip& clip,
                              const ExtractionConfig& cfg);
FeatureMatrix spectral_centroid(const AudioClip& clip,
                                const ExtractionConfig& cfg);

// Piecewise-linear interpolation of values sampled at increasing
// `positions` onto `count` equally spaced points from positions.front() to
// positions.back(). Endpoints are copied exactly.
std::vector<double> uniform_resample(std::span<const double> values,
                                     std::span<const double> positions,
                                     std::size_t count);

// Chroma index (C = 0 ... B = 11) of frequency hz.
int pitch_class(double hz);

// Regression deltas over +-width frames with edge replication.
FeatureMatrix delta(const FeatureMatrix& m, int width);

FeatureMatrix extract(FeatureKind kind, const AudioClip& clip,
                      const ExtractionConfig& cfg);

// Row-major CSV, 17 significant digits.
void write_csv(const FeatureMatrix& m, const std::filesystem::path& path);

}  // namespace palmsense

#endif  // PALMSENSE_FEATURES_H_
