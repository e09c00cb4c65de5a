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

// Shared transforms and filterbanks: real FFT, orthonormal DCT-II/III,
// perceptual frequency scales, triangular and gammatone banks, and the
// constant-Q transform.

#ifndef PALMSENSE_DSP_H_
#define PALMSENSE_DSP_H_

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "palmsense/audio_io.h"
#include "palmsense/matrix.h"

namespace palmsense {

struct ComplexSpectrum {
  std::vector<std::complex<double>> bins;  // n_fft / 2 + 1
  std::size_t n_fft = 0;
  int sample_rate_hz = 0;

  double bin_frequency(std::size_t b) const {
    return static_cast<double>(b) * sample_rate_hz / static_cast<double>(n_fft);
  }
};

// One-sided DFT of `frame` zero-padded to n_fft (a power of two).
ComplexSpectrum fft_real(std::span<const double> frame, std::size_t n_fft,
                         int sample_rate_hz = kCanonicalSampleRateHz);

std::vector<double> power_spectrum(const ComplexSpectrum& spec);

// Orthonormal DCT-II: C(p) = s(p) sum_l v(l) cos(pi p (l + 1/2) / L) with
// s(0) = sqrt(1/L) and s(p > 0) = sqrt(2/L). dct_iii is its inverse.
std::vector<double> dct_ii(std::span<const double> v);
std::vector<double> dct_iii(std::span<const double> v);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

enum class BarkVariant {
  kPaper,         // cubic polynomial in kHz
  kTraunmueller,  // 26.81 f / (1960 + f) - 0.53, clamped at 0
};

double hz_to_bark(double hz, BarkVariant variant);
// Inverse of hz_to_bark on its monotone range.
double bark_to_hz(double bark, BarkVariant variant);

// Glasberg & Moore ERB-rate and bandwidth.
double hz_to_erb_rate(double hz);
double erb_rate_to_hz(double erb);
double erb_bandwidth(double hz);

enum class FilterScale {
  kMel,
  kBarkPaper,
  kBarkTraunmueller,
  kLinear,
  kGammatone,
};

std::string_view to_string(FilterScale scale);

struct Filterbank {
  RealMatrix weights;  // n_filters x (n_fft / 2 + 1), non-negative
  std::vector<double> centers_hz;
  FilterScale scale = FilterScale::kMel;

  std::size_t n_filters() const { return weights.rows(); }

  // weights * power for one spectrum.
  std::vector<double> apply(std::span<const double> power) const;
};

// n_filters + 2 break points equally spaced on `scale` between f_min and
// f_max, rounded to the nearest FFT bin; filter i is the unit-apex triangle
// over break points i, i+1, i+2. Gammatone is rejected here.
Filterbank triangular_filterbank(FilterScale scale, std::size_t n_filters,
                                 std::size_t n_fft, int sample_rate_hz,
                                 double f_min, double f_max);

// Sampled 4th-order gammatone magnitude responses, centers equally spaced
// in ERB-rate over [f_min, f_max], each row peak-normalized to 1.
Filterbank gammatone_filterbank(std::size_t n_filters, std::size_t n_fft,
                                int sample_rate_hz, double f_min, double f_max);

struct CqtMatrix {
  Matrix<std::complex<double>> values;  // K bins x n_frames
  std::vector<double> bin_freqs_hz;     // f_k = f_min 2^(k / n)
  std::vector<double> bandwidths_hz;    // delta f_k = f_k (2^(1/n) - 1)
  std::vector<std::size_t> window_lengths;  // N_k
  int bins_per_octave = 0;
  double q_factor = 0.0;
  std::size_t hop_len = 0;
  int sample_rate_hz = 0;

  std::size_t n_bins() const { return values.rows(); }
  std::size_t n_frames() const { return values.cols(); }

  // Throws StateError if constant Q, geometric spacing or window-length
  // ordering does not hold.
  void check_invariants() const;
};

double cqt_q_factor(int bins_per_octave);

// Constant-Q transform by direct inner products. Frame t is centered on
// sample t * hop_len for every t with t * hop_len < N; samples outside the
// clip read as zero. The basis of bin k is a periodic-Hann envelope times a
// zero-phase complex exponential at f_k, normalized by the sum of its
// envelope taps.
CqtMatrix cqt(const AudioClip& clip, double f_min, int bins_per_octave,
              int n_octaves, std::size_t hop_len);

}  // namespace palmsense

#endif  // PALMSENSE_DSP_H_
