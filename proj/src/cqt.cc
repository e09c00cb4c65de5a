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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "palmsense/dsp.h"
#include "palmsense/error.h"

namespace palmsense {
namespace {

// Conjugated basis of one bin, split into real and imaginary taps for the
// inner loop. Tap index i corresponds to offset l = i - half from the frame
// center.
struct BinKernel {
  std::vector<double> re;
  std::vector<double> im;
  std::ptrdiff_t half = 0;
};

BinKernel make_kernel(double f_k, std::size_t n_k, int fs) {
  const auto half = static_cast<std::ptrdiff_t>(n_k / 2);
  const double n_k_d = static_cast<double>(n_k);
  const double centre = n_k_d / 2.0;
  const std::size_t taps = static_cast<std::size_t>(2 * half + 1);

  auto envelope = [&](double x) {
    return 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * x);
  };

  double c = 0.0;
  for (std::ptrdiff_t l = -half; l <= half; ++l) {
    c += envelope((static_cast<double>(l) + centre) / n_k_d);
  }

  BinKernel kernel;
  kernel.half = half;
  kernel.re.resize(taps);
  kernel.im.resize(taps);
  for (std::ptrdiff_t l = -half; l <= half; ++l) {
    const double m = static_cast<double>(l) + centre;
    const double amp = envelope(m / n_k_d) / c;
    const double phase = 2.0 * std::numbers::pi * m * f_k / fs;
    const auto i = static_cast<std::size_t>(l + half);
    kernel.re[i] = amp * std::cos(phase);
    kernel.im[i] = -amp * std::sin(phase);
  }
  return kernel;
}

}  // namespace

double cqt_q_factor(int bins_per_octave) {
  if (bins_per_octave < 1) throw ArgumentError("bins_per_octave must be >= 1");
  return 1.0 / (std::exp2(1.0 / bins_per_octave) - 1.0);
}

void CqtMatrix::check_invariants() const {
  const std::size_t k_bins = bin_freqs_hz.size();
  if (k_bins == 0 || bandwidths_hz.size() != k_bins ||
      window_lengths.size() != k_bins) {
    throw StateError("CQT bin metadata is inconsistent");
  }
  const double f_min = bin_freqs_hz[0];
  for (std::size_t k = 0; k < k_bins; ++k) {
    const double expected =
        f_min * std::exp2(static_cast<double>(k) / bins_per_octave);
    if (bin_freqs_hz[k] != expected) {
      throw StateError("CQT bins are not geometrically spaced");
    }
    const double q = bin_freqs_hz[k] / bandwidths_hz[k];
    if (std::abs(q - q_factor) > 1e-9 * q_factor) {
      throw StateError("CQT Q factor is not constant across bins");
    }
    if (k > 0 && window_lengths[k] > window_lengths[k - 1]) {
      throw StateError("CQT window lengths increase with frequency");
    }
  }
}

CqtMatrix cqt(const AudioClip& clip, double f_min, int bins_per_octave,
              int n_octaves, std::size_t hop_len) {
  if (!(f_min > 0.0)) throw ArgumentError("CQT f_min must be positive");
  if (bins_per_octave < 1) throw ArgumentError("bins_per_octave must be >= 1");
  if (n_octaves < 1) throw ArgumentError("n_octaves must be >= 1");
  if (hop_len < 1) throw ArgumentError("hop length must be at least 1");
  const int fs = clip.sample_rate_hz();
  if (f_min * std::exp2(n_octaves) > fs / 2.0) {
    throw ArgumentError("CQT range f_min * 2^n_octaves exceeds Nyquist");
  }

  const std::size_t k_bins =
      static_cast<std::size_t>(bins_per_octave) * n_octaves;
  const double q = cqt_q_factor(bins_per_octave);
  const double bw_ratio = std::exp2(1.0 / bins_per_octave) - 1.0;

  CqtMatrix out;
  out.bins_per_octave = bins_per_octave;
  out.q_factor = q;
  out.hop_len = hop_len;
  out.sample_rate_hz = fs;
  out.bin_freqs_hz.resize(k_bins);
  out.bandwidths_hz.resize(k_bins);
  out.window_lengths.resize(k_bins);
  for (std::size_t k = 0; k < k_bins; ++k) {
    const double f_k =
        f_min * std::exp2(static_cast<double>(k) / bins_per_octave);
    out.bin_freqs_hz[k] = f_k;
    out.bandwidths_hz[k] = f_k * bw_ratio;
    out.window_lengths[k] =
        static_cast<std::size_t>(std::llround(q * fs / f_k));
  }

  const auto& x = clip.samples();
  const std::size_t n = x.size();
  if (out.window_lengths[0] > n) {
    throw ArgumentError(
        "clip too short for CQT f_min " + std::to_string(f_min) +
        " Hz: lowest bin needs at least " +
        std::to_string(out.window_lengths[0]) + " samples, clip has " +
        std::to_string(n));
  }

  const std::size_t n_frames = (n - 1) / hop_len + 1;
  out.values = Matrix<std::complex<double>>(k_bins, n_frames);

  const auto n_signed = static_cast<std::ptrdiff_t>(n);
  for (std::size_t k = 0; k < k_bins; ++k) {
    const BinKernel kernel =
        make_kernel(out.bin_freqs_hz[k], out.window_lengths[k], fs);
    for (std::size_t t = 0; t < n_frames; ++t) {
      const auto centre = static_cast<std::ptrdiff_t>(t * hop_len);
      // Clip the tap range to samples that exist; the rest are zero.
      const std::ptrdiff_t l_lo = std::max(-kernel.half, -centre);
      const std::ptrdiff_t l_hi = std::min(kernel.half, n_signed - 1 - centre);
      double re = 0.0;
      double im = 0.0;
      const double* xs = x.data() + centre;
      const double* kr = kernel.re.data() + kernel.half;
      const double* ki = kernel.im.data() + kernel.half;
      for (std::ptrdiff_t l = l_lo; l <= l_hi; ++l) {
        re += xs[l] * kr[l];
        im += xs[l] * ki[l];
      }
      out.values(k, t) = {re, im};
    }
  }

  out.check_invariants();
  return out;
}

}  // namespace palmsense
