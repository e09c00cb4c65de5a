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
#include <string>

#include "palmsense/dsp.h"
#include "palmsense/error.h"

namespace palmsense {
namespace {

void require_non_negative(double hz) {
  if (!(hz >= 0.0)) {
    throw ArgumentError("frequency must be non-negative, got " +
                        std::to_string(hz));
  }
}

// z(x) = 26.81 x - 0.53 x^2 + 4.5e-6 x^3, x in kHz. Increasing up to the
// smaller root of z'(x) = 26.81 - 1.06 x + 1.35e-5 x^2.
constexpr double kBarkA = 26.81;
constexpr double kBarkB = 0.53;
constexpr double kBarkC = 4.5e-6;

double paper_bark_peak_hz() {
  const double a = 3.0 * kBarkC;
  const double b = -2.0 * kBarkB;
  const double c = kBarkA;
  const double x = (-b - std::sqrt(b * b - 4.0 * a * c)) / (2.0 * a);
  return x * 1000.0;
}

void validate_bank_args(std::size_t n_filters, std::size_t n_fft,
                        int sample_rate_hz, double f_min, double f_max) {
  if (n_filters < 1) throw ArgumentError("filterbank needs at least 1 filter");
  if (n_fft < 2 || (n_fft & (n_fft - 1)) != 0) {
    throw ArgumentError("n_fft must be a power of two >= 2");
  }
  if (sample_rate_hz <= 0) throw ArgumentError("sample rate must be positive");
  const double nyquist = sample_rate_hz / 2.0;
  if (!(f_min >= 0.0 && f_min < f_max)) {
    throw ArgumentError("filterbank needs 0 <= f_min < f_max");
  }
  if (f_max > nyquist) {
    throw ArgumentError("f_max " + std::to_string(f_max) +
                        " Hz is beyond Nyquist " + std::to_string(nyquist) +
                        " Hz");
  }
}

double to_scale(FilterScale scale, double hz) {
  switch (scale) {
    case FilterScale::kMel:
      return hz_to_mel(hz);
    case FilterScale::kBarkPaper:
      return hz_to_bark(hz, BarkVariant::kPaper);
    case FilterScale::kBarkTraunmueller:
      return hz_to_bark(hz, BarkVariant::kTraunmueller);
    case FilterScale::kLinear:
      return hz;
    case FilterScale::kGammatone:
      return hz_to_erb_rate(hz);
  }
  return hz;
}

double from_scale(FilterScale scale, double v) {
  switch (scale) {
    case FilterScale::kMel:
      return mel_to_hz(v);
    case FilterScale::kBarkPaper:
      return bark_to_hz(v, BarkVariant::kPaper);
    case FilterScale::kBarkTraunmueller:
      return bark_to_hz(v, BarkVariant::kTraunmueller);
    case FilterScale::kLinear:
      return v;
    case FilterScale::kGammatone:
      return erb_rate_to_hz(v);
  }
  return v;
}

}  // namespace

double hz_to_mel(double hz) {
  require_non_negative(hz);
  return 2595.0 * std::log10(1.0 + hz / 700.0);
}

double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

double hz_to_bark(double hz, BarkVariant variant) {
  require_non_negative(hz);
  if (variant == BarkVariant::kPaper) {
    const double x = hz / 1000.0;
    return kBarkA * x - kBarkB * x * x + kBarkC * x * x * x;
  }
  return std::max(0.0, 26.81 * hz / (1960.0 + hz) - 0.53);
}

double bark_to_hz(double bark, BarkVariant variant) {
  if (variant == BarkVariant::kTraunmueller) {
    if (!(bark < 26.28)) throw ArgumentError("Bark value beyond scale range");
    return 1960.0 * (std::max(bark, 0.0) + 0.53) / (26.28 - std::max(bark, 0.0));
  }
  const double hi_hz = paper_bark_peak_hz();
  if (bark <= 0.0) return 0.0;
  if (bark > hz_to_bark(hi_hz, variant)) {
    throw ArgumentError("Bark value beyond the monotone range of the scale");
  }
  double lo = 0.0;
  double hi = hi_hz;
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (hz_to_bark(mid, variant) < bark ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double hz_to_erb_rate(double hz) {
  require_non_negative(hz);
  return 21.4 * std::log10(1.0 + 0.00437 * hz);
}

double erb_rate_to_hz(double erb) {
  return (std::pow(10.0, erb / 21.4) - 1.0) / 0.00437;
}

double erb_bandwidth(double hz) { return 24.7 * (4.37 * hz / 1000.0 + 1.0); }

std::string_view to_string(FilterScale scale) {
  switch (scale) {
    case FilterScale::kMel:
      return "mel";
    case FilterScale::kBarkPaper:
      return "bark_paper";
    case FilterScale::kBarkTraunmueller:
      return "bark_traunmueller";
    case FilterScale::kLinear:
      return "linear";
    case FilterScale::kGammatone:
      return "gammatone";
  }
  return "unknown";
}

std::vector<double> Filterbank::apply(std::span<const double> power) const {
  if (power.size() != weights.cols()) {
    throw ArgumentError("spectrum length does not match filterbank");
  }
  std::vector<double> out(weights.rows(), 0.0);
  for (std::size_t i = 0; i < weights.rows(); ++i) {
    const auto w = weights.row(i);
    double acc = 0.0;
    for (std::size_t b = 0; b < w.size(); ++b) acc += w[b] * power[b];
    out[i] = acc;
  }
  return out;
}

Filterbank triangular_filterbank(FilterScale scale, std::size_t n_filters,
                                 std::size_t n_fft, int sample_rate_hz,
                                 double f_min, double f_max) {
  if (scale == FilterScale::kGammatone) {
    throw ArgumentError("gammatone banks are not triangular");
  }
  validate_bank_args(n_filters, n_fft, sample_rate_hz, f_min, f_max);

  const std::size_t n_bins = n_fft / 2 + 1;
  const double lo = to_scale(scale, f_min);
  const double hi = to_scale(scale, f_max);
  const std::size_t n_points = n_filters + 2;

  std::vector<double> points_hz(n_points);
  std::vector<std::size_t> points_bin(n_points);
  for (std::size_t j = 0; j < n_points; ++j) {
    const double v = lo + (hi - lo) * static_cast<double>(j) /
                              static_cast<double>(n_points - 1);
    double hz = scale == FilterScale::kLinear ? v : from_scale(scale, v);
    if (j == 0 && scale == FilterScale::kLinear) hz = f_min;
    if (j == n_points - 1 && scale == FilterScale::kLinear) hz = f_max;
    points_hz[j] = hz;
    const double bin = hz * static_cast<double>(n_fft) / sample_rate_hz;
    points_bin[j] = std::min<std::size_t>(
        static_cast<std::size_t>(std::llround(bin)), n_bins - 1);
  }

  Filterbank bank;
  bank.scale = scale;
  bank.weights = RealMatrix(n_filters, n_bins, 0.0);
  bank.centers_hz.assign(points_hz.begin() + 1, points_hz.end() - 1);
  for (std::size_t i = 0; i < n_filters; ++i) {
    const std::size_t l = points_bin[i];
    const std::size_t c = points_bin[i + 1];
    const std::size_t r = points_bin[i + 2];
    auto row = bank.weights.row(i);
    for (std::size_t k = l + 1; k < c; ++k) {
      row[k] = static_cast<double>(k - l) / static_cast<double>(c - l);
    }
    row[c] = 1.0;
    for (std::size_t k = c + 1; k < r; ++k) {
      row[k] = static_cast<double>(r - k) / static_cast<double>(r - c);
    }
  }
  for (std::size_t i = 1; i < n_filters; ++i) {
    if (!(bank.centers_hz[i] > bank.centers_hz[i - 1])) {
      throw ArgumentError("filter centers are not strictly increasing");
    }
  }
  return bank;
}

Filterbank gammatone_filterbank(std::size_t n_filters, std::size_t n_fft,
                                int sample_rate_hz, double f_min,
                                double f_max) {
  validate_bank_args(n_filters, n_fft, sample_rate_hz, f_min, f_max);
  const std::size_t n_bins = n_fft / 2 + 1;
  const double lo = hz_to_erb_rate(f_min);
  const double hi = hz_to_erb_rate(f_max);

  Filterbank bank;
  bank.scale = FilterScale::kGammatone;
  bank.weights = RealMatrix(n_filters, n_bins, 0.0);
  bank.centers_hz.resize(n_filters);
  for (std::size_t i = 0; i < n_filters; ++i) {
    const double erb =
        n_filters == 1 ? 0.5 * (lo + hi)
                       : lo + (hi - lo) * static_cast<double>(i) /
                                  static_cast<double>(n_filters - 1);
    bank.centers_hz[i] = erb_rate_to_hz(erb);
  }

  // |H(f)| of an order-4 gammatone: (1 + ((f - fc) / b)^2)^-2 with
  // b = 1.019 ERB(fc).
  for (std::size_t i = 0; i < n_filters; ++i) {
    const double fc = bank.centers_hz[i];
    const double b = 1.019 * erb_bandwidth(fc);
    auto row = bank.weights.row(i);
    double peak = 0.0;
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate_hz /
                       static_cast<double>(n_fft);
      const double u = (f - fc) / b;
      const double base = 1.0 + u * u;
      row[k] = 1.0 / (base * base);
      peak = std::max(peak, row[k]);
    }
    for (double& w : row) w /= peak;
  }
  return bank;
}

}  // namespace palmsense
