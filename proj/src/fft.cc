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

// FFT and DCT backed by FFTW. Plans are created once per (kind, size) with
// FFTW_ESTIMATE, which makes them deterministic, and then executed through
// the new-array interface, which is thread-safe. Only planning is locked.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>

#include "palmsense/dsp.h"
#include "palmsense/error.h"

namespace palmsense {
namespace {

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <typename T>
FftwBuffer<T> fftw_alloc(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * std::max<std::size_t>(n, 1)));
  if (p == nullptr) throw std::bad_alloc();
  return FftwBuffer<T>(p);
}

enum class PlanKind { kR2c, kDct2, kDct3 };

class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(PlanKind kind, std::size_t n) {
    std::lock_guard<std::mutex> lock(mu_);
    auto key = std::make_pair(kind, n);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    const int len = static_cast<int>(n);
    fftw_plan plan = nullptr;
    auto in = fftw_alloc<double>(n);
    if (kind == PlanKind::kR2c) {
      auto out = fftw_alloc<fftw_complex>(n / 2 + 1);
      plan = fftw_plan_dft_r2c_1d(len, in.get(), out.get(), FFTW_ESTIMATE);
    } else {
      auto out = fftw_alloc<double>(n);
      plan = fftw_plan_r2r_1d(len, in.get(), out.get(),
                              kind == PlanKind::kDct2 ? FFTW_REDFT10
                                                      : FFTW_REDFT01,
                              FFTW_ESTIMATE);
    }
    if (plan == nullptr) throw Error("FFTW planning failed");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  std::mutex mu_;
  std::map<std::pair<PlanKind, std::size_t>, fftw_plan> plans_;
};

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

}  // namespace

ComplexSpectrum fft_real(std::span<const double> frame, std::size_t n_fft,
                         int sample_rate_hz) {
  if (!is_power_of_two(n_fft)) {
    throw ArgumentError("n_fft must be a power of two, got " +
                        std::to_string(n_fft));
  }
  if (frame.size() > n_fft) {
    throw ArgumentError("frame longer than n_fft");
  }
  const std::size_t n_bins = n_fft / 2 + 1;
  ComplexSpectrum spec;
  spec.n_fft = n_fft;
  spec.sample_rate_hz = sample_rate_hz;
  spec.bins.resize(n_bins);

  if (n_fft == 1) {
    spec.bins[0] = frame.empty() ? 0.0 : frame[0];
    return spec;
  }

  fftw_plan plan = PlanCache::instance().get(PlanKind::kR2c, n_fft);
  auto in = fftw_alloc<double>(n_fft);
  auto out = fftw_alloc<fftw_complex>(n_bins);
  std::copy(frame.begin(), frame.end(), in.get());
  std::fill(in.get() + frame.size(), in.get() + n_fft, 0.0);
  fftw_execute_dft_r2c(plan, in.get(), out.get());
  for (std::size_t b = 0; b < n_bins; ++b) {
    spec.bins[b] = {out[b][0], out[b][1]};
  }
  return spec;
}

std::vector<double> power_spectrum(const ComplexSpectrum& spec) {
  std::vector<double> p(spec.bins.size());
  std::transform(spec.bins.begin(), spec.bins.end(), p.begin(),
                 [](std::complex<double> z) { return std::norm(z); });
  return p;
}

std::vector<double> dct_ii(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n == 0) throw ArgumentError("DCT of an empty sequence");
  if (n == 1) return {v[0]};

  fftw_plan plan = PlanCache::instance().get(PlanKind::kDct2, n);
  auto in = fftw_alloc<double>(n);
  auto out = fftw_alloc<double>(n);
  std::copy(v.begin(), v.end(), in.get());
  fftw_execute_r2r(plan, in.get(), out.get());

  // FFTW's REDFT10 is 2 * sum x_j cos(pi k (j + 1/2) / n).
  const double s0 = std::sqrt(1.0 / static_cast<double>(n)) * 0.5;
  const double sk = std::sqrt(2.0 / static_cast<double>(n)) * 0.5;
  std::vector<double> c(n);
  c[0] = out[0] * s0;
  for (std::size_t k = 1; k < n; ++k) c[k] = out[k] * sk;
  return c;
}

std::vector<double> dct_iii(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n == 0) throw ArgumentError("DCT of an empty sequence");
  if (n == 1) return {v[0]};

  fftw_plan plan = PlanCache::instance().get(PlanKind::kDct3, n);
  auto in = fftw_alloc<double>(n);
  auto out = fftw_alloc<double>(n);
  // REDFT01 is X_0 + 2 * sum_{j>=1} X_j cos(pi j (k + 1/2) / n).
  in[0] = v[0] * std::sqrt(1.0 / static_cast<double>(n));
  const double sk = std::sqrt(2.0 / static_cast<double>(n)) * 0.5;
  for (std::size_t k = 1; k < n; ++k) in[k] = v[k] * sk;
  fftw_execute_r2r(plan, in.get(), out.get());
  return std::vector<double>(out.get(), out.get() + n);
}

}  // namespace palmsense
