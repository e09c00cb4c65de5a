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

#include "palmsense/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "palmsense/error.h"
#include "palmsense/parallel.h"
#include "palmsense/random.h"

namespace palmsense {
namespace {

// splitmix64 finalizer; turns (seed, label, index) into a clip seed.
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void check_range(const std::pair<double, double>& r, const char* name,
                 bool positive) {
  if (!std::isfinite(r.first) || !std::isfinite(r.second) || r.first > r.second ||
      (positive && !(r.first > 0.0))) {
    throw ArgumentError(std::string("synth: bad range for ") + name);
  }
}

double mean_power(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

std::vector<double> pink_noise(Rng& rng, std::size_t n) {
  std::vector<double> out(n);
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;
  for (auto& y : out) {
    const double w = rng.normal();
    b0 = 0.99765 * b0 + w * 0.0990460;
    b1 = 0.96300 * b1 + w * 0.2965164;
    b2 = 0.57000 * b2 + w * 1.0526913;
    y = b0 + b1 + b2 + w * 0.1848;
  }
  return out;
}

std::string timestamp(std::size_t slot) {
  // 2026-01-01T00:00:00Z plus five minutes per slot; fits in a year for
  // any corpus below ~100k clips.
  const std::size_t minutes = slot * 5;
  static constexpr int kDays[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  std::size_t day = minutes / (24 * 60);
  const std::size_t hh = (minutes / 60) % 24;
  const std::size_t mm = minutes % 60;
  int month = 0;
  std::size_t year = 2026;
  while (day >= static_cast<std::size_t>(kDays[month])) {
    day -= static_cast<std::size_t>(kDays[month]);
    if (++month == 12) {
      month = 0;
      ++year;
    }
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04zu-%02d-%02zuT%02zu:%02zu:00Z", year,
                month + 1, day + 1, hh, mm);
  return buf;
}

}  // namespace

void SynthSpec::validate() const {
  if (n_infested < 1 || n_clean < 1) {
    throw ArgumentError("synth: both classes need at least one clip");
  }
  if (!(clip_seconds > 0.0) || !std::isfinite(clip_seconds)) {
    throw ArgumentError("synth: clip_seconds must be positive");
  }
  if (sample_rate_hz <= 0) throw ArgumentError("synth: bad sample rate");
  check_range(pulse_rate_hz, "pulse_rate_hz", true);
  check_range(pulse_band_hz, "pulse_band_hz", true);
  check_range(pulse_tau_s, "pulse_tau_s", true);
  check_range(snr_db, "snr_db", false);
  if (pulse_band_hz.second >= sample_rate_hz / 2.0) {
    throw ArgumentError("synth: pulse band reaches Nyquist");
  }
  if (!(noise_rms > 0.0) || !std::isfinite(noise_rms) ||
      !std::isfinite(noise_jitter_db) || noise_jitter_db < 0.0) {
    throw ArgumentError("synth: bad noise parameters");
  }
}

std::string synth_clip_id(Label label, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%04zu",
                label == Label::kInfested ? "infested" : "clean", index);
  return buf;
}

AudioClip synth_clip(const SynthSpec& spec, Label label, std::size_t index) {
  spec.validate();
  const std::uint64_t tag = label == Label::kInfested ? 1 : 2;
  Rng rng(mix64(mix64(spec.seed) ^ mix64(tag << 32 | index)));
  const double fs = spec.sample_rate_hz;
  const auto n = static_cast<std::size_t>(std::llround(spec.clip_seconds * fs));

  std::vector<double> noise = pink_noise(rng, n);
  const double level =
      spec.noise_rms *
      std::pow(10.0, rng.uniform(-spec.noise_jitter_db, spec.noise_jitter_db) / 20.0);
  const double noise_scale = level / std::sqrt(std::max(mean_power(noise), 1e-30));
  for (auto& v : noise) v *= noise_scale;

  std::vector<double> mix = noise;
  if (label == Label::kInfested) {
    std::vector<double> pulses(n, 0.0);
    const double rate = rng.uniform(spec.pulse_rate_hz.first, spec.pulse_rate_hz.second);
    double t = -std::log(1.0 - rng.uniform()) / rate;
    while (t * fs < static_cast<double>(n)) {
      const double f = rng.uniform(spec.pulse_band_hz.first, spec.pulse_band_hz.second);
      const double tau = rng.uniform(spec.pulse_tau_s.first, spec.pulse_tau_s.second);
      const double a = rng.uniform(0.5, 1.0);
      const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const auto start = static_cast<std::size_t>(t * fs);
      const auto len = static_cast<std::size_t>(5.0 * tau * fs);
      for (std::size_t k = 0; k < len && start + k < n; ++k) {
        const double s = static_cast<double>(k) / fs;
        pulses[start + k] +=
            a * std::exp(-s / tau) * std::sin(2.0 * std::numbers::pi * f * s + phi);
      }
      t += -std::log(1.0 - rng.uniform()) / rate;
    }
    const double snr = rng.uniform(spec.snr_db.first, spec.snr_db.second);
    const double p_pulse = mean_power(pulses);
    if (p_pulse > 0.0) {
      const double target = mean_power(noise) * std::pow(10.0, snr / 10.0);
      const double g = std::sqrt(target / p_pulse);
      for (std::size_t i = 0; i < n; ++i) mix[i] += g * pulses[i];
    }
  }

  double peak = 0.0;
  for (double v : mix) peak = std::max(peak, std::abs(v));
  if (peak > 0.99) {
    for (auto& v : mix) v *= 0.99 / peak;
  }
  return AudioClip(std::move(mix), spec.sample_rate_hz, synth_clip_id(label, index));
}

DatasetManifest synthesize(const SynthSpec& spec,
                           const std::filesystem::path& out_dir,
                           std::size_t jobs) {
  spec.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  DatasetManifest manifest;
  manifest.base_dir = out_dir;
  std::vector<std::pair<Label, std::size_t>> jobs_list;
  for (std::size_t i = 0; i < spec.n_infested; ++i) jobs_list.emplace_back(Label::kInfested, i);
  for (std::size_t i = 0; i < spec.n_clean; ++i) jobs_list.emplace_back(Label::kNotInfested, i);
  manifest.records.resize(jobs_list.size());

  parallel_for(jobs_list.size(), jobs, [&](std::size_t j) {
    const auto [label, index] = jobs_list[j];
    const AudioClip clip = synth_clip(spec, label, index);
    const std::string id = synth_clip_id(label, index);
    write_wav16(clip, out_dir / (id + ".wav"));
    manifest.records[j] = {id, id + ".wav", label, timestamp(j)};
  });
  write_manifest(manifest, out_dir / "manifest.csv");
  return manifest;
}

}  // namespace palmsense
