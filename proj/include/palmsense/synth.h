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

// Seeded synthetic corpus: pink-ish background noise for clean clips, plus
// trains of damped sinusoid pulses for infested ones.
//
// Per clip, with u ~ U(lo, hi) drawn from the clip's own generator:
//   noise    Kellet pink filter over white Gaussian noise, scaled to RMS
//            noise_rms * 10^(u(-j, j) / 20), j = noise_jitter_db
//   pulses   onset gaps ~ Exp(rate), rate ~ U(pulse_rate_hz)
//            p(t) = a exp(-t / tau) sin(2 pi f t + phi) for t < 5 tau,
//            f ~ U(pulse_band_hz), tau ~ U(pulse_tau_s), a ~ U(0.5, 1)
//   mix      the pulse train is scaled so 10 log10(P_pulse / P_noise)
//            equals snr ~ U(snr_db); powers are whole-clip means
// If the mix peaks above 0.99 the whole clip is scaled down to 0.99.

#ifndef PALMSENSE_SYNTH_H_
#define PALMSENSE_SYNTH_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>

#include "palmsense/audio_io.h"
#include "palmsense/classifiers.h"
#include "palmsense/evaluation.h"

namespace palmsense {

struct SynthSpec {
  std::size_t n_infested = 100;
  std::size_t n_clean = 100;
  double clip_seconds = 20.0;
  int sample_rate_hz = kCanonicalSampleRateHz;

  std::pair<double, double> pulse_rate_hz = {5.0, 15.0};
  std::pair<double, double> pulse_band_hz = {200.0, 2000.0};
  std::pair<double, double> pulse_tau_s = {0.002, 0.006};
  std::pair<double, double> snr_db = {10.0, 10.0};

  double noise_rms = 0.02;
  double noise_jitter_db = 3.0;

  std::uint64_t seed = 0;

  // ArgumentError on an empty class, a non-finite SNR or a bad range.
  void validate() const;
};

// Clip ids are infested_NNNN and clean_NNNN.
std::string synth_clip_id(Label label, std::size_t index);

// One clip. Depends only on (spec, label, index), never on other clips.
AudioClip synth_clip(const SynthSpec& spec, Label label, std::size_t index);

// Writes every clip as 16-bit WAV plus manifest.csv into out_dir (created
// if missing) and returns the manifest. Timestamps are five minutes apart.
DatasetManifest synthesize(const SynthSpec& spec,
                           const std::filesystem::path& out_dir,
                           std::size_t jobs = 1);

}  // namespace palmsense

#endif  // PALMSENSE_SYNTH_H_
