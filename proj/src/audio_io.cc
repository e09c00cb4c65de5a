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

#include "palmsense/audio_io.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "palmsense/error.h"

namespace palmsense {

AudioClip::AudioClip(std::vector<double> samples, int sample_rate_hz,
                     std::string source_id)
    : samples_(std::move(samples)),
      sample_rate_hz_(sample_rate_hz),
      source_id_(std::move(source_id)) {
  if (sample_rate_hz_ <= 0) {
    throw ArgumentError("sample rate must be positive, got " +
                        std::to_string(sample_rate_hz_));
  }
  if (samples_.empty()) {
    throw EmptyInputError("audio clip has no samples");
  }
  for (double s : samples_) {
    if (!std::isfinite(s) || s < -1.0 || s > 1.0) {
      throw InputError("audio sample outside [-1, 1] or not finite");
    }
  }
}

AudioClip resample(const AudioClip& clip, int target_hz) {
  if (target_hz <= 0) {
    throw ArgumentError("resample target rate must be positive, got " +
                        std::to_string(target_hz));
  }
  const int source_hz = clip.sample_rate_hz();
  if (target_hz == source_hz) return clip;

  const auto& in = clip.samples();
  const std::size_t n_in = in.size();
  const auto n_out = static_cast<std::size_t>(std::llround(
      static_cast<double>(n_in) * target_hz / static_cast<double>(source_hz)));
  if (n_out == 0) {
    throw EmptyInputError("resampled clip would have no samples");
  }
  std::vector<double> out(n_out);
  const double step = static_cast<double>(source_hz) / target_hz;
  for (std::size_t i = 0; i < n_out; ++i) {
    const double pos = static_cast<double>(i) * step;
    const auto left = static_cast<std::size_t>(pos);
    if (left + 1 >= n_in) {
      out[i] = in[n_in - 1];
      continue;
    }
    const double frac = pos - static_cast<double>(left);
    out[i] = in[left] + frac * (in[left + 1] - in[left]);
  }
  return AudioClip(std::move(out), target_hz, clip.source_id());
}

AudioClip pre_emphasize(const AudioClip& clip, double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw ArgumentError("pre-emphasis alpha must be in [0, 1)");
  }
  const auto& x = clip.samples();
  std::vector<double> y(x.size());
  bool clamped = false;
  y[0] = x[0];
  for (std::size_t n = 1; n < x.size(); ++n) {
    double v = x[n] - alpha * x[n - 1];
    if (v > 1.0 || v < -1.0) {
      v = std::clamp(v, -1.0, 1.0);
      clamped = true;
    }
    y[n] = v;
  }
  AudioClip out(std::move(y), clip.sample_rate_hz(), clip.source_id());
  out.clamped_ = clamped || clip.clamped();
  return out;
}

std::size_t frame_count(std::size_t n_samples, std::size_t frame_len,
                        std::size_t hop_len) {
  if (n_samples < frame_len) return 0;
  return (n_samples - frame_len) / hop_len + 1;
}

FrameSequence frame_signal(const AudioClip& clip, std::size_t frame_len,
                           std::size_t hop_len) {
  if (frame_len < 2) throw ArgumentError("frame length must be at least 2");
  if (hop_len < 1) throw ArgumentError("hop length must be at least 1");

  const auto& x = clip.samples();
  const std::size_t n_frames = frame_count(x.size(), frame_len, hop_len);
  FrameSequence seq;
  seq.frames = RealMatrix(n_frames, frame_len);
  seq.frame_len = frame_len;
  seq.hop_len = hop_len;
  seq.sample_rate_hz = clip.sample_rate_hz();
  for (std::size_t i = 0; i < n_frames; ++i) {
    const auto begin = x.begin() + static_cast<std::ptrdiff_t>(i * hop_len);
    std::copy(begin, begin + static_cast<std::ptrdiff_t>(frame_len),
              seq.frames.row(i).begin());
  }
  return seq;
}

std::vector<double> make_window(WindowKind kind, std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (kind == WindowKind::kNone) return w;
  const double a0 = kind == WindowKind::kHamming ? 0.54 : 0.5;
  const double a1 = 1.0 - a0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = a0 - a1 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                              static_cast<double>(n));
  }
  return w;
}

FrameSequence apply_window(const FrameSequence& frames, WindowKind kind) {
  if (frames.window_applied != WindowKind::kNone) {
    throw StateError("frames are already windowed");
  }
  if (kind == WindowKind::kNone) {
    throw ArgumentError("window kind must be hamming or hann");
  }
  FrameSequence out = frames;
  const auto w = make_window(kind, frames.frame_len);
  for (std::size_t i = 0; i < out.n_frames(); ++i) {
    auto row = out.frames.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] *= w[j];
  }
  out.window_applied = kind;
  return out;
}

}  // namespace palmsense
