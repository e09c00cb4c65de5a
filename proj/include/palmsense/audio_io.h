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

// Audio ingestion: WAV decoding, resampling, pre-emphasis, framing and
// windowing. Everything here is a pure function over immutable values.

#ifndef PALMSENSE_AUDIO_IO_H_
#define PALMSENSE_AUDIO_IO_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "palmsense/matrix.h"

namespace palmsense {

inline constexpr int kCanonicalSampleRateHz = 16000;

// Mono recording with samples normalized to [-1, 1].
class AudioClip {
 public:
  // Throws ArgumentError on non-positive rate, EmptyInputError on no samples,
  // InputError on non-finite or out-of-range samples.
  AudioClip(std::vector<double> samples, int sample_rate_hz,
            std::string source_id = {});

  const std::vector<double>& samples() const { return samples_; }
  int sample_rate_hz() const { return sample_rate_hz_; }
  const std::string& source_id() const { return source_id_; }
  std::size_t size() const { return samples_.size(); }
  double duration_seconds() const {
    return static_cast<double>(samples_.size()) / sample_rate_hz_;
  }

  // Set when pre-emphasis had to clamp at least one output sample.
  bool clamped() const { return clamped_; }

 private:
  friend AudioClip pre_emphasize(const AudioClip&, double);

  std::vector<double> samples_;
  int sample_rate_hz_;
  std::string source_id_;
  bool clamped_ = false;
};

enum class WindowKind { kNone, kHamming, kHann };

struct FrameSequence {
  RealMatrix frames;  // n_frames x frame_len
  std::size_t frame_len = 0;
  std::size_t hop_len = 0;
  int sample_rate_hz = 0;
  WindowKind window_applied = WindowKind::kNone;

  std::size_t n_frames() const { return frames.rows(); }
};

// Decodes a RIFF/WAVE byte buffer. PCM 8/16/24/32-bit and IEEE float 32 are
// accepted, including WAVE_FORMAT_EXTENSIBLE wrappers. Channels are averaged.
AudioClip parse_wav(std::span<const std::uint8_t> bytes,
                    std::string source_id = {});

// Reads `path` and decodes it; source_id is the file stem.
AudioClip load_wav(const std::filesystem::path& path);

// 16-bit PCM little-endian mono.
std::vector<std::uint8_t> encode_wav16(const AudioClip& clip);
void write_wav16(const AudioClip& clip, const std::filesystem::path& path);

AudioClip resample(const AudioClip& clip, int target_hz);

// y(0) = x(0), y(n) = x(n) - alpha * x(n - 1). Samples outside [-1, 1] are
// clamped and the clip's clamped() flag is set.
AudioClip pre_emphasize(const AudioClip& clip, double alpha);

std::size_t frame_count(std::size_t n_samples, std::size_t frame_len,
                        std::size_t hop_len);

FrameSequence frame_signal(const AudioClip& clip, std::size_t frame_len,
                           std::size_t hop_len);

// Periodic window of length n.
std::vector<double> make_window(WindowKind kind, std::size_t n);

FrameSequence apply_window(const FrameSequence& frames, WindowKind kind);

}  // namespace palmsense

#endif  // PALMSENSE_AUDIO_IO_H_
