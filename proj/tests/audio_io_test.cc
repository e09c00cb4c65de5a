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
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include <doctest.h>

#include "oracles.h"
#include "palmsense/audio_io.h"
#include "palmsense/dsp.h"
#include "palmsense/error.h"

namespace palmsense {
namespace {

// Minimal RIFF writer for fixtures the library writer cannot produce.
struct WavBuilder {
  std::uint16_t format = 1;  // 1 PCM, 3 float, 0xFFFE extensible
  std::uint16_t channels = 1;
  std::uint32_t rate = 16000;
  std::uint16_t bits = 16;
  std::uint16_t sub_format = 1;  // for extensible
  std::vector<std::uint8_t> data;

  void put(std::vector<std::uint8_t>& out, std::uint64_t v, int n) const {
    for (int i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  std::vector<std::uint8_t> bytes() const {
    std::vector<std::uint8_t> fmt;
    put(fmt, format, 2);
    put(fmt, channels, 2);
    put(fmt, rate, 4);
    put(fmt, rate * channels * bits / 8, 4);
    put(fmt, channels * bits / 8, 2);
    put(fmt, bits, 2);
    if (format == 0xFFFE) {
      put(fmt, 22, 2);
      put(fmt, bits, 2);
      put(fmt, 0, 4);
      put(fmt, sub_format, 2);
      const std::uint8_t guid_tail[14] = {0x00, 0x00, 0x00, 0x00, 0x10, 0x00, 0x80,
                                          0x00, 0x00, 0xAA, 0x00, 0x38, 0x9B, 0x71};
      fmt.insert(fmt.end(), guid_tail, guid_tail + 14);
    }
    std::vector<std::uint8_t> out = {'R', 'I', 'F', 'F'};
    put(out, 4 + 8 + fmt.size() + 8 + data.size() + 8 + 4, 4);
    for (char c : std::string("WAVE")) out.push_back(static_cast<std::uint8_t>(c));
    // An unrelated chunk before fmt exercises the chunk walk.
    for (char c : std::string("LIST")) out.push_back(static_cast<std::uint8_t>(c));
    put(out, 4, 4);
    for (char c : std::string("INFO")) out.push_back(static_cast<std::uint8_t>(c));
    for (char c : std::string("fmt ")) out.push_back(static_cast<std::uint8_t>(c));
    put(out, fmt.size(), 4);
    out.insert(out.end(), fmt.begin(), fmt.end());
    for (char c : std::string("data")) out.push_back(static_cast<std::uint8_t>(c));
    put(out, data.size(), 4);
    out.insert(out.end(), data.begin(), data.end());
    return out;
  }

  void sample(std::int64_t v) { put(data, static_cast<std::uint64_t>(v), bits / 8); }
  void sample_float(float v) { put(data, std::bit_cast<std::uint32_t>(v), 4); }
};

AudioClip clip_of(std::vector<double> x, int rate = 16000) {
  return AudioClip(std::move(x), rate, "t");
}

}  // namespace

TEST_CASE("AudioClip validates its samples") {
  CHECK_THROWS_AS(AudioClip({}, 16000), EmptyInputError);
  CHECK_THROWS_AS(AudioClip({0.1}, 0), ArgumentError);
  CHECK_THROWS_AS(AudioClip({1.5}, 16000), InputError);
  CHECK_THROWS_AS(AudioClip({std::nan("")}, 16000), InputError);
  CHECK(AudioClip({-1.0, 1.0}, 8000).size() == 2);
}

TEST_CASE("parse_wav scales 16-bit PCM by full scale") {
  WavBuilder w;
  for (int v : {0, 16384, -32768}) w.sample(v);
  const AudioClip c = parse_wav(w.bytes(), "x");
  REQUIRE(c.size() == 3);
  CHECK(c.samples()[0] == 0.0);
  CHECK(c.samples()[1] == 0.5);
  CHECK(c.samples()[2] == -1.0);
  CHECK(c.sample_rate_hz() == 16000);
}

TEST_CASE("parse_wav averages channels") {
  WavBuilder w;
  w.channels = 2;
  w.format = 3;
  w.bits = 32;
  for (int i = 0; i < 4; ++i) {
    w.sample_float(1.0f);
    w.sample_float(0.0f);
  }
  const AudioClip c = parse_wav(w.bytes());
  REQUIRE(c.size() == 4);
  for (double v : c.samples()) CHECK(v == 0.5);
}

TEST_CASE("parse_wav handles 8, 24 and 32-bit PCM and the extensible wrapper") {
  SUBCASE("8-bit unsigned") {
    WavBuilder w;
    w.bits = 8;
    for (int v : {128, 192, 0}) w.sample(v);
    const AudioClip c = parse_wav(w.bytes());
    CHECK(c.samples() == std::vector<double>{0.0, 0.5, -1.0});
  }
  SUBCASE("24-bit") {
    WavBuilder w;
    w.bits = 24;
    for (int v : {0, 4194304, -8388608}) w.sample(v);
    const AudioClip c = parse_wav(w.bytes());
    CHECK(c.samples() == std::vector<double>{0.0, 0.5, -1.0});
  }
  SUBCASE("32-bit") {
    WavBuilder w;
    w.bits = 32;
    for (std::int64_t v : {std::int64_t{0}, std::int64_t{1073741824},
                           std::int64_t{-2147483648LL}}) {
      w.sample(v);
    }
    const AudioClip c = parse_wav(w.bytes());
    CHECK(c.samples() == std::vector<double>{0.0, 0.5, -1.0});
  }
  SUBCASE("extensible 16-bit") {
    WavBuilder w;
    w.format = 0xFFFE;
    for (int v : {0, 16384}) w.sample(v);
    const AudioClip c = parse_wav(w.bytes());
    CHECK(c.samples() == std::vector<double>{0.0, 0.5});
  }
}

TEST_CASE("parse_wav error classes") {
  SUBCASE("malformed header") {
    std::vector<std::uint8_t> junk = {'R', 'I', 'F', 'X', 0, 0, 0, 0};
    CHECK_THROWS_AS(parse_wav(junk), FormatError);
    CHECK_THROWS_AS(parse_wav(std::vector<std::uint8_t>{}), FormatError);
  }
  SUBCASE("unsupported codec") {
    WavBuilder w;
    w.format = 2;  // ADPCM
    w.sample(0);
    CHECK_THROWS_AS(parse_wav(w.bytes()), UnsupportedEncodingError);
  }
  SUBCASE("zero samples") {
    WavBuilder w;
    CHECK_THROWS_AS(parse_wav(w.bytes()), EmptyInputError);
  }
  SUBCASE("truncated file") {
    WavBuilder w;
    for (int i = 0; i < 10; ++i) w.sample(i);
    auto b = w.bytes();
    b.resize(30);
    CHECK_THROWS_AS(parse_wav(b), FormatError);
  }
}

TEST_CASE("16-bit write/load round trip is within one quantization step") {
  oracle::TempDir dir("wav");
  std::mt19937_64 gen(7);
  auto x = oracle::random_vector(gen, 4000);
  x[0] = 1.0;
  x[1] = -1.0;
  const AudioClip clip = clip_of(x, 22050);
  write_wav16(clip, dir / "rt.wav");
  const AudioClip back = load_wav(dir / "rt.wav");
  REQUIRE(back.size() == clip.size());
  CHECK(back.sample_rate_hz() == 22050);
  CHECK(back.source_id() == "rt");
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(std::abs(back.samples()[i] - x[i]) <= 1.0 / 32768.0);
  }
}

TEST_CASE("20 seconds at 16 kHz is 320000 samples") {
  oracle::TempDir dir("wav20");
  write_wav16(clip_of(std::vector<double>(320000, 0.0)), dir / "long.wav");
  CHECK(load_wav(dir / "long.wav").size() == 320000);
}

TEST_CASE("load_wav reports missing files") {
  CHECK_THROWS_AS(load_wav("/nonexistent/file.wav"), IoError);
}

TEST_CASE("resample") {
  SUBCASE("identity is bit-equal") {
    std::mt19937_64 gen(1);
    const AudioClip c = clip_of(oracle::random_vector(gen, 1234));
    CHECK(resample(c, 16000).samples() == c.samples());
  }
  SUBCASE("8 kHz to 16 kHz doubles the length") {
    const AudioClip c = clip_of(std::vector<double>(8000, 0.25), 8000);
    const AudioClip r = resample(c, 16000);
    CHECK(r.size() == 16000);
    CHECK(r.sample_rate_hz() == 16000);
  }
  SUBCASE("output length is round(N * target / source)") {
    const AudioClip c = clip_of(std::vector<double>(1001, 0.0), 44100);
    CHECK(resample(c, 16000).size() ==
          static_cast<std::size_t>(std::llround(1001.0 * 16000.0 / 44100.0)));
  }
  SUBCASE("440 Hz survives 48 kHz to 16 kHz") {
    const AudioClip c = clip_of(oracle::sine(440.0, 48000.0, 48000), 48000);
    const AudioClip r = resample(c, 16000);
    const std::size_t n_fft = 16384;
    std::vector<double> seg(r.samples().begin(), r.samples().begin() + n_fft);
    const auto spec = oracle::dft(seg, n_fft);
    std::size_t peak = 0;
    for (std::size_t b = 1; b < spec.size(); ++b) {
      if (std::abs(spec[b]) > std::abs(spec[peak])) peak = b;
    }
    const double bin_hz = 16000.0 / n_fft;
    CHECK(std::abs(peak * bin_hz - 440.0) <= bin_hz);
  }
  SUBCASE("bad target") {
    CHECK_THROWS_AS(resample(clip_of({0.0}), 0), ArgumentError);
    CHECK_THROWS_AS(resample(clip_of({0.0}), -5), ArgumentError);
  }
}

TEST_CASE("pre_emphasize") {
  SUBCASE("alpha 0 is the identity") {
    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 20; ++trial) {
      const AudioClip c = clip_of(oracle::random_vector(gen, 1 + trial * 37));
      CHECK(pre_emphasize(c, 0.0).samples() == c.samples());
    }
  }
  SUBCASE("constant 0.5") {
    const AudioClip y = pre_emphasize(clip_of(std::vector<double>(5, 0.5)), 0.97);
    CHECK(y.samples()[0] == 0.5);
    for (std::size_t i = 1; i < 5; ++i) {
      CHECK(y.samples()[i] == doctest::Approx(0.015).epsilon(1e-12));
    }
    CHECK_FALSE(y.clamped());
  }
  SUBCASE("alternating +-0.5") {
    std::vector<double> x(8);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = i % 2 ? -0.5 : 0.5;
    const AudioClip y = pre_emphasize(clip_of(x), 0.97);
    for (std::size_t i = 1; i < x.size(); ++i) {
      CHECK(std::abs(y.samples()[i]) == doctest::Approx(0.985).epsilon(1e-12));
    }
  }
  SUBCASE("overflow is clamped and flagged") {
    const AudioClip y = pre_emphasize(clip_of({-1.0, 1.0}), 0.9);
    CHECK(y.samples()[1] == 1.0);
    CHECK(y.clamped());
  }
  SUBCASE("alpha out of range") {
    CHECK_THROWS_AS(pre_emphasize(clip_of({0.0}), 1.0), ArgumentError);
    CHECK_THROWS_AS(pre_emphasize(clip_of({0.0}), -0.1), ArgumentError);
  }
}

TEST_CASE("frame_signal") {
  SUBCASE("1 s at 400/160 gives 98 frames") {
    const auto f = frame_signal(clip_of(std::vector<double>(16000, 0.0)), 400, 160);
    CHECK(f.n_frames() == 98);
    CHECK(f.frames.cols() == 400);
    CHECK(f.window_applied == WindowKind::kNone);
  }
  SUBCASE("boundaries") {
    CHECK(frame_signal(clip_of(std::vector<double>(400, 0.0)), 400, 160).n_frames() == 1);
    CHECK(frame_signal(clip_of(std::vector<double>(399, 0.0)), 400, 160).n_frames() == 0);
  }
  SUBCASE("frame i holds samples from i * hop") {
    std::vector<double> x(50);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i) / 100.0;
    const auto f = frame_signal(clip_of(x), 8, 5);
    for (std::size_t i = 0; i < f.n_frames(); ++i) {
      for (std::size_t j = 0; j < 8; ++j) CHECK(f.frames(i, j) == x[i * 5 + j]);
    }
  }
  SUBCASE("count formula over random sizes") {
    std::mt19937_64 gen(11);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t len = 2 + gen() % 300;
      const std::size_t hop = 1 + gen() % 200;
      const std::size_t n = len + gen() % 2000;
      const auto f = frame_signal(clip_of(std::vector<double>(n, 0.0)), len, hop);
      CHECK(f.n_frames() == (n - len) / hop + 1);
      CHECK(frame_count(n, len, hop) == (n - len) / hop + 1);
    }
  }
  SUBCASE("bad sizes") {
    CHECK_THROWS_AS(frame_signal(clip_of({0.0, 0.0}), 1, 1), ArgumentError);
    CHECK_THROWS_AS(frame_signal(clip_of({0.0, 0.0}), 2, 0), ArgumentError);
  }
}

TEST_CASE("windows") {
  SUBCASE("periodic Hann of length 4") {
    const auto w = make_window(WindowKind::kHann, 4);
    CHECK(w[0] == doctest::Approx(0.0));
    CHECK(w[1] == doctest::Approx(0.5));
    CHECK(w[2] == doctest::Approx(1.0));
    CHECK(w[3] == doctest::Approx(0.5));
  }
  SUBCASE("Hamming endpoint") {
    CHECK(make_window(WindowKind::kHamming, 400)[0] == doctest::Approx(0.08));
  }
  SUBCASE("apply_window on ones and zeros") {
    const auto ones = frame_signal(clip_of(std::vector<double>(4, 1.0)), 4, 1);
    const auto w = apply_window(ones, WindowKind::kHann);
    CHECK(w.window_applied == WindowKind::kHann);
    CHECK(w.frames(0, 1) == doctest::Approx(0.5));
    CHECK(w.frames(0, 2) == doctest::Approx(1.0));
    const auto zeros = frame_signal(clip_of(std::vector<double>(10, 0.0)), 4, 2);
    const auto wz = apply_window(zeros, WindowKind::kHamming);
    CHECK(wz.n_frames() == zeros.n_frames());
    CHECK(wz.frames.cols() == zeros.frames.cols());
    for (double v : wz.frames.data()) CHECK(v == 0.0);
  }
  SUBCASE("double windowing is a state error") {
    const auto f = frame_signal(clip_of(std::vector<double>(10, 0.1)), 4, 2);
    CHECK_THROWS_AS(apply_window(apply_window(f, WindowKind::kHann), WindowKind::kHann),
                    StateError);
  }
}

}  // namespace palmsense
