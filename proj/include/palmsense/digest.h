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

#ifndef PALMSENSE_DIGEST_H_
#define PALMSENSE_DIGEST_H_

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace palmsense {

// Accumulates key=value pairs into a 64-bit FNV-1a hash. Reals are encoded
// with 17 significant digits so the digest is stable across runs and builds.
class Digest {
 public:
  Digest& add(std::string_view key, std::string_view value) {
    mix(key);
    mix("=");
    mix(value);
    mix(";");
    return *this;
  }
  Digest& add(std::string_view key, double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return add(key, std::string_view(buf));
  }
  Digest& add(std::string_view key, long long value) {
    return add(key, std::string_view(std::to_string(value)));
  }
  Digest& add(std::string_view key, int value) {
    return add(key, static_cast<long long>(value));
  }
  Digest& add(std::string_view key, std::size_t value) {
    return add(key, static_cast<long long>(value));
  }
  Digest& add(std::string_view key, bool value) {
    return add(key, std::string_view(value ? "true" : "false"));
  }
  Digest& add(std::string_view key, const char* value) {
    return add(key, std::string_view(value));
  }
  Digest& add(std::string_view key, const std::string& value) {
    return add(key, std::string_view(value));
  }

  std::uint64_t value() const { return hash_; }

  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(hash_));
    return buf;
  }

 private:
  void mix(std::string_view s) {
    for (unsigned char c : s) {
      hash_ ^= c;
      hash_ *= 0x100000001b3ULL;
    }
  }

  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

}  // namespace palmsense

#endif  // PALMSENSE_DIGEST_H_
