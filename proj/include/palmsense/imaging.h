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

// Axis-free rendering of feature matrices and their horizontal
// concatenation into one combined image per clip.

#ifndef PALMSENSE_IMAGING_H_
#define PALMSENSE_IMAGING_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "palmsense/features.h"

namespace palmsense {

inline constexpr std::size_t kImageSize = 224;

using Rgb = std::array<std::uint8_t, 3>;

// 8-bit RGB raster, row 0 at the top.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(std::size_t height, std::size_t width)
      : height_(height), width_(width), pixels_(height * width * 3, 0) {}

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  bool empty() const { return pixels_.empty(); }

  Rgb at(std::size_t r, std::size_t c) const {
    const std::size_t i = (r * width_ + c) * 3;
    return {pixels_[i], pixels_[i + 1], pixels_[i + 2]};
  }
  void set(std::size_t r, std::size_t c, Rgb v) {
    const std::size_t i = (r * width_ + c) * 3;
    pixels_[i] = v[0];
    pixels_[i + 1] = v[1];
    pixels_[i + 2] = v[2];
  }

  const std::vector<std::uint8_t>& bytes() const { return pixels_; }
  std::vector<std::uint8_t>& bytes() { return pixels_; }

  bool operator==(const RgbImage&) const = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<std::uint8_t> pixels_;
};

enum class Colormap { kGrayscale, kViridis };

std::string_view to_string(Colormap cmap);
std::optional<Colormap> parse_colormap(std::string_view name);

Rgb apply_colormap(Colormap cmap, double v);

struct FeatureImage {
  RgbImage pixels;  // kImageSize x kImageSize
  FeatureKind kind = FeatureKind::kMfcc;
  std::string clip_id;
};

struct CombinedImage {
  RgbImage pixels;  // kImageSize x (kImageSize * order.size())
  std::vector<FeatureKind> order;
  std::string clip_id;
};

// Min-max normalizes the matrix (constant matrices map to 0.5), resizes it
// nearest-neighbor to 224 x 224 with coefficient 0 at the bottom, and
// colors each pixel.
FeatureImage render(const FeatureMatrix& m, Colormap cmap);

CombinedImage combine(const std::vector<FeatureImage>& images);

// Inverse of combine: the 224-wide slab of each constituent.
std::vector<FeatureImage> split(const CombinedImage& image);

// PNG text chunks carried alongside the pixels.
using PngText = std::map<std::string, std::string>;

// 8-bit RGB PNG; an existing file is replaced.
void save_png(const RgbImage& image, const std::filesystem::path& path,
              const PngText& text = {});

struct LoadedPng {
  RgbImage image;
  PngText text;
};

LoadedPng load_png(const std::filesystem::path& path);

// <dir>/<clip_id>.png
std::filesystem::path image_path(const std::filesystem::path& dir,
                                 const std::string& clip_id);

}  // namespace palmsense

#endif  // PALMSENSE_IMAGING_H_
