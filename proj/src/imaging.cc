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

#include "palmsense/imaging.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "palmsense/error.h"

namespace palmsense {
namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(
      std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

// Polynomial fit of matplotlib's viridis; within about 4 levels of the
// reference table at the ends, closer in the middle.
Rgb viridis(double t) {
  static constexpr double c0[] = {0.2777273272234177, 0.005407344544966578,
                                  0.3340998053353061};
  static constexpr double c1[] = {0.1050930431085774, 1.404613529898575,
                                  1.384590162594685};
  static constexpr double c2[] = {-0.3308618287255563, 0.214847559468213,
                                  0.09509516302823659};
  static constexpr double c3[] = {-4.634230498983486, -5.799100973351585,
                                  -19.33244095627987};
  static constexpr double c4[] = {6.228269936347081, 14.17993336680509,
                                  56.69055260068105};
  static constexpr double c5[] = {4.776384997670288, -13.74514537774601,
                                  -65.35303263337234};
  static constexpr double c6[] = {-5.435455855934631, 4.645852612178535,
                                  26.3124352495832};
  Rgb out{};
  for (int i = 0; i < 3; ++i) {
    const double v =
        c0[i] +
        t * (c1[i] + t * (c2[i] + t * (c3[i] + t * (c4[i] + t * (c5[i] + t * c6[i])))));
    out[static_cast<std::size_t>(i)] = to_byte(v);
  }
  return out;
}

}  // namespace

std::string_view to_string(Colormap cmap) {
  return cmap == Colormap::kGrayscale ? "grayscale" : "viridis";
}

std::optional<Colormap> parse_colormap(std::string_view name) {
  if (name == "grayscale") return Colormap::kGrayscale;
  if (name == "viridis") return Colormap::kViridis;
  return std::nullopt;
}

Rgb apply_colormap(Colormap cmap, double v) {
  v = std::clamp(v, 0.0, 1.0);
  if (cmap == Colormap::kViridis) return viridis(v);
  const std::uint8_t g = to_byte(v);
  return {g, g, g};
}

FeatureImage render(const FeatureMatrix& m, Colormap cmap) {
  if (m.values.empty()) {
    throw InputError("cannot render an empty feature matrix");
  }
  const auto& data = m.values.data();
  for (double v : data) {
    if (!std::isfinite(v)) throw InputError("feature matrix is not finite");
  }
  const auto [lo_it, hi_it] = std::minmax_element(data.begin(), data.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;

  const std::size_t n_rows = m.n_coeffs();
  const std::size_t n_cols = m.n_frames();
  FeatureImage img;
  img.kind = m.kind;
  img.clip_id = m.clip_id;
  img.pixels = RgbImage(kImageSize, kImageSize);
  for (std::size_t r = 0; r < kImageSize; ++r) {
    // Top pixel row shows the highest coefficient.
    const std::size_t src_row = n_rows - 1 - (r * n_rows) / kImageSize;
    for (std::size_t c = 0; c < kImageSize; ++c) {
      const std::size_t src_col = (c * n_cols) / kImageSize;
      const double v =
          range > 0.0 ? (m.values(src_row, src_col) - lo) / range : 0.5;
      img.pixels.set(r, c, apply_colormap(cmap, v));
    }
  }
  return img;
}

CombinedImage combine(const std::vector<FeatureImage>& images) {
  if (images.empty()) throw InputError("combine needs at least one image");
  const std::string& clip_id = images.front().clip_id;
  for (const auto& img : images) {
    if (img.clip_id != clip_id) {
      throw InputError("combine: clip ids differ ('" + clip_id + "' vs '" +
                       img.clip_id + "')");
    }
    if (img.pixels.height() != kImageSize || img.pixels.width() != kImageSize) {
      throw InputError("combine: constituent image is not 224 x 224");
    }
  }
  CombinedImage out;
  out.clip_id = clip_id;
  out.pixels = RgbImage(kImageSize, kImageSize * images.size());
  const std::size_t row_bytes = kImageSize * 3;
  const std::size_t out_row_bytes = out.pixels.width() * 3;
  for (std::size_t i = 0; i < images.size(); ++i) {
    out.order.push_back(images[i].kind);
    const auto& src = images[i].pixels.bytes();
    auto& dst = out.pixels.bytes();
    for (std::size_t r = 0; r < kImageSize; ++r) {
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(r * row_bytes),
                  row_bytes,
                  dst.begin() + static_cast<std::ptrdiff_t>(
                                    r * out_row_bytes + i * row_bytes));
    }
  }
  return out;
}

std::vector<FeatureImage> split(const CombinedImage& image) {
  if (image.pixels.height() != kImageSize ||
      image.pixels.width() != kImageSize * image.order.size()) {
    throw InputError("combined image size does not match its feature order");
  }
  std::vector<FeatureImage> out;
  const std::size_t row_bytes = kImageSize * 3;
  const std::size_t in_row_bytes = image.pixels.width() * 3;
  for (std::size_t i = 0; i < image.order.size(); ++i) {
    FeatureImage slab;
    slab.kind = image.order[i];
    slab.clip_id = image.clip_id;
    slab.pixels = RgbImage(kImageSize, kImageSize);
    for (std::size_t r = 0; r < kImageSize; ++r) {
      std::copy_n(image.pixels.bytes().begin() +
                      static_cast<std::ptrdiff_t>(r * in_row_bytes +
                                                  i * row_bytes),
                  row_bytes,
                  slab.pixels.bytes().begin() +
                      static_cast<std::ptrdiff_t>(r * row_bytes));
    }
    out.push_back(std::move(slab));
  }
  return out;
}

std::filesystem::path image_path(const std::filesystem::path& dir,
                                 const std::string& clip_id) {
  return dir / (clip_id + ".png");
}

}  // namespace palmsense
