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

#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include <doctest.h>

#include "oracles.h"
#include "palmsense/error.h"
#include "palmsense/imaging.h"

namespace palmsense {
namespace {

FeatureMatrix matrix(std::size_t rows, std::size_t cols, double fill,
                     FeatureKind kind = FeatureKind::kMfcc,
                     const std::string& id = "clip") {
  FeatureMatrix m;
  m.values = RealMatrix(rows, cols, fill);
  m.kind = kind;
  m.clip_id = id;
  return m;
}

FeatureMatrix random_matrix(std::uint64_t seed, std::size_t rows, std::size_t cols) {
  std::mt19937_64 gen(seed);
  FeatureMatrix m = matrix(rows, cols, 0.0);
  m.values.data() = oracle::random_vector(gen, rows * cols, -40.0, 10.0);
  return m;
}

Rgb gray(std::uint8_t g) { return {g, g, g}; }

}  // namespace

TEST_CASE("colormap names") {
  CHECK(parse_colormap("grayscale") == Colormap::kGrayscale);
  CHECK(parse_colormap("viridis") == Colormap::kViridis);
  CHECK_FALSE(parse_colormap("jet").has_value());
  CHECK(to_string(Colormap::kViridis) == "viridis");
}

TEST_CASE("grayscale map endpoints and clamping") {
  CHECK(apply_colormap(Colormap::kGrayscale, 0.0) == gray(0));
  CHECK(apply_colormap(Colormap::kGrayscale, 1.0) == gray(255));
  CHECK(apply_colormap(Colormap::kGrayscale, 0.5) == gray(128));
  CHECK(apply_colormap(Colormap::kGrayscale, -3.0) == gray(0));
  CHECK(apply_colormap(Colormap::kGrayscale, 7.0) == gray(255));
  // Viridis runs dark purple (68,1,84) to yellow (253,231,37); the fit is
  // within a few levels of those.
  const Rgb lo = apply_colormap(Colormap::kViridis, 0.0);
  const Rgb hi = apply_colormap(Colormap::kViridis, 1.0);
  CHECK(std::abs(lo[0] - 68) <= 4);
  CHECK(std::abs(lo[1] - 1) <= 4);
  CHECK(std::abs(lo[2] - 84) <= 4);
  CHECK(std::abs(hi[0] - 253) <= 4);
  CHECK(std::abs(hi[1] - 231) <= 4);
  CHECK(std::abs(hi[2] - 37) <= 4);
}

TEST_CASE("constant matrix renders mid-gray") {
  const auto img = render(matrix(20, 98, -7.25), Colormap::kGrayscale);
  CHECK(img.pixels.height() == kImageSize);
  CHECK(img.pixels.width() == kImageSize);
  for (std::size_t r = 0; r < kImageSize; ++r) {
    for (std::size_t c = 0; c < kImageSize; ++c) REQUIRE(img.pixels.at(r, c) == gray(128));
  }
}

TEST_CASE("2x2 checkerboard gives four quadrants with row 0 at the bottom") {
  FeatureMatrix m = matrix(2, 2, 0.0, FeatureKind::kBfcc, "board");
  m.values(0, 0) = 0.0;
  m.values(0, 1) = 1.0;
  m.values(1, 0) = 1.0;
  m.values(1, 1) = 0.0;
  const auto img = render(m, Colormap::kGrayscale);
  CHECK(img.kind == FeatureKind::kBfcc);
  CHECK(img.clip_id == "board");
  const std::size_t h = kImageSize / 2;
  for (std::size_t r = 0; r < kImageSize; ++r) {
    for (std::size_t c = 0; c < kImageSize; ++c) {
      const bool top = r < h;
      const bool left = c < h;
      // Top row of the image is coefficient 1.
      const double v = top ? (left ? 1.0 : 0.0) : (left ? 0.0 : 1.0);
      REQUIRE(img.pixels.at(r, c) == gray(v > 0.5 ? 255 : 0));
    }
  }
}

TEST_CASE("nearest-neighbor oracle on a random matrix") {
  const auto m = random_matrix(11, 20, 1999);
  const auto img = render(m, Colormap::kGrayscale);
  double lo = m.values.data()[0], hi = lo;
  for (double v : m.values.data()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (std::size_t r = 0; r < kImageSize; r += 7) {
    for (std::size_t c = 0; c < kImageSize; c += 5) {
      const std::size_t row = 19 - (r * 20) / kImageSize;
      const std::size_t col = (c * 1999) / kImageSize;
      const double v = (m.values(row, col) - lo) / (hi - lo);
      CHECK(static_cast<int>(img.pixels.at(r, c)[0]) ==
            static_cast<int>(std::lround(v * 255.0)));
    }
  }
}

TEST_CASE("rendering is invariant to positive affine rescaling") {
  const auto m = random_matrix(12, 20, 300);
  FeatureMatrix scaled = m;
  // Power-of-two scale and small integer shift keep the arithmetic exact.
  for (double& v : scaled.values.data()) v = 4.0 * v + 64.0;
  for (Colormap cmap : {Colormap::kGrayscale, Colormap::kViridis}) {
    CHECK(render(m, cmap).pixels == render(scaled, cmap).pixels);
  }
}

TEST_CASE("render rejects empty and non-finite matrices") {
  FeatureMatrix empty;
  CHECK_THROWS_AS(render(empty, Colormap::kGrayscale), InputError);
  auto m = matrix(3, 3, 1.0);
  m.values(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(render(m, Colormap::kGrayscale), InputError);
  m.values(1, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(render(m, Colormap::kGrayscale), InputError);
}

TEST_CASE("combine places images side by side and split inverts it") {
  const auto a = render(random_matrix(1, 20, 100), Colormap::kGrayscale);
  auto b_m = random_matrix(2, 20, 100);
  b_m.kind = FeatureKind::kCqcc;
  const auto b = render(b_m, Colormap::kViridis);
  auto c_m = matrix(20, 100, 3.0, FeatureKind::kBfcc);
  const auto c = render(c_m, Colormap::kGrayscale);

  const auto combined = combine({b, a, c});
  CHECK(combined.pixels.height() == 224);
  CHECK(combined.pixels.width() == 672);
  CHECK(combined.order ==
        std::vector<FeatureKind>{FeatureKind::kCqcc, FeatureKind::kMfcc, FeatureKind::kBfcc});
  CHECK(combined.clip_id == "clip");
  for (std::size_t r = 0; r < 224; r += 13) {
    for (std::size_t col = 0; col < 224; col += 11) {
      CHECK(combined.pixels.at(r, col) == b.pixels.at(r, col));
      CHECK(combined.pixels.at(r, 224 + col) == a.pixels.at(r, col));
      CHECK(combined.pixels.at(r, 448 + col) == c.pixels.at(r, col));
    }
  }
  const auto parts = split(combined);
  REQUIRE(parts.size() == 3);
  CHECK(parts[0].pixels == b.pixels);
  CHECK(parts[1].pixels == a.pixels);
  CHECK(parts[2].pixels == c.pixels);
  CHECK(parts[0].kind == FeatureKind::kCqcc);
  CHECK(parts[2].clip_id == "clip");

  SUBCASE("a single image passes through unchanged") {
    const auto one = combine({a});
    CHECK(one.pixels == a.pixels);
    CHECK(one.order.size() == 1);
  }
}

TEST_CASE("combine and split errors") {
  CHECK_THROWS_AS(combine({}), InputError);
  const auto a = render(matrix(2, 2, 0.0, FeatureKind::kMfcc, "x"), Colormap::kGrayscale);
  const auto b = render(matrix(2, 2, 0.0, FeatureKind::kMfcc, "y"), Colormap::kGrayscale);
  CHECK_THROWS_AS(combine({a, b}), InputError);
  FeatureImage odd = a;
  odd.pixels = RgbImage(224, 200);
  CHECK_THROWS_AS(combine({a, odd}), InputError);
  CombinedImage bad = combine({a});
  bad.order.push_back(FeatureKind::kCqcc);
  CHECK_THROWS_AS(split(bad), InputError);
}

TEST_CASE("PNG round trip keeps pixels and text chunks") {
  oracle::TempDir dir("png");
  const auto img = render(random_matrix(13, 20, 100), Colormap::kViridis);
  const auto combined = combine({img, img});
  const PngText text = {{"clip_id", "infested_0001"}, {"params_digest", "0123abcd"}};
  const auto path = dir / "x.png";
  save_png(combined.pixels, path, text);
  const auto back = load_png(path);
  CHECK(back.image == combined.pixels);
  CHECK(back.text == text);
  // Overwrite in place.
  save_png(img.pixels, path);
  const auto again = load_png(path);
  CHECK(again.image == img.pixels);
  CHECK(again.text.empty());
}

TEST_CASE("PNG errors") {
  oracle::TempDir dir("pngerr");
  CHECK_THROWS_AS(load_png(dir / "missing.png"), IoError);
  {
    std::ofstream out(dir / "junk.png", std::ios::binary);
    out << "definitely not a png";
  }
  CHECK_THROWS_AS(load_png(dir / "junk.png"), FormatError);
  // Valid signature, truncated body.
  const auto img = render(matrix(2, 2, 0.0), Colormap::kGrayscale);
  save_png(img.pixels, dir / "ok.png");
  std::ifstream in(dir / "ok.png", std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), {});
  {
    std::ofstream out(dir / "cut.png", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  CHECK_THROWS_AS(load_png(dir / "cut.png"), Error);
  CHECK_THROWS_AS(save_png(img.pixels, dir / "no_such_dir" / "x.png"), IoError);
}

TEST_CASE("image_path uses the clip id as the stem") {
  CHECK(image_path("out", "clean_0003") == std::filesystem::path("out/clean_0003.png"));
  CHECK(image_path("out", "clean_0003").stem() == "clean_0003");
}

}  // namespace palmsense
