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

// Thin libpng front end. libpng reports errors by longjmp, so every
// function keeps C++ objects with destructors outside the setjmp region and
// converts the jump into an IoError afterwards.

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "palmsense/error.h"
#include "palmsense/imaging.h"

namespace palmsense {
namespace {

struct PngErrorState {
  char message[256] = {0};
};

void on_png_error(png_structp png, png_const_charp msg) {
  auto* state = static_cast<PngErrorState*>(png_get_error_ptr(png));
  if (state != nullptr) {
    std::snprintf(state->message, sizeof(state->message), "%s", msg);
  }
  png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

class File {
 public:
  File(const std::filesystem::path& path, const char* mode)
      : f_(std::fopen(path.c_str(), mode)) {}
  ~File() {
    if (f_ != nullptr) std::fclose(f_);
  }
  File(const File&) = delete;
  File& operator=(const File&) = delete;

  std::FILE* get() const { return f_; }

  // Closes explicitly so write errors surface; returns false on failure.
  bool close() {
    const int rc = std::fclose(f_);
    f_ = nullptr;
    return rc == 0;
  }

 private:
  std::FILE* f_;
};

// Only plain pointers live in this frame, so nothing is clobbered by the
// longjmp out of libpng. Returns false with err->message set on failure.
bool write_rows(std::FILE* f, std::size_t width, std::size_t height,
                png_bytep* rows, png_text* chunks, int n_chunks,
                PngErrorState* err) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, err,
                                            on_png_error, on_png_warning);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, f);
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width),
               static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  if (n_chunks > 0) png_set_text(png, info, chunks, n_chunks);
  png_set_rows(png, info, rows);
  png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace

void save_png(const RgbImage& image, const std::filesystem::path& path,
              const PngText& text) {
  if (image.empty()) throw InputError("cannot save an empty image");
  File file(path, "wb");
  if (file.get() == nullptr) throw IoError("cannot open " + path.string());

  // Everything libpng touches is prepared before setjmp.
  std::vector<png_bytep> rows(image.height());
  auto& bytes = const_cast<std::vector<std::uint8_t>&>(image.bytes());
  for (std::size_t r = 0; r < image.height(); ++r) {
    rows[r] = bytes.data() + r * image.width() * 3;
  }
  std::vector<std::string> keys;
  std::vector<std::string> values;
  for (const auto& [k, v] : text) {
    keys.push_back(k);
    values.push_back(v);
  }
  std::vector<png_text> chunks(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    std::memset(&chunks[i], 0, sizeof(png_text));
    chunks[i].compression = PNG_TEXT_COMPRESSION_NONE;
    chunks[i].key = keys[i].data();
    chunks[i].text = values[i].data();
    chunks[i].text_length = values[i].size();
  }

  PngErrorState err;
  if (!write_rows(file.get(), image.width(), image.height(), rows.data(),
                  chunks.data(), static_cast<int>(chunks.size()), &err)) {
    throw IoError("PNG write failed for " + path.string() + ": " + err.message);
  }
  if (!file.close()) throw IoError("write failed: " + path.string());
}

LoadedPng load_png(const std::filesystem::path& path) {
  File file(path, "rb");
  if (file.get() == nullptr) throw IoError("cannot open " + path.string());

  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw FormatError("not a PNG file: " + path.string());
  }

  PngErrorState err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err,
                                           on_png_error, on_png_warning);
  if (png == nullptr) throw IoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("PNG read failed for " + path.string() + ": " +
                      err.message);
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_png(png, info,
               PNG_TRANSFORM_STRIP_16 | PNG_TRANSFORM_STRIP_ALPHA |
                   PNG_TRANSFORM_PACKING | PNG_TRANSFORM_EXPAND |
                   PNG_TRANSFORM_GRAY_TO_RGB,
               nullptr);
  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  png_bytepp rows = png_get_rows(png, info);
  png_textp text_ptr = nullptr;
  const int n_text = png_get_text(png, info, &text_ptr, nullptr);

  // No more libpng calls can jump from here on.
  LoadedPng out;
  out.image = RgbImage(height, width);
  auto& dst = out.image.bytes();
  for (png_uint_32 r = 0; r < height; ++r) {
    std::memcpy(dst.data() + static_cast<std::size_t>(r) * width * 3, rows[r],
                static_cast<std::size_t>(width) * 3);
  }
  for (int i = 0; i < n_text; ++i) {
    out.text[text_ptr[i].key] =
        std::string(text_ptr[i].text, text_ptr[i].text_length);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

}  // namespace palmsense
