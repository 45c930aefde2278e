// Copyright 2026 The evos Authors
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

#pragma once

#include <png.h>

#include <csetjmp>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "evos/core.hpp"
#include "evos/image.hpp"

namespace evos {

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open file: " + path.string());
  }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

inline void write_file_bytes(const std::filesystem::path& path,
                             const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError("cannot write file: " + path.string());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw DataError("short write: " + path.string());
  }
}

namespace detail {

struct PngByteSource {
  const std::uint8_t* data = nullptr;
  std::size_t size = 0;
  std::size_t pos = 0;
};

inline void png_read_from_memory(png_structp png, png_bytep out, png_size_t len) {
  auto* src = static_cast<PngByteSource*>(png_get_io_ptr(png));
  if (src->pos + len > src->size) {
    png_error(png, "read past end of buffer");
  }
  std::copy(src->data + src->pos, src->data + src->pos + len, out);
  src->pos += len;
}

inline void png_write_to_vector(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + len);
}

inline void png_flush_noop(png_structp) {}

class PngReader {
public:
  explicit PngReader(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
      throw DataError("not a PNG file");
    }
    png_ = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    info_ = png_ ? png_create_info_struct(png_) : nullptr;
    if (!png_ || !info_) {
      throw Error("libpng allocation failed");
    }
    source_.data = bytes.data();
    source_.size = bytes.size();
    png_set_read_fn(png_, &source_, &png_read_from_memory);
  }

  ~PngReader() { png_destroy_read_struct(&png_, &info_, nullptr); }

  PngReader(const PngReader&) = delete;
  PngReader& operator=(const PngReader&) = delete;

  png_structp png() { return png_; }
  png_infop info() { return info_; }

private:
  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
  PngByteSource source_;
};

class PngWriter {
public:
  PngWriter() {
    png_ = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    info_ = png_ ? png_create_info_struct(png_) : nullptr;
    if (!png_ || !info_) {
      throw Error("libpng allocation failed");
    }
    png_set_write_fn(png_, &out_, &png_write_to_vector, &png_flush_noop);
  }

  ~PngWriter() { png_destroy_write_struct(&png_, &info_); }

  PngWriter(const PngWriter&) = delete;
  PngWriter& operator=(const PngWriter&) = delete;

  png_structp png() { return png_; }
  png_infop info() { return info_; }
  std::vector<std::uint8_t>& out() { return out_; }

private:
  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
  std::vector<std::uint8_t> out_;
};

// The frames below hold only trivially-destructible locals: libpng
// reports errors via longjmp, which must not skip C++ destructors.

inline bool png_read_header(png_structp png, png_infop info) noexcept {
  if (setjmp(png_jmpbuf(png))) return false;
  png_read_info(png, info);
  return true;
}

enum class PngReadMode { gray8, palette8, rgb8 };

inline bool png_read_pixels(png_structp png, png_infop info, PngReadMode mode,
                            std::size_t expected_rowbytes, png_bytep* rows) noexcept {
  if (setjmp(png_jmpbuf(png))) return false;
  const png_byte color_type = png_get_color_type(png, info);
  const png_byte bit_depth = png_get_bit_depth(png, info);
  switch (mode) {
    case PngReadMode::gray8:
      if (bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
      if (bit_depth == 16) png_set_strip_16(png);
      break;
    case PngReadMode::palette8:
      png_set_packing(png);  // raw indices, one byte each
      break;
    case PngReadMode::rgb8:
      if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
      if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
        png_set_expand_gray_1_2_4_to_8(png);
      }
      if (bit_depth == 16) png_set_strip_16(png);
      if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
      if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
        png_set_gray_to_rgb(png);
      }
      png_set_strip_alpha(png);
      break;
  }
  png_read_update_info(png, info);
  if (png_get_rowbytes(png, info) != expected_rowbytes) return false;
  png_read_image(png, rows);
  png_read_end(png, nullptr);
  return true;
}

inline bool png_write_pixels(png_structp png, png_infop info, int width, int height,
                             int color_type, const png_color* palette, int palette_size,
                             const std::uint8_t* pixels, std::size_t rowbytes) noexcept {
  if (setjmp(png_jmpbuf(png))) return false;
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  if (palette != nullptr) {
    png_set_PLTE(png, info, palette, palette_size);
  }
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(pixels + static_cast<std::size_t>(y) * rowbytes));
  }
  png_write_end(png, nullptr);
  return true;
}

}  // namespace detail

inline std::pair<int, int> png_dimensions(const std::vector<std::uint8_t>& bytes) {
  detail::PngReader reader(bytes);
  if (!detail::png_read_header(reader.png(), reader.info())) {
    throw DataError("malformed PNG header");
  }
  return {static_cast<int>(png_get_image_width(reader.png(), reader.info())),
          static_cast<int>(png_get_image_height(reader.png(), reader.info()))};
}

inline std::pair<int, int> png_dimensions_file(const std::filesystem::path& path) {
  return png_dimensions(read_file_bytes(path));
}

struct GrayPng {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

inline GrayPng decode_png_gray8(const std::vector<std::uint8_t>& bytes) {
  detail::PngReader reader(bytes);
  if (!detail::png_read_header(reader.png(), reader.info())) {
    throw DataError("malformed grayscale PNG");
  }
  if (png_get_color_type(reader.png(), reader.info()) != PNG_COLOR_TYPE_GRAY) {
    throw DataError("expected grayscale PNG");
  }
  GrayPng result;
  result.width = static_cast<int>(png_get_image_width(reader.png(), reader.info()));
  result.height = static_cast<int>(png_get_image_height(reader.png(), reader.info()));
  result.pixels.resize(static_cast<std::size_t>(result.width) *
                       static_cast<std::size_t>(result.height));
  std::vector<png_bytep> rows(static_cast<std::size_t>(result.height));
  for (int y = 0; y < result.height; ++y) {
    rows[static_cast<std::size_t>(y)] =
        result.pixels.data() + static_cast<std::size_t>(y) * result.width;
  }
  if (!detail::png_read_pixels(reader.png(), reader.info(), detail::PngReadMode::gray8,
                               static_cast<std::size_t>(result.width), rows.data())) {
    throw DataError("malformed grayscale PNG");
  }
  return result;
}

inline std::vector<std::uint8_t> encode_png_gray8(int width, int height,
                                                  const std::vector<std::uint8_t>& pixels) {
  if (pixels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw ConfigError("gray PNG pixel count does not match dimensions");
  }
  detail::PngWriter writer;
  if (!detail::png_write_pixels(writer.png(), writer.info(), width, height,
                                PNG_COLOR_TYPE_GRAY, nullptr, 0, pixels.data(),
                                static_cast<std::size_t>(width))) {
    throw Error("PNG encode failed");
  }
  return std::move(writer.out());
}

struct PalettePng {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> indices;
  std::vector<Rgb> palette;
};

inline PalettePng decode_png_palette(const std::vector<std::uint8_t>& bytes) {
  detail::PngReader reader(bytes);
  if (!detail::png_read_header(reader.png(), reader.info())) {
    throw DataError("malformed palette PNG");
  }
  if (png_get_color_type(reader.png(), reader.info()) != PNG_COLOR_TYPE_PALETTE) {
    throw DataError("expected palette-indexed PNG");
  }
  PalettePng result;
  result.width = static_cast<int>(png_get_image_width(reader.png(), reader.info()));
  result.height = static_cast<int>(png_get_image_height(reader.png(), reader.info()));
  result.indices.resize(static_cast<std::size_t>(result.width) *
                        static_cast<std::size_t>(result.height));
  std::vector<png_bytep> rows(static_cast<std::size_t>(result.height));
  for (int y = 0; y < result.height; ++y) {
    rows[static_cast<std::size_t>(y)] =
        result.indices.data() + static_cast<std::size_t>(y) * result.width;
  }
  if (!detail::png_read_pixels(reader.png(), reader.info(), detail::PngReadMode::palette8,
                               static_cast<std::size_t>(result.width), rows.data())) {
    throw DataError("malformed palette PNG");
  }
  png_colorp palette = nullptr;
  int palette_size = 0;
  png_get_PLTE(reader.png(), reader.info(), &palette, &palette_size);
  for (int i = 0; i < palette_size; ++i) {
    result.palette.push_back(Rgb{palette[i].red, palette[i].green, palette[i].blue});
  }
  return result;
}

inline std::vector<std::uint8_t> encode_png_palette(int width, int height,
                                                    const std::vector<std::uint8_t>& indices,
                                                    const std::vector<Rgb>& palette) {
  if (indices.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw ConfigError("palette PNG index count does not match dimensions");
  }
  if (palette.empty() || palette.size() > 256) {
    throw ConfigError("palette size must be in 1..256");
  }
  for (std::uint8_t idx : indices) {
    if (idx >= palette.size()) {
      throw ConfigError("palette index out of range");
    }
  }
  std::vector<png_color> colors(palette.size());
  for (std::size_t i = 0; i < palette.size(); ++i) {
    colors[i] = png_color{palette[i].r, palette[i].g, palette[i].b};
  }
  detail::PngWriter writer;
  if (!detail::png_write_pixels(writer.png(), writer.info(), width, height,
                                PNG_COLOR_TYPE_PALETTE, colors.data(),
                                static_cast<int>(colors.size()), indices.data(),
                                static_cast<std::size_t>(width))) {
    throw Error("PNG encode failed");
  }
  return std::move(writer.out());
}

/// Decode any PNG color type to 8-bit RGB.
inline Image decode_png_rgb8(const std::vector<std::uint8_t>& bytes) {
  detail::PngReader reader(bytes);
  if (!detail::png_read_header(reader.png(), reader.info())) {
    throw DataError("malformed PNG");
  }
  Image image(static_cast<int>(png_get_image_width(reader.png(), reader.info())),
              static_cast<int>(png_get_image_height(reader.png(), reader.info())));
  const std::size_t rowbytes = static_cast<std::size_t>(image.width) * 3;
  std::vector<png_bytep> rows(static_cast<std::size_t>(image.height));
  for (int y = 0; y < image.height; ++y) {
    rows[static_cast<std::size_t>(y)] =
        image.pixels.data() + static_cast<std::size_t>(y) * rowbytes;
  }
  if (!detail::png_read_pixels(reader.png(), reader.info(), detail::PngReadMode::rgb8, rowbytes,
                               rows.data())) {
    throw DataError("malformed PNG");
  }
  return image;
}

inline std::vector<std::uint8_t> encode_png_rgb8(const Image& image) {
  detail::PngWriter writer;
  if (!detail::png_write_pixels(writer.png(), writer.info(), image.width, image.height,
                                PNG_COLOR_TYPE_RGB, nullptr, 0, image.pixels.data(),
                                static_cast<std::size_t>(image.width) * 3)) {
    throw Error("PNG encode failed");
  }
  return std::move(writer.out());
}

inline void write_png_gray8(const std::filesystem::path& path, int width, int height,
                            const std::vector<std::uint8_t>& pixels) {
  write_file_bytes(path, encode_png_gray8(width, height, pixels));
}

inline GrayPng read_png_gray8(const std::filesystem::path& path) {
  return decode_png_gray8(read_file_bytes(path));
}

inline void write_png_palette(const std::filesystem::path& path, int width, int height,
                              const std::vector<std::uint8_t>& indices,
                              const std::vector<Rgb>& palette) {
  write_file_bytes(path, encode_png_palette(width, height, indices, palette));
}

inline PalettePng read_png_palette(const std::filesystem::path& path) {
  return decode_png_palette(read_file_bytes(path));
}

inline void write_png_rgb8(const std::filesystem::path& path, const Image& image) {
  write_file_bytes(path, encode_png_rgb8(image));
}

inline Image read_png_rgb8(const std::filesystem::path& path) {
  return decode_png_rgb8(read_file_bytes(path));
}

}  // namespace evos
