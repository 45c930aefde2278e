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

#include <cstdint>
#include <vector>

#include "evos/core.hpp"

namespace evos {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb& a, const Rgb& b) {
    return a.r == b.r && a.g == b.g && a.b == b.b;
  }
};

/// 8-bit RGB image, row-major, (0,0) at the top-left.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // 3 bytes per pixel

  Image() = default;
  Image(int w, int h, Rgb fill_color = Rgb{}) : width(w), height(h) {
    if (w <= 0 || h <= 0) {
      throw ConfigError("image dimensions must be positive");
    }
    pixels.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3, 0);
    fill(fill_color);
  }

  std::size_t offset(int x, int y) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
            static_cast<std::size_t>(x)) *
           3;
  }

  Rgb at(int x, int y) const {
    const std::size_t o = offset(x, y);
    return Rgb{pixels[o], pixels[o + 1], pixels[o + 2]};
  }

  void set(int x, int y, Rgb c) {
    const std::size_t o = offset(x, y);
    pixels[o] = c.r;
    pixels[o + 1] = c.g;
    pixels[o + 2] = c.b;
  }

  void fill(Rgb c) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        set(x, y, c);
      }
    }
  }

  bool same_shape(const Image& other) const {
    return width == other.width && height == other.height;
  }

  friend bool operator==(const Image& a, const Image& b) {
    return a.width == b.width && a.height == b.height && a.pixels == b.pixels;
  }
};

}  // namespace evos
