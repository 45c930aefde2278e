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

#include <catch2/catch_amalgamated.hpp>

#include "evos/kfc.hpp"

namespace {

evos::Image solid(int w, int h, evos::Rgb color) { return evos::Image(w, h, color); }

std::vector<evos::Image> color_clip(int count, int w, int h) {
  std::vector<evos::Image> frames;
  for (int i = 0; i < count; ++i) {
    frames.push_back(solid(w, h, evos::Rgb{static_cast<std::uint8_t>(20 * i + 10),
                                           static_cast<std::uint8_t>(255 - 20 * i),
                                           static_cast<std::uint8_t>(7 * i)}));
  }
  return frames;
}

}  // namespace

TEST_CASE("mosaic tile rects tile the canvas row-major") {
  const auto r0 = evos::mosaic_tile_rect(2, 0, 64, 64);
  CHECK(r0.x == 0);
  CHECK(r0.y == 0);
  CHECK(r0.width == 32);
  CHECK(r0.height == 32);

  const auto r3 = evos::mosaic_tile_rect(2, 3, 64, 64);
  CHECK(r3.x == 32);
  CHECK(r3.y == 32);
  CHECK(r3.width == 32);
  CHECK(r3.height == 32);

  const auto center = evos::mosaic_tile_rect(3, 4, 96, 96);
  CHECK(center.x == 32);
  CHECK(center.y == 32);
  CHECK(center.width == 32);
  CHECK(center.height == 32);

  CHECK_THROWS_AS(evos::mosaic_tile_rect(2, 4, 64, 64), evos::ConfigError);
  CHECK_THROWS_AS(evos::mosaic_tile_rect(2, -1, 64, 64), evos::ConfigError);
}

TEST_CASE("compress_clip keeps the key frame intact and tiles the rest") {
  const auto frames = color_clip(5, 64, 64);  // c=5 -> g=2
  const evos::CompositeFrame composite = evos::compress_clip(0, frames, 2);
  CHECK(composite.key_image == frames[0]);  // byte equality
  CHECK(composite.mosaic.width == 64);
  CHECK(composite.mosaic.height == 64);
  CHECK(composite.tile_width == 32);
  CHECK(composite.tile_height == 32);

  // each tile reads back as its source frame's solid color
  for (int tile = 0; tile < 4; ++tile) {
    const auto rect = evos::mosaic_tile_rect(2, tile, 64, 64);
    const evos::Rgb expected = frames[static_cast<std::size_t>(tile + 1)].at(0, 0);
    for (int y = rect.y; y < rect.y + rect.height; ++y) {
      for (int x = rect.x; x < rect.x + rect.width; ++x) {
        REQUIRE(composite.mosaic.at(x, y) == expected);
      }
    }
  }
}

TEST_CASE("compress_clip with a 3x3 grid places nine tiles in temporal order") {
  const auto frames = color_clip(10, 96, 48);  // c=10 -> g=3
  const evos::CompositeFrame composite = evos::compress_clip(2, frames, 3);
  CHECK(composite.clip_index == 2);
  CHECK(composite.tile_width == 32);
  CHECK(composite.tile_height == 16);
  for (int tile = 0; tile < 9; ++tile) {
    const auto rect =
        evos::mosaic_tile_rect(3, tile, composite.mosaic.width, composite.mosaic.height);
    const evos::Rgb expected = frames[static_cast<std::size_t>(tile + 1)].at(0, 0);
    REQUIRE(composite.mosaic.at(rect.x, rect.y) == expected);
    REQUIRE(composite.mosaic.at(rect.x + rect.width - 1, rect.y + rect.height - 1) == expected);
  }
}

TEST_CASE("identical frames make every tile equal the downscaled key") {
  std::vector<evos::Image> frames;
  evos::Image pattern(30, 21);
  for (int y = 0; y < 21; ++y) {
    for (int x = 0; x < 30; ++x) {
      pattern.set(x, y, evos::Rgb{static_cast<std::uint8_t>(x * 8),
                                  static_cast<std::uint8_t>(y * 11),
                                  static_cast<std::uint8_t>((x + y) * 3)});
    }
  }
  for (int i = 0; i < 5; ++i) frames.push_back(pattern);
  const evos::CompositeFrame composite = evos::compress_clip(0, frames, 2);
  const evos::Image reference =
      evos::area_downscale(pattern, composite.tile_width, composite.tile_height);
  for (int tile = 0; tile < 4; ++tile) {
    const auto rect =
        evos::mosaic_tile_rect(2, tile, composite.mosaic.width, composite.mosaic.height);
    for (int y = 0; y < rect.height; ++y) {
      for (int x = 0; x < rect.width; ++x) {
        REQUIRE(composite.mosaic.at(rect.x + x, rect.y + y) == reference.at(x, y));
      }
    }
  }
  // 30x21 is not divisible by 2: the right/bottom remainders stay black
  CHECK(composite.mosaic.at(29, 20) == evos::Rgb{0, 0, 0});
}

TEST_CASE("compress_clip validates its inputs") {
  CHECK_THROWS_AS(evos::compress_clip(0, color_clip(4, 16, 16), 2), evos::ConfigError);
  CHECK_THROWS_AS(evos::compress_clip(0, color_clip(5, 16, 16), 3), evos::ConfigError);
  auto mixed = color_clip(5, 16, 16);
  mixed[3] = solid(8, 16, evos::Rgb{1, 2, 3});
  CHECK_THROWS_AS(evos::compress_clip(0, mixed, 2), evos::DataError);
}

TEST_CASE("area_downscale averages exactly on aligned blocks") {
  evos::Image img(4, 2);
  img.set(0, 0, evos::Rgb{0, 0, 0});
  img.set(1, 0, evos::Rgb{100, 0, 0});
  img.set(0, 1, evos::Rgb{100, 0, 0});
  img.set(1, 1, evos::Rgb{200, 0, 0});
  img.set(2, 0, evos::Rgb{10, 20, 30});
  img.set(3, 0, evos::Rgb{10, 20, 30});
  img.set(2, 1, evos::Rgb{10, 20, 30});
  img.set(3, 1, evos::Rgb{10, 20, 30});
  const evos::Image out = evos::area_downscale(img, 2, 1);
  CHECK(out.at(0, 0) == evos::Rgb{100, 0, 0});  // (0+100+100+200)/4
  CHECK(out.at(1, 0) == evos::Rgb{10, 20, 30});
}
