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
#include "evos/image.hpp"

namespace evos {

struct TileRect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
};

/// A clip compacted to its key frame plus one grid x grid mosaic of the
/// remaining frames, downscaled and placed in temporal row-major order.
struct CompositeFrame {
  int clip_index = 0;
  Image key_image;
  Image mosaic;
  int tile_width = 0;
  int tile_height = 0;
};

/// Area-average downscale with integer accumulation (round half up), so
/// outputs are bit-stable across runs. Requires out dims <= source dims.
inline Image area_downscale(const Image& src, int out_width, int out_height) {
  if (out_width <= 0 || out_height <= 0 || out_width > src.width || out_height > src.height) {
    throw ConfigError("downscale dimensions must be positive and no larger than the source");
  }
  Image out(out_width, out_height);
  for (int ty = 0; ty < out_height; ++ty) {
    const int y0 = static_cast<int>(static_cast<std::int64_t>(ty) * src.height / out_height);
    int y1 = static_cast<int>(static_cast<std::int64_t>(ty + 1) * src.height / out_height);
    if (y1 <= y0) y1 = y0 + 1;
    for (int tx = 0; tx < out_width; ++tx) {
      const int x0 = static_cast<int>(static_cast<std::int64_t>(tx) * src.width / out_width);
      int x1 = static_cast<int>(static_cast<std::int64_t>(tx + 1) * src.width / out_width);
      if (x1 <= x0) x1 = x0 + 1;
      std::uint64_t sum_r = 0, sum_g = 0, sum_b = 0;
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          const Rgb c = src.at(x, y);
          sum_r += c.r;
          sum_g += c.g;
          sum_b += c.b;
        }
      }
      const std::uint64_t area = static_cast<std::uint64_t>(x1 - x0) *
                                 static_cast<std::uint64_t>(y1 - y0);
      out.set(tx, ty,
              Rgb{static_cast<std::uint8_t>((sum_r + area / 2) / area),
                  static_cast<std::uint8_t>((sum_g + area / 2) / area),
                  static_cast<std::uint8_t>((sum_b + area / 2) / area)});
    }
  }
  return out;
}

/// Pixel rectangle occupied by `tile_index` in a row-major grid x grid
/// mosaic of the given dimensions. Tiles are floor-sized; any remainder
/// on the right/bottom edges stays outside every tile.
inline TileRect mosaic_tile_rect(int grid, int tile_index, int mosaic_width, int mosaic_height) {
  if (grid < 1) {
    throw ConfigError("mosaic grid must be >= 1");
  }
  if (tile_index < 0 || tile_index >= grid * grid) {
    throw ConfigError("mosaic tile index out of range");
  }
  const int tile_w = mosaic_width / grid;
  const int tile_h = mosaic_height / grid;
  const int row = tile_index / grid;
  const int col = tile_index % grid;
  return TileRect{col * tile_w, row * tile_h, tile_w, tile_h};
}

/// Compacts a clip of grid^2 + 1 frames: the first frame is kept intact
/// as the key image; the remaining grid^2 frames are downscaled by 1/grid
/// and tiled left-to-right, top-to-bottom in temporal order on a canvas
/// of the original frame size (right/bottom remainders stay black).
inline CompositeFrame compress_clip(int clip_index, const std::vector<Image>& frames, int grid) {
  if (grid < 1) {
    throw ConfigError("mosaic grid must be >= 1");
  }
  const int expected = grid * grid + 1;
  if (static_cast<int>(frames.size()) != expected) {
    throw ConfigError("clip must have grid^2 + 1 frames");
  }
  for (const Image& frame : frames) {
    if (!frame.same_shape(frames.front())) {
      throw DataError("clip frames have mismatched dimensions");
    }
  }
  CompositeFrame composite;
  composite.clip_index = clip_index;
  composite.key_image = frames.front();
  composite.tile_width = frames.front().width / grid;
  composite.tile_height = frames.front().height / grid;
  if (composite.tile_width < 1 || composite.tile_height < 1) {
    throw ConfigError("frames are too small for the mosaic grid");
  }
  composite.mosaic = Image(frames.front().width, frames.front().height);
  for (int i = 1; i < expected; ++i) {
    const Image tile = area_downscale(frames[static_cast<std::size_t>(i)], composite.tile_width,
                                      composite.tile_height);
    const TileRect rect =
        mosaic_tile_rect(grid, i - 1, composite.mosaic.width, composite.mosaic.height);
    for (int y = 0; y < tile.height; ++y) {
      for (int x = 0; x < tile.width; ++x) {
        composite.mosaic.set(rect.x + x, rect.y + y, tile.at(x, y));
      }
    }
  }
  return composite;
}

}  // namespace evos
