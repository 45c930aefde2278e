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

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "evos/core.hpp"

namespace evos {

/// Column-major run-length encoding of a binary mask. Runs alternate
/// 0-run, 1-run, 0-run, ... and the leading 0-run may be empty; every
/// other run is strictly positive (canonical form).
struct RleMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint32_t> runs;
};

inline RleMask rle_encode(const BinaryMask& mask) {
  RleMask rle;
  rle.width = mask.width();
  rle.height = mask.height();
  bool current = false;
  std::uint32_t run = 0;
  for (int x = 0; x < mask.width(); ++x) {
    for (int y = 0; y < mask.height(); ++y) {
      if (mask.test(x, y) == current) {
        ++run;
      } else {
        rle.runs.push_back(run);
        current = !current;
        run = 1;
      }
    }
  }
  rle.runs.push_back(run);
  return rle;
}

inline BinaryMask rle_decode(const RleMask& rle) {
  BinaryMask mask(rle.width, rle.height);
  const std::size_t total = mask.size();
  std::size_t pos = 0;
  bool value = false;
  for (std::size_t i = 0; i < rle.runs.size(); ++i) {
    if (rle.runs[i] == 0 && i != 0) {
      throw DataError("rle: zero-length interior run");
    }
    for (std::uint32_t k = 0; k < rle.runs[i]; ++k) {
      if (pos >= total) {
        throw DataError("rle: runs exceed mask size");
      }
      if (value) {
        // column-major position -> (x, y)
        const int x = static_cast<int>(pos / static_cast<std::size_t>(rle.height));
        const int y = static_cast<int>(pos % static_cast<std::size_t>(rle.height));
        mask.set(x, y);
      }
      ++pos;
    }
    value = !value;
  }
  if (pos != total) {
    throw DataError("rle: runs do not sum to width*height");
  }
  return mask;
}

inline std::string rle_to_string(const RleMask& rle) {
  std::ostringstream out;
  for (std::size_t i = 0; i < rle.runs.size(); ++i) {
    if (i) out << ' ';
    out << rle.runs[i];
  }
  return out.str();
}

inline RleMask rle_from_string(const std::string& text, int width, int height) {
  RleMask rle;
  rle.width = width;
  rle.height = height;
  std::istringstream in(text);
  std::uint32_t run = 0;
  while (in >> run) {
    rle.runs.push_back(run);
  }
  if (!in.eof()) {
    throw DataError("rle: malformed run string");
  }
  return rle;
}

/// Wire codec for soft masks: values are quantized to 8 bits
/// (q = round(v*255), v = q/255) and the column-major byte sequence is
/// run-length encoded as comma-separated "value:count" pairs.
inline std::string rle_encode_soft(const SoftMask& soft) {
  std::ostringstream out;
  int current = -1;
  std::size_t run = 0;
  bool first = true;
  auto flush = [&]() {
    if (run == 0) return;
    if (!first) out << ',';
    out << current << ':' << run;
    first = false;
  };
  for (int x = 0; x < soft.width; ++x) {
    for (int y = 0; y < soft.height; ++y) {
      const int q = static_cast<int>(std::lround(soft.at(x, y) * 255.0f));
      if (q == current) {
        ++run;
      } else {
        flush();
        current = q;
        run = 1;
      }
    }
  }
  flush();
  return out.str();
}

inline SoftMask rle_decode_soft(const std::string& text, int width, int height) {
  SoftMask soft(width, height);
  const std::size_t total = soft.values.size();
  std::size_t pos = 0;
  std::istringstream in(text);
  std::string pair;
  while (std::getline(in, pair, ',')) {
    const std::size_t colon = pair.find(':');
    if (colon == std::string::npos) {
      throw DataError("soft rle: malformed pair '" + pair + "'");
    }
    const int q = std::stoi(pair.substr(0, colon));
    const long count = std::stol(pair.substr(colon + 1));
    if (q < 0 || q > 255 || count <= 0) {
      throw DataError("soft rle: value or count out of range");
    }
    for (long k = 0; k < count; ++k) {
      if (pos >= total) {
        throw DataError("soft rle: runs exceed mask size");
      }
      const int x = static_cast<int>(pos / static_cast<std::size_t>(height));
      const int y = static_cast<int>(pos % static_cast<std::size_t>(height));
      soft.at(x, y) = static_cast<float>(q) / 255.0f;
      ++pos;
    }
  }
  if (pos != total) {
    throw DataError("soft rle: runs do not sum to width*height");
  }
  return soft;
}

}  // namespace evos
