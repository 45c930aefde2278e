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

#include <bit>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace evos {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration or unusable argument values.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Ill-formed or inconsistent dataset / file contents.
class DataError : public Error {
public:
  using Error::Error;
};

/// A segmentation or judge backend failed to produce a usable answer.
class BackendError : public Error {
public:
  using Error::Error;
};

/// One frame of a video: a 0-based index plus where the encoded image
/// lives (a file on disk, or an in-memory buffer for tests/fixtures).
struct FrameRef {
  int index = 0;
  std::string path;
  std::shared_ptr<const std::vector<std::uint8_t>> buffer;

  bool in_memory() const { return buffer != nullptr; }
};

struct VideoSequence {
  std::string video_id;
  std::vector<FrameRef> frames;
  int width = 0;
  int height = 0;

  int frame_count() const { return static_cast<int>(frames.size()); }
};

/// Checks the structural invariants a loaded video must satisfy:
/// non-empty, frame indices 0..n-1 in order, positive dimensions.
inline void validate_video(const VideoSequence& video) {
  if (video.frames.empty()) {
    throw DataError("video '" + video.video_id + "' has no frames");
  }
  if (video.width <= 0 || video.height <= 0) {
    throw DataError("video '" + video.video_id + "' has invalid dimensions");
  }
  for (std::size_t i = 0; i < video.frames.size(); ++i) {
    if (video.frames[i].index != static_cast<int>(i)) {
      throw DataError("video '" + video.video_id + "' frame indices are not contiguous from 0");
    }
  }
}

struct ReferringExpression {
  std::string expression_id;
  std::string video_id;
  std::string text;
  std::optional<bool> gt_target_present;
  std::optional<std::vector<int>> gt_object_ids;
};

inline void validate_expression(const ReferringExpression& expr) {
  if (expr.text.empty()) {
    throw DataError("expression '" + expr.expression_id + "' has empty text");
  }
  if (expr.gt_target_present.has_value()) {
    const bool has_objects = expr.gt_object_ids.has_value() && !expr.gt_object_ids->empty();
    if (*expr.gt_target_present != has_objects) {
      throw DataError("expression '" + expr.expression_id +
                      "': target-present flag disagrees with object id list");
    }
  }
}

/// Row-major binary mask with (0,0) at the top-left, packed 64 pixels
/// per word so intersection/union counts reduce to popcounts.
class BinaryMask {
public:
  BinaryMask() = default;

  BinaryMask(int width, int height) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) {
      throw ConfigError("mask dimensions must be positive");
    }
    words_.assign((size() + 63) / 64, 0);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
  bool test(int x, int y) const {
    return test(static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                static_cast<std::size_t>(x));
  }

  void set(std::size_t i, bool value = true) {
    const std::uint64_t bit = std::uint64_t{1} << (i & 63);
    if (value) {
      words_[i >> 6] |= bit;
    } else {
      words_[i >> 6] &= ~bit;
    }
  }
  void set(int x, int y, bool value = true) {
    set(static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x),
        value);
  }

  std::size_t count() const {
    std::size_t total = 0;
    for (std::uint64_t w : words_) {
      total += static_cast<std::size_t>(std::popcount(w));
    }
    return total;
  }

  bool is_empty() const {
    for (std::uint64_t w : words_) {
      if (w != 0) return false;
    }
    return true;
  }

  bool same_shape(const BinaryMask& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const BinaryMask& a, const BinaryMask& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.words_ == b.words_;
  }

  static std::size_t intersection_count(const BinaryMask& a, const BinaryMask& b) {
    require_same_shape(a, b);
    std::size_t total = 0;
    for (std::size_t i = 0; i < a.words_.size(); ++i) {
      total += static_cast<std::size_t>(std::popcount(a.words_[i] & b.words_[i]));
    }
    return total;
  }

  static std::size_t union_count(const BinaryMask& a, const BinaryMask& b) {
    require_same_shape(a, b);
    std::size_t total = 0;
    for (std::size_t i = 0; i < a.words_.size(); ++i) {
      total += static_cast<std::size_t>(std::popcount(a.words_[i] | b.words_[i]));
    }
    return total;
  }

private:
  static void require_same_shape(const BinaryMask& a, const BinaryMask& b) {
    if (!a.same_shape(b)) {
      throw ConfigError("mask dimension mismatch");
    }
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Pre-threshold mask scores in [0,1], row-major.
struct SoftMask {
  int width = 0;
  int height = 0;
  std::vector<float> values;

  SoftMask() = default;
  SoftMask(int w, int h) : width(w), height(h) {
    if (w <= 0 || h <= 0) {
      throw ConfigError("mask dimensions must be positive");
    }
    values.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0.0f);
  }

  float at(int x, int y) const {
    return values[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(x)];
  }
  float& at(int x, int y) {
    return values[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(x)];
  }

  void validate() const {
    if (values.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
      throw DataError("soft mask value count does not match dimensions");
    }
    for (float v : values) {
      if (!(v >= 0.0f && v <= 1.0f)) {
        throw DataError("soft mask value outside [0,1]");
      }
    }
  }
};

/// Binarize at tau: bit i = 1 iff values[i] >= tau. Requires 0 < tau <= 1.
inline BinaryMask threshold(const SoftMask& soft, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) {
    throw ConfigError("threshold tau must be in (0,1]");
  }
  BinaryMask mask(soft.width, soft.height);
  for (std::size_t i = 0; i < soft.values.size(); ++i) {
    if (soft.values[i] >= tau) {
      mask.set(i);
    }
  }
  return mask;
}

/// Per-frame masks for one (video, expression) pair, index-aligned to
/// the video. The all-empty masklet is the canonical "no target" output.
class Masklet {
public:
  Masklet(std::string expression_id, std::vector<BinaryMask> masks)
      : expression_id_(std::move(expression_id)), masks_(std::move(masks)) {
    if (masks_.empty()) {
      throw DataError("masklet '" + expression_id_ + "' has no frames");
    }
    for (const BinaryMask& m : masks_) {
      if (!m.same_shape(masks_.front())) {
        throw DataError("masklet '" + expression_id_ + "' has mixed mask dimensions");
      }
    }
  }

  const std::string& expression_id() const { return expression_id_; }
  const std::vector<BinaryMask>& masks() const { return masks_; }
  const BinaryMask& mask(int frame_index) const {
    return masks_.at(static_cast<std::size_t>(frame_index));
  }
  int frame_count() const { return static_cast<int>(masks_.size()); }
  int width() const { return masks_.front().width(); }
  int height() const { return masks_.front().height(); }

  bool is_null() const {
    for (const BinaryMask& m : masks_) {
      if (!m.is_empty()) return false;
    }
    return true;
  }

  friend bool operator==(const Masklet& a, const Masklet& b) {
    return a.expression_id_ == b.expression_id_ && a.masks_ == b.masks_;
  }

private:
  std::string expression_id_;
  std::vector<BinaryMask> masks_;
};

inline Masklet masklet_null(const VideoSequence& video, std::string expression_id) {
  validate_video(video);
  std::vector<BinaryMask> masks(video.frames.size(), BinaryMask(video.width, video.height));
  return Masklet(std::move(expression_id), std::move(masks));
}

inline void check_aligned(const Masklet& masklet, const VideoSequence& video) {
  if (masklet.frame_count() != video.frame_count() || masklet.width() != video.width ||
      masklet.height() != video.height) {
    throw DataError("masklet '" + masklet.expression_id() + "' is not aligned to video '" +
                    video.video_id + "'");
  }
}

}  // namespace evos
