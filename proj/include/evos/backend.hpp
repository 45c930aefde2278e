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

#include <algorithm>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "evos/base64.hpp"
#include "evos/clip_plan.hpp"
#include "evos/core.hpp"
#include "evos/kfc.hpp"
#include "evos/png_io.hpp"
#include "evos/rle.hpp"

namespace evos {

/// Everything a backend gets for one [SEG] token: the clip's compacted
/// representation and the original frames the token governs.
struct SegmentRequest {
  std::string expression_id;
  std::string expression;
  int clip_index = 0;
  int token_id = 0;
  CompositeFrame composite;
  std::vector<std::pair<int, Image>> frames;  // (frame index, original image)
};

struct SegmentResponse {
  int token_id = 0;
  std::map<int, SoftMask> masks;  // frame index -> soft mask
};

class SegmentationBackend {
public:
  virtual ~SegmentationBackend() = default;
  virtual std::string name() const = 0;
  virtual SegmentResponse segment(const SegmentRequest& request) = 0;
};

/// Replays ground-truth masklets as soft masks with value 1.0. Useful as
/// the identity backend: the assembled prediction must equal the ground
/// truth bit for bit.
class OracleBackend final : public SegmentationBackend {
public:
  explicit OracleBackend(std::map<std::string, Masklet> ground_truth)
      : ground_truth_(std::move(ground_truth)) {}

  std::string name() const override { return "oracle"; }

  SegmentResponse segment(const SegmentRequest& request) override {
    auto it = ground_truth_.find(request.expression_id);
    if (it == ground_truth_.end()) {
      throw BackendError("oracle backend has no ground truth for expression '" +
                         request.expression_id + "'");
    }
    const Masklet& gt = it->second;
    SegmentResponse response;
    response.token_id = request.token_id;
    for (const auto& [frame_index, image] : request.frames) {
      (void)image;
      if (frame_index < 0 || frame_index >= gt.frame_count()) {
        throw BackendError("oracle backend asked for frame outside ground truth");
      }
      const BinaryMask& mask = gt.mask(frame_index);
      SoftMask soft(mask.width(), mask.height());
      for (std::size_t i = 0; i < soft.values.size(); ++i) {
        soft.values[i] = mask.test(i) ? 1.0f : 0.0f;
      }
      response.masks.emplace(frame_index, std::move(soft));
    }
    return response;
  }

private:
  std::map<std::string, Masklet> ground_truth_;
};

/// Reproduces the forced-localization failure mode: a confident centered
/// disk on every frame, no matter what the expression asks for.
class ForcedMappingBackend final : public SegmentationBackend {
public:
  std::string name() const override { return "forced"; }

  SegmentResponse segment(const SegmentRequest& request) override {
    SegmentResponse response;
    response.token_id = request.token_id;
    for (const auto& [frame_index, image] : request.frames) {
      SoftMask soft(image.width, image.height);
      const double cx = image.width / 2.0;
      const double cy = image.height / 2.0;
      const double radius = std::max(1.0, std::min(image.width, image.height) / 4.0);
      for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
          const double dx = x + 0.5 - cx;
          const double dy = y + 0.5 - cy;
          if (dx * dx + dy * dy <= radius * radius) {
            soft.at(x, y) = 1.0f;
          }
        }
      }
      response.masks.emplace(frame_index, std::move(soft));
    }
    return response;
  }
};

class ConstantZeroBackend final : public SegmentationBackend {
public:
  std::string name() const override { return "zero"; }

  SegmentResponse segment(const SegmentRequest& request) override {
    SegmentResponse response;
    response.token_id = request.token_id;
    for (const auto& [frame_index, image] : request.frames) {
      response.masks.emplace(frame_index, SoftMask(image.width, image.height));
    }
    return response;
  }
};

inline nlohmann::json segment_request_to_wire(const SegmentRequest& request) {
  nlohmann::json doc;
  doc["expression"] = request.expression;
  doc["token_id"] = request.token_id;
  doc["composite"] = {{"key", base64_encode(encode_png_rgb8(request.composite.key_image))},
                      {"mosaic", base64_encode(encode_png_rgb8(request.composite.mosaic))}};
  doc["frames"] = nlohmann::json::array();
  doc["frame_indices"] = nlohmann::json::array();
  for (const auto& [frame_index, image] : request.frames) {
    doc["frame_indices"].push_back(frame_index);
    doc["frames"].push_back(base64_encode(encode_png_rgb8(image)));
  }
  return doc;
}

/// HTTP backend speaking the JSON wire protocol. Request:
///   {"expression", "token_id", "composite":{"key","mosaic"},
///    "frames":[base64 png...], "frame_indices":[ints]}
/// Response: {"token_id", "masks": {"<frame_index>": "<soft rle>"}} with
/// soft masks quantized to 8 bits before run-length encoding. Any
/// transport or schema failure aborts the expression.
class HttpBackend final : public SegmentationBackend {
public:
  HttpBackend(const std::string& url, int timeout_ms) : timeout_ms_(timeout_ms) {
    const auto split =
        url.find('/', url.find("//") == std::string::npos ? 0 : url.find("//") + 2);
    if (split == std::string::npos) {
      base_ = url;
      path_ = "/";
    } else {
      base_ = url.substr(0, split);
      path_ = url.substr(split);
    }
  }

  std::string name() const override { return "http:" + base_ + path_; }

  SegmentResponse segment(const SegmentRequest& request) override {
    httplib::Client client(base_);
    client.set_connection_timeout(0, timeout_ms_ * 1000);
    client.set_read_timeout(timeout_ms_ / 1000, (timeout_ms_ % 1000) * 1000);
    const std::string body = segment_request_to_wire(request).dump();
    auto result = client.Post(path_, body, "application/json");
    if (!result) {
      throw BackendError("segmentation backend unreachable: " + base_);
    }
    if (result->status != 200) {
      throw BackendError("segmentation backend returned HTTP " +
                         std::to_string(result->status));
    }
    try {
      const auto doc = nlohmann::json::parse(result->body);
      SegmentResponse response;
      response.token_id = doc.at("token_id").get<int>();
      int width = 0;
      int height = 0;
      if (!request.frames.empty()) {
        width = request.frames.front().second.width;
        height = request.frames.front().second.height;
      }
      for (const auto& [key, value] : doc.at("masks").items()) {
        response.masks.emplace(std::stoi(key),
                               rle_decode_soft(value.get<std::string>(), width, height));
      }
      return response;
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw BackendError(std::string("invalid backend response: ") + e.what());
    }
  }

private:
  std::string base_;
  std::string path_;
  int timeout_ms_;
};

/// Joins per-token responses into the final masklet. Frames governed by
/// one token are thresholded directly; frames shared across a clip
/// boundary average their two soft masks pointwise before thresholding.
inline Masklet assemble_masklet(const ClipPlan& plan,
                                const std::vector<SegmentResponse>& responses, double tau,
                                const std::string& expression_id, int width, int height) {
  std::map<int, const SegmentResponse*> by_token;
  for (const SegmentResponse& response : responses) {
    if (!by_token.emplace(response.token_id, &response).second) {
      throw BackendError("duplicate response for token " + std::to_string(response.token_id));
    }
  }
  for (int t = 0; t < plan.num_clips; ++t) {
    if (!by_token.count(t)) {
      throw BackendError("missing response for token " + std::to_string(t));
    }
  }
  std::vector<BinaryMask> masks;
  masks.reserve(static_cast<std::size_t>(plan.video_length));
  for (int f = 0; f < plan.video_length; ++f) {
    const std::vector<int>& tokens = governing_tokens(plan, f);
    std::vector<const SoftMask*> parts;
    for (int t : tokens) {
      const SegmentResponse* response = by_token.at(t);
      auto it = response->masks.find(f);
      if (it == response->masks.end()) {
        throw BackendError("token " + std::to_string(t) + " response is missing frame " +
                           std::to_string(f));
      }
      if (it->second.width != width || it->second.height != height) {
        throw BackendError("soft mask dimensions do not match the video");
      }
      parts.push_back(&it->second);
    }
    if (parts.size() == 1) {
      masks.push_back(threshold(*parts.front(), tau));
    } else {
      SoftMask mean(width, height);
      for (std::size_t i = 0; i < mean.values.size(); ++i) {
        mean.values[i] = (parts[0]->values[i] + parts[1]->values[i]) / 2.0f;
      }
      masks.push_back(threshold(mean, tau));
    }
  }
  return Masklet(expression_id, std::move(masks));
}

}  // namespace evos
