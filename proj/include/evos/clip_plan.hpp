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
#include <cstdlib>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "evos/core.hpp"

namespace evos {

/// Temporal configuration: sample `target_frames` frames and split them
/// into `num_clips` clips of clip_len = grid^2 + 1 frames each.
struct SchedulerConfig {
  int target_frames = 100;
  int num_clips = 10;

  int clip_len() const { return target_frames / num_clips; }

  int grid() const {
    const int c = clip_len();
    int g = 0;
    while ((g + 1) * (g + 1) <= c - 1) ++g;
    return g;
  }

  void validate() const {
    if (target_frames <= 0 || num_clips <= 0) {
      throw ConfigError("scheduler: frame and clip counts must be positive");
    }
    if (target_frames % num_clips != 0) {
      throw ConfigError("scheduler: target_frames must be divisible by num_clips");
    }
    const int c = clip_len();
    const int g = grid();
    if (g < 1 || g * g != c - 1) {
      throw ConfigError("scheduler: clip length minus one must be a perfect square >= 1");
    }
  }
};

struct Clip {
  int key_frame = 0;
  std::vector<int> members;  // the remaining clip_len-1 slots, in temporal order

  std::vector<int> slots() const {
    std::vector<int> all;
    all.reserve(members.size() + 1);
    all.push_back(key_frame);
    all.insert(all.end(), members.begin(), members.end());
    return all;
  }
};

struct ClipPlan {
  std::string video_id;
  int video_length = 0;
  int target_frames = 0;
  int num_clips = 0;
  int clip_len = 0;
  int grid = 0;
  std::vector<int> sampled;                        // distinct original indices, ascending
  std::vector<Clip> clips;                         // num_clips entries of clip_len slots
  std::vector<std::vector<int>> token_assignments; // frame index -> 1 or 2 token ids
};

inline const std::vector<int>& governing_tokens(const ClipPlan& plan, int frame_index) {
  if (frame_index < 0 || frame_index >= plan.video_length) {
    throw ConfigError("frame index out of range for plan of video '" + plan.video_id + "'");
  }
  return plan.token_assignments[static_cast<std::size_t>(frame_index)];
}

/// Builds the sampling/clip plan for a video of `length` frames.
///
/// Long videos (length >= target_frames) are sampled at a uniform stride,
/// floor(i*length/target_frames), and each sampled frame belongs to exactly
/// one clip; unsampled frames inherit the token of the temporally nearest
/// sampled frame (ties toward the earlier frame).
///
/// Short videos use every frame: the frames are split into num_clips
/// contiguous chunks of near-equal size, each clip re-uses the previous
/// chunk's last frame as its first slot when it has room, and trailing
/// slots repeat the clip's last frame. A frame shared across a clip
/// boundary is governed by both clips' tokens and its masks are later
/// averaged.
inline ClipPlan plan_for_length(const std::string& video_id, int length,
                                const SchedulerConfig& cfg) {
  cfg.validate();
  if (length <= 0) {
    throw DataError("cannot plan an empty video");
  }
  if (length < cfg.num_clips) {
    throw DataError("video '" + video_id + "' has fewer frames than num_clips");
  }

  const int t = cfg.target_frames;
  const int n = cfg.num_clips;
  const int c = cfg.clip_len();

  ClipPlan plan;
  plan.video_id = video_id;
  plan.video_length = length;
  plan.target_frames = t;
  plan.num_clips = n;
  plan.clip_len = c;
  plan.grid = cfg.grid();
  plan.token_assignments.assign(static_cast<std::size_t>(length), {});

  if (length >= t) {
    plan.sampled.reserve(static_cast<std::size_t>(t));
    for (int i = 0; i < t; ++i) {
      plan.sampled.push_back(static_cast<int>(static_cast<std::int64_t>(i) * length / t));
    }
    for (int k = 0; k < n; ++k) {
      Clip clip;
      clip.key_frame = plan.sampled[static_cast<std::size_t>(k * c)];
      for (int j = 1; j < c; ++j) {
        clip.members.push_back(plan.sampled[static_cast<std::size_t>(k * c + j)]);
      }
      plan.clips.push_back(std::move(clip));
    }
    // nearest sampled frame governs; ties go to the earlier frame
    int j = 0;
    for (int f = 0; f < length; ++f) {
      while (j + 1 < t &&
             std::abs(plan.sampled[static_cast<std::size_t>(j + 1)] - f) <
                 std::abs(plan.sampled[static_cast<std::size_t>(j)] - f)) {
        ++j;
      }
      plan.token_assignments[static_cast<std::size_t>(f)] = {j / c};
    }
    return plan;
  }

  // Short video: every frame is used once, in order.
  plan.sampled.resize(static_cast<std::size_t>(length));
  for (int f = 0; f < length; ++f) {
    plan.sampled[static_cast<std::size_t>(f)] = f;
  }

  const int base = length / n;
  const int rem = length % n;
  int chunk_start = 0;
  for (int k = 0; k < n; ++k) {
    const int chunk_size = base + (k < rem ? 1 : 0);
    std::vector<int> slots;
    slots.reserve(static_cast<std::size_t>(c));
    if (k > 0 && chunk_size < c) {
      slots.push_back(chunk_start - 1);  // straddle the boundary frame
    }
    for (int j = 0; j < chunk_size; ++j) {
      slots.push_back(chunk_start + j);
    }
    while (static_cast<int>(slots.size()) < c) {
      slots.push_back(slots.back());
    }
    for (int f : slots) {
      auto& tokens = plan.token_assignments[static_cast<std::size_t>(f)];
      if (tokens.empty() || tokens.back() != k) {
        tokens.push_back(k);
      }
    }
    Clip clip;
    clip.key_frame = slots.front();
    clip.members.assign(slots.begin() + 1, slots.end());
    plan.clips.push_back(std::move(clip));
    chunk_start += chunk_size;
  }
  return plan;
}

inline ClipPlan plan(const VideoSequence& video, const SchedulerConfig& cfg) {
  validate_video(video);
  return plan_for_length(video.video_id, video.frame_count(), cfg);
}

inline nlohmann::ordered_json plan_to_json(const ClipPlan& plan) {
  nlohmann::ordered_json doc;
  doc["schema_version"] = 1;
  doc["video_id"] = plan.video_id;
  doc["video_length"] = plan.video_length;
  doc["target_frames"] = plan.target_frames;
  doc["num_clips"] = plan.num_clips;
  doc["clip_len"] = plan.clip_len;
  doc["grid"] = plan.grid;
  doc["sampled"] = plan.sampled;
  doc["clips"] = nlohmann::ordered_json::array();
  for (const Clip& clip : plan.clips) {
    doc["clips"].push_back({{"key_frame", clip.key_frame}, {"members", clip.members}});
  }
  nlohmann::ordered_json assignments = nlohmann::ordered_json::object();
  for (int f = 0; f < plan.video_length; ++f) {
    assignments[std::to_string(f)] = plan.token_assignments[static_cast<std::size_t>(f)];
  }
  doc["token_assignments"] = std::move(assignments);
  return doc;
}

}  // namespace evos
