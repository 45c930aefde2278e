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

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "evos/core.hpp"
#include "evos/image.hpp"
#include "evos/png_io.hpp"

namespace evos {

/// MeViS-style dataset layout under <root>/<split>/:
///   meta_expressions.json        video/expression metadata
///   JPEGImages/<video_id>/*.png  pre-extracted frames
///   Annotations/<video_id>/*.png palette-indexed ground truth (optional);
///                                object id = palette index, 0 = background
struct DatasetManifest {
  std::filesystem::path root;
  std::string split;
  std::vector<VideoSequence> videos;
  std::vector<ReferringExpression> expressions;
  bool has_annotations = false;

  const VideoSequence& video(const std::string& video_id) const {
    for (const VideoSequence& v : videos) {
      if (v.video_id == video_id) return v;
    }
    throw DataError("unknown video '" + video_id + "'");
  }

  int target_count() const {
    int n = 0;
    for (const auto& e : expressions) {
      if (e.gt_target_present.value_or(false)) ++n;
    }
    return n;
  }

  int notarget_count() const {
    int n = 0;
    for (const auto& e : expressions) {
      if (e.gt_target_present.has_value() && !*e.gt_target_present) ++n;
    }
    return n;
  }

  std::filesystem::path split_dir() const { return root / split; }
};

inline std::string frame_stem(const FrameRef& ref) {
  if (!ref.path.empty()) {
    return std::filesystem::path(ref.path).stem().string();
  }
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%05d", ref.index);
  return buf;
}

inline Image load_frame_image(const FrameRef& ref) {
  if (ref.in_memory()) {
    return decode_png_rgb8(*ref.buffer);
  }
  return read_png_rgb8(ref.path);
}

inline DatasetManifest load_manifest(const std::filesystem::path& root, const std::string& split) {
  DatasetManifest manifest;
  manifest.root = root;
  manifest.split = split;
  const auto split_dir = root / split;
  const auto meta_path = split_dir / "meta_expressions.json";
  if (!std::filesystem::exists(meta_path)) {
    throw DataError("missing metadata file: " + meta_path.string());
  }
  nlohmann::ordered_json meta;
  try {
    const auto bytes = read_file_bytes(meta_path);
    meta = nlohmann::ordered_json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw DataError("ill-formed metadata file " + meta_path.string() + ": " + e.what());
  }
  if (!meta.contains("videos") || !meta["videos"].is_object()) {
    throw DataError("metadata file has no 'videos' object: " + meta_path.string());
  }
  manifest.has_annotations = std::filesystem::is_directory(split_dir / "Annotations");

  std::set<std::string> seen_expression_ids;
  for (const auto& [video_id, video_doc] : meta["videos"].items()) {
    const auto frames_dir = split_dir / "JPEGImages" / video_id;
    if (!std::filesystem::is_directory(frames_dir)) {
      throw DataError("video '" + video_id + "': missing frame directory " + frames_dir.string());
    }
    VideoSequence video;
    video.video_id = video_id;
    if (!video_doc.contains("frames") || video_doc["frames"].empty()) {
      throw DataError("video '" + video_id + "': metadata lists no frames");
    }
    int index = 0;
    for (const auto& stem : video_doc["frames"]) {
      const auto frame_path = frames_dir / (stem.get<std::string>() + ".png");
      if (!std::filesystem::exists(frame_path)) {
        throw DataError("video '" + video_id + "': missing frame " + frame_path.string());
      }
      const auto [w, h] = png_dimensions_file(frame_path);
      if (index == 0) {
        video.width = w;
        video.height = h;
      } else if (w != video.width || h != video.height) {
        throw DataError("video '" + video_id + "': frame " + frame_path.string() +
                        " has mismatched dimensions");
      }
      video.frames.push_back(FrameRef{index, frame_path.string(), nullptr});
      ++index;
    }
    validate_video(video);

    if (video_doc.contains("expressions")) {
      for (const auto& [exp_id, exp_doc] : video_doc["expressions"].items()) {
        if (!seen_expression_ids.insert(exp_id).second) {
          throw DataError("duplicate expression id '" + exp_id + "'");
        }
        ReferringExpression expr;
        expr.expression_id = exp_id;
        expr.video_id = video_id;
        expr.text = exp_doc.at("exp").get<std::string>();
        if (manifest.has_annotations) {
          std::vector<int> object_ids;
          if (exp_doc.contains("obj_id")) {
            object_ids = exp_doc["obj_id"].get<std::vector<int>>();
          }
          expr.gt_target_present = !object_ids.empty();
          expr.gt_object_ids = std::move(object_ids);
        }
        validate_expression(expr);
        manifest.expressions.push_back(std::move(expr));
      }
    }
    manifest.videos.push_back(std::move(video));
  }
  return manifest;
}

/// Ground-truth masklet for one expression: the union of its object ids
/// over the video's palette-indexed annotation frames.
inline Masklet load_gt_masklet(const DatasetManifest& manifest, const ReferringExpression& expr) {
  if (!manifest.has_annotations) {
    throw DataError("dataset has no annotations");
  }
  const VideoSequence& video = manifest.video(expr.video_id);
  const auto ann_dir = manifest.split_dir() / "Annotations" / expr.video_id;
  std::vector<BinaryMask> masks;
  masks.reserve(video.frames.size());
  const std::vector<int> object_ids =
      expr.gt_object_ids.has_value() ? *expr.gt_object_ids : std::vector<int>{};
  for (const FrameRef& ref : video.frames) {
    const auto ann_path = ann_dir / (frame_stem(ref) + ".png");
    const PalettePng ann = read_png_palette(ann_path);
    if (ann.width != video.width || ann.height != video.height) {
      throw DataError("annotation " + ann_path.string() + " has mismatched dimensions");
    }
    BinaryMask mask(ann.width, ann.height);
    for (std::size_t i = 0; i < ann.indices.size(); ++i) {
      for (int id : object_ids) {
        if (ann.indices[i] == id) {
          mask.set(i);
          break;
        }
      }
    }
    masks.push_back(std::move(mask));
  }
  return Masklet(expr.expression_id, std::move(masks));
}

inline std::map<std::string, Masklet> load_ground_truth(const DatasetManifest& manifest) {
  std::map<std::string, Masklet> out;
  for (const ReferringExpression& expr : manifest.expressions) {
    out.emplace(expr.expression_id, load_gt_masklet(manifest, expr));
  }
  return out;
}

/// Writes one expression's masks as 0/255 grayscale PNGs under
/// <dir>/<expression_id>/<frame stem>.png.
inline void write_expression_prediction(const VideoSequence& video, const Masklet& masklet,
                                        const std::filesystem::path& dir) {
  check_aligned(masklet, video);
  const auto exp_dir = dir / masklet.expression_id();
  std::filesystem::create_directories(exp_dir);
  std::vector<std::uint8_t> pixels(masklet.masks().front().size());
  for (int t = 0; t < masklet.frame_count(); ++t) {
    const BinaryMask& mask = masklet.mask(t);
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      pixels[i] = mask.test(i) ? 255 : 0;
    }
    write_png_gray8(exp_dir / (frame_stem(video.frames[static_cast<std::size_t>(t)]) + ".png"),
                    mask.width(), mask.height(), pixels);
  }
}

inline void write_prediction_index(const DatasetManifest& manifest,
                                   const std::vector<std::string>& expression_ids,
                                   const std::filesystem::path& dir) {
  nlohmann::ordered_json index;
  index["schema_version"] = 1;
  index["split"] = manifest.split;
  index["predictions"] = nlohmann::ordered_json::object();
  for (const std::string& exp_id : expression_ids) {
    for (const ReferringExpression& expr : manifest.expressions) {
      if (expr.expression_id != exp_id) continue;
      const VideoSequence& video = manifest.video(expr.video_id);
      std::vector<std::string> stems;
      stems.reserve(video.frames.size());
      for (const FrameRef& ref : video.frames) {
        stems.push_back(frame_stem(ref));
      }
      index["predictions"][exp_id] = {{"video_id", expr.video_id}, {"frames", stems}};
      break;
    }
  }
  std::filesystem::create_directories(dir);
  const std::string text = index.dump(2) + "\n";
  write_file_bytes(dir / "index.json", std::vector<std::uint8_t>(text.begin(), text.end()));
}

inline void write_predictions(const DatasetManifest& manifest,
                              const std::map<std::string, Masklet>& masklets,
                              const std::filesystem::path& dir) {
  std::vector<std::string> ids;
  for (const ReferringExpression& expr : manifest.expressions) {
    auto it = masklets.find(expr.expression_id);
    if (it == masklets.end()) {
      throw DataError("no masklet for expression '" + expr.expression_id + "'");
    }
    write_expression_prediction(manifest.video(expr.video_id), it->second, dir);
    ids.push_back(expr.expression_id);
  }
  write_prediction_index(manifest, ids, dir);
}

inline std::map<std::string, Masklet> read_predictions(const DatasetManifest& manifest,
                                                       const std::filesystem::path& dir) {
  const auto index_path = dir / "index.json";
  if (!std::filesystem::exists(index_path)) {
    throw DataError("missing prediction index: " + index_path.string());
  }
  const auto bytes = read_file_bytes(index_path);
  const auto index = nlohmann::ordered_json::parse(bytes.begin(), bytes.end());
  const auto& entries = index.at("predictions");
  std::map<std::string, Masklet> out;
  for (const ReferringExpression& expr : manifest.expressions) {
    if (!entries.contains(expr.expression_id)) {
      throw DataError("prediction index is missing expression '" + expr.expression_id + "'");
    }
    const VideoSequence& video = manifest.video(expr.video_id);
    std::vector<BinaryMask> masks;
    masks.reserve(video.frames.size());
    for (const FrameRef& ref : video.frames) {
      const auto mask_path = dir / expr.expression_id / (frame_stem(ref) + ".png");
      const GrayPng png = read_png_gray8(mask_path);
      if (png.width != video.width || png.height != video.height) {
        throw DataError("prediction " + mask_path.string() + " has mismatched dimensions");
      }
      BinaryMask mask(png.width, png.height);
      for (std::size_t i = 0; i < png.pixels.size(); ++i) {
        if (png.pixels[i] == 255) {
          mask.set(i);
        } else if (png.pixels[i] != 0) {
          throw DataError("prediction " + mask_path.string() + " is not a 0/255 mask");
        }
      }
      masks.push_back(std::move(mask));
    }
    out.emplace(expr.expression_id, Masklet(expr.expression_id, std::move(masks)));
  }
  return out;
}

}  // namespace evos
