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
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "evos/core.hpp"
#include "evos/image.hpp"
#include "evos/png_io.hpp"

namespace evos {

/// Synthetic stand-in dataset: videos of two moving shapes (a disk and a
/// square) with pixel-exact annotations, target expressions for each
/// shape, a union expression, and scripted no-target expressions. Also
/// emits a judge fixture whose verdicts match the ground truth.
struct FixtureConfig {
  std::filesystem::path root;
  std::string split = "mini";
  int num_videos = 4;
  int frames_per_video = 24;
  int width = 64;
  int height = 48;
  std::uint32_t seed = 7;
};

struct FixtureSummary {
  int videos = 0;
  int expressions = 0;
  int notarget_expressions = 0;
  std::filesystem::path judge_fixture;
};

namespace detail {

inline int fixture_rand(std::mt19937& rng, int lo, int hi) {
  // uniform in [lo, hi]; plain modulo keeps the stream portable
  return lo + static_cast<int>(rng() % static_cast<std::uint32_t>(hi - lo + 1));
}

struct MovingShape {
  bool is_disk = false;
  int size = 0;  // disk radius / half side
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double vy = 0.0;

  void step(int width, int height) {
    x += vx;
    y += vy;
    if (x < size) {
      x = size;
      vx = -vx;
    }
    if (y < size) {
      y = size;
      vy = -vy;
    }
    if (x > width - 1.0 - size) {
      x = width - 1.0 - size;
      vx = -vx;
    }
    if (y > height - 1.0 - size) {
      y = height - 1.0 - size;
      vy = -vy;
    }
  }

  bool covers(int px, int py) const {
    if (is_disk) {
      const double dx = px - x;
      const double dy = py - y;
      return dx * dx + dy * dy <= static_cast<double>(size) * size;
    }
    return px >= x - size && px <= x + size && py >= y - size && py <= y + size;
  }
};

}  // namespace detail

inline FixtureSummary generate_fixture(const FixtureConfig& cfg) {
  if (cfg.num_videos < 1 || cfg.frames_per_video < 1 || cfg.width < 16 || cfg.height < 16) {
    throw ConfigError("fixture: need >= 1 video, >= 1 frame and at least 16x16 pixels");
  }
  static const std::vector<std::pair<std::string, Rgb>> colors = {
      {"red", Rgb{200, 40, 40}},   {"green", Rgb{40, 180, 60}}, {"blue", Rgb{50, 80, 210}},
      {"yellow", Rgb{220, 200, 40}}, {"purple", Rgb{150, 60, 180}}, {"orange", Rgb{230, 130, 30}}};

  std::mt19937 rng(cfg.seed);
  const auto split_dir = cfg.root / cfg.split;
  std::filesystem::create_directories(split_dir);

  nlohmann::ordered_json meta;
  meta["schema_version"] = 1;
  meta["videos"] = nlohmann::ordered_json::object();
  nlohmann::ordered_json judges;
  judges["schema_version"] = 1;
  judges["default"] = "present";
  judges["expressions"] = nlohmann::ordered_json::object();

  FixtureSummary summary;
  for (int v = 0; v < cfg.num_videos; ++v) {
    const std::string video_id = "video_" + std::to_string(v);
    const int color_a = detail::fixture_rand(rng, 0, static_cast<int>(colors.size()) - 1);
    int color_b = detail::fixture_rand(rng, 0, static_cast<int>(colors.size()) - 1);
    while (color_b == color_a) {
      color_b = detail::fixture_rand(rng, 0, static_cast<int>(colors.size()) - 1);
    }
    int color_absent = detail::fixture_rand(rng, 0, static_cast<int>(colors.size()) - 1);
    while (color_absent == color_a || color_absent == color_b) {
      color_absent = detail::fixture_rand(rng, 0, static_cast<int>(colors.size()) - 1);
    }

    detail::MovingShape disk;
    disk.is_disk = true;
    disk.size = detail::fixture_rand(rng, 4, std::min(cfg.width, cfg.height) / 6);
    disk.x = detail::fixture_rand(rng, disk.size, cfg.width - 1 - disk.size);
    disk.y = detail::fixture_rand(rng, disk.size, cfg.height - 1 - disk.size);
    disk.vx = detail::fixture_rand(rng, 1, 3);
    disk.vy = detail::fixture_rand(rng, 1, 2);

    detail::MovingShape square;
    square.size = detail::fixture_rand(rng, 3, std::min(cfg.width, cfg.height) / 7);
    square.x = detail::fixture_rand(rng, square.size, cfg.width - 1 - square.size);
    square.y = detail::fixture_rand(rng, square.size, cfg.height - 1 - square.size);
    square.vx = -detail::fixture_rand(rng, 1, 2);
    square.vy = detail::fixture_rand(rng, 1, 2);

    const Rgb background{30, 30, 34};
    const std::vector<Rgb> palette = {Rgb{0, 0, 0}, colors[color_a].second,
                                      colors[color_b].second};

    nlohmann::ordered_json frames_list = nlohmann::ordered_json::array();
    for (int t = 0; t < cfg.frames_per_video; ++t) {
      char stem[16];
      std::snprintf(stem, sizeof(stem), "%05d", t);
      frames_list.push_back(stem);

      Image frame(cfg.width, cfg.height, background);
      std::vector<std::uint8_t> annotation(
          static_cast<std::size_t>(cfg.width) * static_cast<std::size_t>(cfg.height), 0);
      for (int y = 0; y < cfg.height; ++y) {
        for (int x = 0; x < cfg.width; ++x) {
          // square drawn after the disk, so it wins overlaps
          if (disk.covers(x, y)) {
            frame.set(x, y, colors[color_a].second);
            annotation[static_cast<std::size_t>(y) * cfg.width + x] = 1;
          }
          if (square.covers(x, y)) {
            frame.set(x, y, colors[color_b].second);
            annotation[static_cast<std::size_t>(y) * cfg.width + x] = 2;
          }
        }
      }
      write_png_rgb8(split_dir / "JPEGImages" / video_id / (std::string(stem) + ".png"), frame);
      write_png_palette(split_dir / "Annotations" / video_id / (std::string(stem) + ".png"),
                        cfg.width, cfg.height, annotation, palette);
      disk.step(cfg.width, cfg.height);
      square.step(cfg.width, cfg.height);
    }

    nlohmann::ordered_json expressions = nlohmann::ordered_json::object();
    auto add_expression = [&](const std::string& exp_id, const std::string& text,
                              std::vector<int> object_ids) {
      expressions[exp_id] = {{"exp", text}, {"obj_id", object_ids}};
      judges["expressions"][exp_id] = {
          {"verdict", object_ids.empty() ? "absent" : "present"}};
      ++summary.expressions;
      if (object_ids.empty()) ++summary.notarget_expressions;
    };

    const std::string prefix = video_id + "_e";
    add_expression(prefix + "0", "the " + colors[color_a].first + " disk moving around", {1});
    add_expression(prefix + "1", "the " + colors[color_b].first + " square drifting by", {2});
    if (v == cfg.num_videos - 1 && cfg.num_videos > 1) {
      add_expression(prefix + "2", "both the disk and the square together", {1, 2});
    }
    if (v < 2) {
      add_expression(prefix + "9",
                     "the " + colors[color_absent].first + " triangle that never shows up", {});
    }

    meta["videos"][video_id] = {{"frames", frames_list}, {"expressions", expressions}};
    ++summary.videos;
  }

  {
    const std::string text = meta.dump(2) + "\n";
    write_file_bytes(split_dir / "meta_expressions.json",
                     std::vector<std::uint8_t>(text.begin(), text.end()));
  }
  {
    summary.judge_fixture = split_dir / "judges.json";
    const std::string text = judges.dump(2) + "\n";
    write_file_bytes(summary.judge_fixture, std::vector<std::uint8_t>(text.begin(), text.end()));
  }
  return summary;
}

}  // namespace evos
