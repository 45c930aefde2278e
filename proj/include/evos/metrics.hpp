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
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "evos/core.hpp"

namespace evos {

/// Region similarity J = |pred AND gt| / |pred OR gt|. Two empty masks
/// agree perfectly and score 1.0.
inline double jaccard(const BinaryMask& pred, const BinaryMask& gt) {
  const std::size_t union_count = BinaryMask::union_count(pred, gt);
  if (union_count == 0) {
    return 1.0;
  }
  return static_cast<double>(BinaryMask::intersection_count(pred, gt)) /
         static_cast<double>(union_count);
}

/// Boundary pixels: mask pixels with at least one 4-neighbor outside the
/// mask (pixels on the image edge count as adjacent to the outside).
inline BinaryMask boundary_mask(const BinaryMask& mask) {
  BinaryMask boundary(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.test(x, y)) continue;
      const bool interior = x > 0 && mask.test(x - 1, y) && x + 1 < mask.width() &&
                            mask.test(x + 1, y) && y > 0 && mask.test(x, y - 1) &&
                            y + 1 < mask.height() && mask.test(x, y + 1);
      if (!interior) {
        boundary.set(x, y);
      }
    }
  }
  return boundary;
}

/// Morphological dilation by a Euclidean disk: the result marks every
/// pixel within distance `radius` of a set pixel.
inline BinaryMask dilate_disk(const BinaryMask& mask, double radius) {
  if (radius < 0.0) {
    throw ConfigError("dilation radius must be >= 0");
  }
  const int r = static_cast<int>(std::floor(radius));
  std::vector<std::pair<int, int>> offsets;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      if (static_cast<double>(dx) * dx + static_cast<double>(dy) * dy <= radius * radius) {
        offsets.emplace_back(dx, dy);
      }
    }
  }
  BinaryMask out(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.test(x, y)) continue;
      for (const auto& [dx, dy] : offsets) {
        const int nx = x + dx;
        const int ny = y + dy;
        if (nx >= 0 && nx < mask.width() && ny >= 0 && ny < mask.height()) {
          out.set(nx, ny);
        }
      }
    }
  }
  return out;
}

/// DAVIS-style boundary tolerance: 0.8% of the image diagonal, rounded up.
inline double default_boundary_tolerance(int width, int height) {
  const double diagonal = std::sqrt(static_cast<double>(width) * width +
                                    static_cast<double>(height) * height);
  return std::ceil(0.008 * diagonal);
}

/// Contour accuracy F: precision/recall between the two boundary pixel
/// sets, where a boundary pixel matches if any opposite boundary pixel
/// lies within `tolerance_px` (Euclidean). Both boundaries empty -> 1.0;
/// degenerate precision+recall -> 0.
inline double boundary_f(const BinaryMask& pred, const BinaryMask& gt, double tolerance_px) {
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    throw ConfigError("mask dimension mismatch");
  }
  if (tolerance_px < 0.0) {
    throw ConfigError("boundary tolerance must be >= 0");
  }
  const BinaryMask pred_boundary = boundary_mask(pred);
  const BinaryMask gt_boundary = boundary_mask(gt);
  const std::size_t pred_count = pred_boundary.count();
  const std::size_t gt_count = gt_boundary.count();
  if (pred_count == 0 && gt_count == 0) {
    return 1.0;
  }
  double precision = 0.0;
  double recall = 0.0;
  if (pred_count > 0 && gt_count > 0) {
    const BinaryMask gt_reach = dilate_disk(gt_boundary, tolerance_px);
    const BinaryMask pred_reach = dilate_disk(pred_boundary, tolerance_px);
    precision = static_cast<double>(BinaryMask::intersection_count(pred_boundary, gt_reach)) /
                static_cast<double>(pred_count);
    recall = static_cast<double>(BinaryMask::intersection_count(gt_boundary, pred_reach)) /
             static_cast<double>(gt_count);
  }
  if (precision + recall == 0.0) {
    return 0.0;
  }
  return 2.0 * precision * recall / (precision + recall);
}

struct ExpressionScore {
  std::string expression_id;
  std::optional<double> j;
  std::optional<double> f;
  bool predicted_nonempty = false;
  bool gt_target_present = false;
};

/// Scores one expression. `gt` must be present exactly when the target
/// exists; without it only the empty/non-empty fact is recorded.
inline ExpressionScore score_expression(const Masklet& pred, const Masklet* gt,
                                        double tolerance_px) {
  ExpressionScore score;
  score.expression_id = pred.expression_id();
  score.predicted_nonempty = !pred.is_null();
  score.gt_target_present = gt != nullptr;
  if (gt == nullptr) {
    return score;
  }
  if (gt->frame_count() != pred.frame_count() || gt->width() != pred.width() ||
      gt->height() != pred.height()) {
    throw DataError("prediction and ground truth are misaligned for expression '" +
                    pred.expression_id() + "'");
  }
  double j_sum = 0.0;
  double f_sum = 0.0;
  for (int t = 0; t < pred.frame_count(); ++t) {
    j_sum += jaccard(pred.mask(t), gt->mask(t));
    f_sum += boundary_f(pred.mask(t), gt->mask(t), tolerance_px);
  }
  score.j = j_sum / pred.frame_count();
  score.f = f_sum / pred.frame_count();
  return score;
}

struct MetricsReport {
  std::vector<ExpressionScore> per_expression;
  double jf = 0.0;
  double n_acc = 0.0;
  double t_acc = 0.0;
  double final_score = 0.0;
  int n_target = 0;
  int n_notarget = 0;
};

inline double round2_half_up(double value) {
  return std::floor(value * 100.0 + 0.5) / 100.0;
}

/// Final challenge score: the arithmetic mean of J&F, N-acc and T-acc
/// (all percentages), rounded half-up to two decimals.
inline double final_from_triple(double jf, double n_acc, double t_acc) {
  return round2_half_up((jf + n_acc + t_acc) / 3.0);
}

/// Folds per-expression scores into the challenge metrics. J&F averages
/// only over target-present expressions; no-target expressions feed
/// N-acc. Both populations must be non-empty for Final to exist.
inline MetricsReport aggregate(const std::vector<ExpressionScore>& scores) {
  if (scores.empty()) {
    throw DataError("cannot aggregate an empty score list");
  }
  MetricsReport report;
  report.per_expression = scores;
  double jf_sum = 0.0;
  int t_hits = 0;
  int n_hits = 0;
  for (const ExpressionScore& s : scores) {
    if (s.gt_target_present) {
      if (!s.j.has_value() || !s.f.has_value()) {
        throw DataError("target expression '" + s.expression_id + "' is missing J/F");
      }
      ++report.n_target;
      jf_sum += (*s.j + *s.f) / 2.0;
      if (s.predicted_nonempty) ++t_hits;
    } else {
      ++report.n_notarget;
      if (!s.predicted_nonempty) ++n_hits;
    }
  }
  if (report.n_target == 0) {
    throw DataError("no target-present expressions: J&F and Final are undefined");
  }
  if (report.n_notarget == 0) {
    throw DataError("no no-target expressions: N-acc and Final are undefined");
  }
  report.jf = round2_half_up(100.0 * jf_sum / report.n_target);
  report.n_acc = round2_half_up(100.0 * n_hits / report.n_notarget);
  report.t_acc = round2_half_up(100.0 * t_hits / report.n_target);
  report.final_score = final_from_triple(report.jf, report.n_acc, report.t_acc);
  return report;
}

/// Builds a report straight from already-computed percentages, e.g. to
/// recompute a leaderboard Final from its published columns.
inline MetricsReport report_from_triple(double jf, double n_acc, double t_acc) {
  MetricsReport report;
  report.jf = jf;
  report.n_acc = n_acc;
  report.t_acc = t_acc;
  report.final_score = final_from_triple(jf, n_acc, t_acc);
  return report;
}

inline nlohmann::ordered_json report_to_json(const MetricsReport& report) {
  nlohmann::ordered_json doc;
  doc["schema_version"] = 1;
  doc["jf"] = report.jf;
  doc["n_acc"] = report.n_acc;
  doc["t_acc"] = report.t_acc;
  doc["final"] = report.final_score;
  doc["counts"] = {{"n_target", report.n_target}, {"n_notarget", report.n_notarget}};
  doc["per_expression"] = nlohmann::ordered_json::array();
  for (const ExpressionScore& s : report.per_expression) {
    nlohmann::ordered_json entry;
    entry["expression_id"] = s.expression_id;
    entry["gt_target_present"] = s.gt_target_present;
    entry["predicted_nonempty"] = s.predicted_nonempty;
    if (s.j.has_value()) entry["j"] = *s.j;
    if (s.f.has_value()) entry["f"] = *s.f;
    doc["per_expression"].push_back(std::move(entry));
  }
  return doc;
}

inline std::string report_table(const MetricsReport& report) {
  char line[256];
  std::string out;
  out += "  J&F     N-acc   T-acc   Final\n";
  std::snprintf(line, sizeof(line), "  %-7.2f %-7.2f %-7.2f %-7.2f\n", report.jf, report.n_acc,
                report.t_acc, report.final_score);
  out += line;
  if (report.n_target + report.n_notarget > 0) {
    std::snprintf(line, sizeof(line), "  (%d target, %d no-target expressions)\n",
                  report.n_target, report.n_notarget);
    out += line;
  }
  return out;
}

}  // namespace evos
