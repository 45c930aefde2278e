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

// Library walkthrough: build masks by hand, score them, and compact a
// tiny clip. Run it from anywhere; it only writes to the current dir.

#include <cstdio>

#include "evos/kfc.hpp"
#include "evos/metrics.hpp"
#include "evos/png_io.hpp"

int main() {
  // Ground truth: a 12x12 square on three frames, drifting right.
  // Prediction: the same square, one pixel late on the last frame.
  std::vector<evos::BinaryMask> gt_masks;
  std::vector<evos::BinaryMask> pred_masks;
  for (int t = 0; t < 3; ++t) {
    evos::BinaryMask gt(32, 32);
    evos::BinaryMask pred(32, 32);
    for (int y = 8; y < 20; ++y) {
      for (int x = 6 + 2 * t; x < 18 + 2 * t; ++x) {
        gt.set(x, y);
        pred.set(t == 2 ? x - 1 : x, y);
      }
    }
    gt_masks.push_back(std::move(gt));
    pred_masks.push_back(std::move(pred));
  }
  const evos::Masklet gt("demo", gt_masks);
  const evos::Masklet pred("demo", pred_masks);

  const double tolerance = evos::default_boundary_tolerance(32, 32);
  const evos::ExpressionScore score = evos::score_expression(pred, &gt, tolerance);
  std::printf("per-expression J=%.4f F=%.4f (tolerance %.0fpx)\n", *score.j, *score.f,
              tolerance);

  // A no-target expression answered correctly with a null masklet.
  evos::ExpressionScore gated;
  gated.expression_id = "demo-notarget";
  gated.predicted_nonempty = false;
  gated.gt_target_present = false;

  const evos::MetricsReport report = evos::aggregate({score, gated});
  std::printf("%s", evos::report_table(report).c_str());

  // Key-frame compression of a five-frame clip (grid 2).
  std::vector<evos::Image> clip;
  for (int i = 0; i < 5; ++i) {
    clip.push_back(evos::Image(32, 32, evos::Rgb{static_cast<std::uint8_t>(50 * i), 128, 90}));
  }
  const evos::CompositeFrame composite = evos::compress_clip(0, clip, 2);
  evos::write_png_rgb8("demo_mosaic.png", composite.mosaic);
  std::printf("wrote demo_mosaic.png (%dx%d, %dx%d tiles)\n", composite.mosaic.width,
              composite.mosaic.height, composite.tile_width, composite.tile_height);
  return 0;
}
