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

#include <random>

#include "evos/metrics.hpp"
#include "oracles.hpp"

namespace {

evos::BinaryMask random_mask(std::mt19937& rng, int w, int h, int density_mod) {
  evos::BinaryMask mask(w, h);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (static_cast<int>(rng() % static_cast<unsigned>(density_mod)) == 0) {
      mask.set(i);
    }
  }
  return mask;
}

evos::BinaryMask rect_mask(int w, int h, int x0, int y0, int x1, int y1) {
  evos::BinaryMask mask(w, h);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      mask.set(x, y);
    }
  }
  return mask;
}

}  // namespace

TEST_CASE("jaccard basics") {
  const auto a = rect_mask(8, 8, 1, 1, 4, 4);
  CHECK(evos::jaccard(a, a) == 1.0);

  const auto b = rect_mask(8, 8, 5, 5, 7, 7);
  CHECK(evos::jaccard(a, b) == 0.0);

  // two 2x2 blocks sharing a 1x2 column: 2 common, 6 total
  const auto left = rect_mask(8, 8, 1, 1, 2, 2);
  const auto right = rect_mask(8, 8, 2, 1, 3, 2);
  CHECK(evos::jaccard(left, right) == Catch::Approx(2.0 / 6.0));

  CHECK(evos::jaccard(evos::BinaryMask(4, 4), evos::BinaryMask(4, 4)) == 1.0);
  CHECK_THROWS_AS(evos::jaccard(evos::BinaryMask(4, 4), evos::BinaryMask(5, 4)),
                  evos::ConfigError);
}

TEST_CASE("jaccard matches the brute-force popcount oracle") {
  std::mt19937 rng(61);
  for (int trial = 0; trial < 1000; ++trial) {
    const int w = 1 + static_cast<int>(rng() % 64);
    const int h = 1 + static_cast<int>(rng() % 64);
    const auto a = random_mask(rng, w, h, 2 + static_cast<int>(rng() % 6));
    const auto b = random_mask(rng, w, h, 2 + static_cast<int>(rng() % 6));
    const double expected = oracles::jaccard_brute(oracles::grid_from_mask(a),
                                                   oracles::grid_from_mask(b));
    REQUIRE(evos::jaccard(a, b) == expected);
    REQUIRE(evos::jaccard(b, a) == evos::jaccard(a, b));  // symmetry
  }
}

TEST_CASE("boundary extraction marks the 4-connected rim") {
  const auto block = rect_mask(6, 6, 1, 1, 4, 4);
  const auto boundary = evos::boundary_mask(block);
  CHECK(boundary.count() == 12);      // 4x4 block, 2x2 interior
  CHECK(boundary.test(1, 1));
  CHECK_FALSE(boundary.test(2, 2));

  // pixels on the image edge are boundary even with no background there
  evos::BinaryMask full(3, 3);
  for (std::size_t i = 0; i < full.size(); ++i) full.set(i);
  CHECK(evos::boundary_mask(full).count() == 8);
}

TEST_CASE("boundary_f identities and conventions") {
  const auto block = rect_mask(8, 8, 2, 2, 5, 5);
  CHECK(evos::boundary_f(block, block, 0.0) == 1.0);
  CHECK(evos::boundary_f(block, block, 2.0) == 1.0);
  CHECK(evos::boundary_f(evos::BinaryMask(8, 8), evos::BinaryMask(8, 8), 1.0) == 1.0);
  // one side empty: nothing matches, F = 0
  CHECK(evos::boundary_f(block, evos::BinaryMask(8, 8), 3.0) == 0.0);
  CHECK(evos::boundary_f(evos::BinaryMask(8, 8), block, 3.0) == 0.0);
  CHECK_THROWS_AS(evos::boundary_f(block, evos::BinaryMask(4, 4), 1.0), evos::ConfigError);
  CHECK_THROWS_AS(evos::boundary_f(block, block, -1.0), evos::ConfigError);
}

TEST_CASE("a 1px shift is invisible at tolerance 1 and fatal at tolerance 0") {
  // disjoint boundaries: single-pixel masks one pixel apart on an 8x8 grid
  evos::BinaryMask pred(8, 8);
  pred.set(3, 4);
  evos::BinaryMask gt(8, 8);
  gt.set(3, 3);
  CHECK(evos::boundary_f(pred, gt, 0.0) == 0.0);
  CHECK(evos::boundary_f(pred, gt, 1.0) == 1.0);
  // the independent oracle agrees
  const auto pg = oracles::grid_from_mask(pred);
  const auto gg = oracles::grid_from_mask(gt);
  CHECK(oracles::boundary_f_brute(pg, gg, 0.0) == 0.0);
  CHECK(oracles::boundary_f_brute(pg, gg, 1.0) == 1.0);
}

TEST_CASE("boundary_f matches the exact bipartite oracle on random shapes") {
  std::mt19937 rng(67);
  for (int trial = 0; trial < 400; ++trial) {
    const int w = 2 + static_cast<int>(rng() % 15);
    const int h = 2 + static_cast<int>(rng() % 15);
    const auto pred = random_mask(rng, w, h, 3);
    const auto gt = random_mask(rng, w, h, 3);
    const double tol = static_cast<double>(rng() % 4);
    const double expected =
        oracles::boundary_f_brute(oracles::grid_from_mask(pred), oracles::grid_from_mask(gt), tol);
    const double actual = evos::boundary_f(pred, gt, tol);
    REQUIRE(actual == Catch::Approx(expected).margin(1e-9));
    REQUIRE(evos::boundary_f(gt, pred, tol) == Catch::Approx(actual).margin(1e-12));
  }
}

TEST_CASE("default boundary tolerance follows the 0.8% diagonal rule") {
  CHECK(evos::default_boundary_tolerance(64, 48) == 1.0);    // diag 80 -> 0.64 -> ceil 1
  CHECK(evos::default_boundary_tolerance(1920, 1080) == 18.0);
}

TEST_CASE("score_expression averages per-frame J and F") {
  std::vector<evos::BinaryMask> gt_masks{rect_mask(8, 8, 1, 1, 4, 4),
                                         rect_mask(8, 8, 2, 2, 5, 5)};
  const evos::Masklet gt("e", gt_masks);
  const evos::Masklet same("e", gt_masks);
  const auto perfect = evos::score_expression(same, &gt, 1.0);
  CHECK(perfect.j == 1.0);
  CHECK(perfect.f == 1.0);
  CHECK(perfect.predicted_nonempty);
  CHECK(perfect.gt_target_present);

  // null prediction on a target expression counts against T-acc
  std::vector<evos::BinaryMask> empty_masks{evos::BinaryMask(8, 8), evos::BinaryMask(8, 8)};
  const auto missed = evos::score_expression(evos::Masklet("e", empty_masks), &gt, 1.0);
  CHECK_FALSE(missed.predicted_nonempty);
  CHECK(missed.gt_target_present);
  CHECK(*missed.j == 0.0);

  // no-target expression: only the emptiness fact is recorded
  const auto gated = evos::score_expression(evos::Masklet("e", empty_masks), nullptr, 1.0);
  CHECK_FALSE(gated.predicted_nonempty);
  CHECK_FALSE(gated.gt_target_present);
  CHECK_FALSE(gated.j.has_value());

  std::vector<evos::BinaryMask> short_masks{rect_mask(8, 8, 1, 1, 4, 4)};
  CHECK_THROWS_AS(evos::score_expression(evos::Masklet("e", short_masks), &gt, 1.0),
                  evos::DataError);
}

TEST_CASE("final score reproduces the published leaderboard arithmetic") {
  struct Row {
    double jf, n_acc, t_acc, final;
  };
  const std::vector<Row> leaderboard = {
      {78.97, 96.15, 97.59, 90.91},
      {71.06, 100.00, 96.52, 89.19},
      {71.30, 96.15, 98.93, 88.79},
      {70.38, 96.15, 98.40, 88.31},
      {68.37, 88.46, 96.79, 84.54},
  };
  for (const Row& row : leaderboard) {
    const evos::MetricsReport report = evos::report_from_triple(row.jf, row.n_acc, row.t_acc);
    CHECK(std::abs(report.final_score - row.final) <= 0.01 + 1e-9);
  }

  // ablation-style triples; expected means computed by hand
  CHECK(evos::final_from_triple(68.04, 5.26, 99.77) == Catch::Approx(57.69).margin(1e-9));
  CHECK(evos::final_from_triple(72.84, 97.37, 100.00) == Catch::Approx(90.07).margin(1e-9));
}

TEST_CASE("aggregate folds expression scores into the challenge metrics") {
  std::vector<evos::ExpressionScore> scores;
  evos::ExpressionScore target;
  target.expression_id = "t0";
  target.j = 0.8;
  target.f = 0.6;
  target.predicted_nonempty = true;
  target.gt_target_present = true;
  scores.push_back(target);

  evos::ExpressionScore target2 = target;
  target2.expression_id = "t1";
  target2.j = 0.5;
  target2.f = 0.5;
  scores.push_back(target2);

  evos::ExpressionScore missing;
  missing.expression_id = "n0";
  missing.predicted_nonempty = false;
  missing.gt_target_present = false;
  scores.push_back(missing);

  evos::ExpressionScore hallucinated = missing;
  hallucinated.expression_id = "n1";
  hallucinated.predicted_nonempty = true;
  scores.push_back(hallucinated);

  const evos::MetricsReport report = evos::aggregate(scores);
  CHECK(report.n_target == 2);
  CHECK(report.n_notarget == 2);
  CHECK(report.jf == Catch::Approx(60.0));     // mean of 70 and 50
  CHECK(report.n_acc == Catch::Approx(50.0));  // one of two no-targets kept null
  CHECK(report.t_acc == Catch::Approx(100.0));
  CHECK(report.final_score == Catch::Approx(70.0));
  CHECK(report.final_score ==
        Catch::Approx(evos::final_from_triple(report.jf, report.n_acc, report.t_acc)));
}

TEST_CASE("aggregate requires both expression populations") {
  CHECK_THROWS_AS(evos::aggregate({}), evos::DataError);

  evos::ExpressionScore target;
  target.expression_id = "t";
  target.j = 1.0;
  target.f = 1.0;
  target.predicted_nonempty = true;
  target.gt_target_present = true;
  CHECK_THROWS_AS(evos::aggregate({target}), evos::DataError);  // no no-target

  evos::ExpressionScore notarget;
  notarget.expression_id = "n";
  notarget.gt_target_present = false;
  CHECK_THROWS_AS(evos::aggregate({notarget}), evos::DataError);  // no target
}

TEST_CASE("rounding is half-up at two decimals") {
  CHECK(evos::round2_half_up(89.1933) == 89.19);
  CHECK(evos::round2_half_up(89.195) == 89.20);
  CHECK(evos::round2_half_up(0.005) == 0.01);
  CHECK(evos::round2_half_up(100.0) == 100.0);
}
