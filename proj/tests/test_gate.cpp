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

#include <algorithm>
#include <atomic>
#include <thread>

#include <httplib.h>

#include "evos/gate.hpp"
#include "evos/png_io.hpp"
#include "oracles.hpp"

namespace {

evos::JudgeVerdict verdict(evos::Verdict outcome) {
  return evos::JudgeVerdict{"j", outcome, 0, ""};
}

evos::VideoSequence tiny_video(int frames) {
  evos::VideoSequence video;
  video.video_id = "v";
  video.width = 8;
  video.height = 8;
  const auto png = std::make_shared<const std::vector<std::uint8_t>>(
      evos::encode_png_rgb8(evos::Image(8, 8, evos::Rgb{9, 9, 9})));
  for (int i = 0; i < frames; ++i) {
    video.frames.push_back(evos::FrameRef{i, "", png});
  }
  return video;
}

evos::ReferringExpression expression(const std::string& id) {
  evos::ReferringExpression expr;
  expr.expression_id = id;
  expr.video_id = "v";
  expr.text = "the red disk";
  return expr;
}

}  // namespace

TEST_CASE("decide matches the exhaustive truth table, any order") {
  const std::vector<evos::Verdict> alphabet = {evos::Verdict::present, evos::Verdict::absent,
                                               evos::Verdict::error};
  for (int k = 1; k <= 3; ++k) {
    std::vector<int> digits(static_cast<std::size_t>(k), 0);
    while (true) {
      std::vector<evos::JudgeVerdict> verdicts;
      std::vector<evos::Verdict> raw;
      for (int d : digits) {
        verdicts.push_back(verdict(alphabet[static_cast<std::size_t>(d)]));
        raw.push_back(alphabet[static_cast<std::size_t>(d)]);
      }
      const evos::GateOutcome expected = oracles::expected_unanimous(raw);
      REQUIRE(evos::decide(verdicts) == expected);

      // permutation invariance over the verdict list
      std::vector<int> permutation = digits;
      std::sort(permutation.begin(), permutation.end());
      do {
        std::vector<evos::JudgeVerdict> permuted;
        for (int d : permutation) {
          permuted.push_back(verdict(alphabet[static_cast<std::size_t>(d)]));
        }
        REQUIRE(evos::decide(permuted) == expected);
      } while (std::next_permutation(permutation.begin(), permutation.end()));

      int carry = k - 1;
      while (carry >= 0 && ++digits[static_cast<std::size_t>(carry)] == 3) {
        digits[static_cast<std::size_t>(carry)] = 0;
        --carry;
      }
      if (carry < 0) break;
    }
  }
  CHECK_THROWS_AS(evos::decide({}), evos::ConfigError);
}

TEST_CASE("adding a present or error verdict never creates a null_target") {
  std::vector<evos::JudgeVerdict> base = {verdict(evos::Verdict::absent),
                                          verdict(evos::Verdict::absent)};
  REQUIRE(evos::decide(base) == evos::GateOutcome::null_target);
  for (evos::Verdict extra : {evos::Verdict::present, evos::Verdict::error}) {
    auto extended = base;
    extended.push_back(verdict(extra));
    CHECK(evos::decide(extended) == evos::GateOutcome::proceed);
  }

  // more generally: anything that was proceed stays proceed
  const std::vector<evos::Verdict> alphabet = {evos::Verdict::present, evos::Verdict::absent,
                                               evos::Verdict::error};
  for (evos::Verdict a : alphabet) {
    for (evos::Verdict b : alphabet) {
      std::vector<evos::JudgeVerdict> pair = {verdict(a), verdict(b)};
      if (evos::decide(pair) == evos::GateOutcome::proceed) {
        for (evos::Verdict extra : {evos::Verdict::present, evos::Verdict::error}) {
          auto extended = pair;
          extended.push_back(verdict(extra));
          CHECK(evos::decide(extended) == evos::GateOutcome::proceed);
        }
      }
    }
  }
}

TEST_CASE("alternate consensus policies") {
  std::vector<evos::JudgeVerdict> two_of_three = {verdict(evos::Verdict::absent),
                                                  verdict(evos::Verdict::absent),
                                                  verdict(evos::Verdict::present)};
  CHECK(evos::decide(two_of_three, evos::ConsensusPolicy::unanimous) ==
        evos::GateOutcome::proceed);
  CHECK(evos::decide(two_of_three, evos::ConsensusPolicy::majority) ==
        evos::GateOutcome::null_target);
  CHECK(evos::decide(two_of_three, evos::ConsensusPolicy::single) == evos::GateOutcome::proceed);

  // single-judge mode never declares null_target
  CHECK(evos::decide({verdict(evos::Verdict::absent)}, evos::ConsensusPolicy::single) ==
        evos::GateOutcome::proceed);

  // errors fail open under every policy
  std::vector<evos::JudgeVerdict> with_error = {verdict(evos::Verdict::absent),
                                                verdict(evos::Verdict::absent),
                                                verdict(evos::Verdict::error)};
  CHECK(evos::decide(with_error, evos::ConsensusPolicy::majority) == evos::GateOutcome::proceed);
}

TEST_CASE("verdict text parsing is case-insensitive and strict") {
  CHECK(evos::parse_verdict_text("PRESENT") == evos::Verdict::present);
  CHECK(evos::parse_verdict_text("  absent.") == evos::Verdict::absent);
  CHECK(evos::parse_verdict_text("The object is Present in frame 3") == evos::Verdict::present);
  CHECK(evos::parse_verdict_text("maybe") == evos::Verdict::error);
  CHECK(evos::parse_verdict_text("present or absent") == evos::Verdict::error);
  CHECK(evos::parse_verdict_text("") == evos::Verdict::error);
}

TEST_CASE("build_request subsamples uniformly and renders the prompt") {
  const auto video = tiny_video(100);
  const auto expr = expression("e");

  const auto all = evos::build_request(video, expr, 100, "find {expression} now");
  CHECK(all.frames.size() == 100);
  CHECK(all.prompt == "find the red disk now");

  const auto ten = evos::build_request(video, expr, 10, "{expression}");
  REQUIRE(ten.frames.size() == 10);
  // stride 10: frame pointers are shared, so identity comparison works
  for (int i = 0; i < 10; ++i) {
    CHECK(ten.frames[static_cast<std::size_t>(i)] ==
          video.frames[static_cast<std::size_t>(i * 10)].buffer);
  }

  const auto clamped = evos::build_request(tiny_video(3), expr, 10, "{expression}");
  CHECK(clamped.frames.size() == 3);

  CHECK_THROWS_AS(evos::build_request(video, expr, 0, "p"), evos::ConfigError);
}

TEST_CASE("verify runs mock judges concurrently and respects scripts") {
  const auto video = tiny_video(4);
  evos::GateConfig cfg;
  cfg.timeout_ms = 5000;

  nlohmann::json fixture = {
      {"schema_version", 1},
      {"default", "present"},
      {"expressions",
       {{"gone", {{"verdict", "absent"}}}, {"broken", {{"verdict", "error"}}}}}};
  auto judge_a = std::make_shared<evos::MockJudge>("a", fixture);
  auto judge_b = std::make_shared<evos::MockJudge>("b", fixture);
  const std::vector<std::shared_ptr<evos::JudgeClient>> judges{judge_a, judge_b};

  const auto gone = evos::verify(video, expression("gone"), judges, cfg);
  CHECK(gone.outcome == evos::GateOutcome::null_target);
  REQUIRE(gone.verdicts.size() == 2);

  const auto here = evos::verify(video, expression("here"), judges, cfg);
  CHECK(here.outcome == evos::GateOutcome::proceed);

  const auto broken = evos::verify(video, expression("broken"), judges, cfg);
  CHECK(broken.outcome == evos::GateOutcome::proceed);  // fail-open
  CHECK(broken.verdicts[0].outcome == evos::Verdict::error);
}

TEST_CASE("verify times out slow judges and proceeds") {
  const auto video = tiny_video(2);
  evos::GateConfig cfg;
  cfg.timeout_ms = 50;

  nlohmann::json slow_fixture = {
      {"expressions", {{"e", {{"verdict", "absent"}, {"latency_ms", 2000}}}}}};
  nlohmann::json fast_fixture = {{"expressions", {{"e", {{"verdict", "absent"}}}}}};
  const std::vector<std::shared_ptr<evos::JudgeClient>> judges{
      std::make_shared<evos::MockJudge>("slow", slow_fixture),
      std::make_shared<evos::MockJudge>("fast", fast_fixture)};

  const auto decision = evos::verify(video, expression("e"), judges, cfg);
  CHECK(decision.outcome == evos::GateOutcome::proceed);
  REQUIRE(decision.verdicts.size() == 2);
  CHECK(decision.verdicts[0].outcome == evos::Verdict::error);
  CHECK(decision.verdicts[0].raw_response.find("timeout") != std::string::npos);
  CHECK(decision.verdicts[1].outcome == evos::Verdict::absent);
}

TEST_CASE("verify enforces the two-judge precondition") {
  const auto video = tiny_video(2);
  evos::GateConfig cfg;
  const std::vector<std::shared_ptr<evos::JudgeClient>> one{
      std::make_shared<evos::MockJudge>("only", nlohmann::json::object())};
  CHECK_THROWS_AS(evos::verify(video, expression("e"), one, cfg), evos::ConfigError);

  cfg.consensus = evos::ConsensusPolicy::single;  // explicit override: gating disabled
  const auto decision = evos::verify(video, expression("e"), one, cfg);
  CHECK(decision.outcome == evos::GateOutcome::proceed);
}

TEST_CASE("http judge speaks the wire protocol") {
  httplib::Server server;
  std::atomic<int> requests{0};
  server.Post("/verify", [&](const httplib::Request& req, httplib::Response& res) {
    ++requests;
    const auto doc = nlohmann::json::parse(req.body);
    REQUIRE(doc.contains("expression"));
    REQUIRE(doc.contains("prompt"));
    REQUIRE(doc.at("frames").is_array());
    REQUIRE(doc.at("frames").size() >= 1);
    // frames must be valid base64 PNG
    const auto bytes = evos::base64_decode(doc.at("frames")[0].get<std::string>());
    const auto [w, h] = evos::png_dimensions(bytes);
    REQUIRE(w == 8);
    REQUIRE(h == 8);
    const std::string text = doc.at("expression").get<std::string>();
    nlohmann::json reply;
    reply["verdict"] = text.find("red") != std::string::npos ? "absent" : "present";
    reply["confidence"] = 0.9;
    res.set_content(reply.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server_thread([&]() { server.listen_after_bind(); });
  server.wait_until_ready();

  const auto video = tiny_video(3);
  evos::HttpJudge judge("hj", "http://127.0.0.1:" + std::to_string(port) + "/verify", 2000);
  const auto request = evos::build_request(video, expression("e"), 8, "{expression}");
  const auto v1 = judge.judge(request);
  CHECK(v1.outcome == evos::Verdict::absent);

  auto other = expression("e2");
  other.text = "the blue cube";
  const auto v2 = judge.judge(evos::build_request(video, other, 8, "{expression}"));
  CHECK(v2.outcome == evos::Verdict::present);

  // non-200 and invalid payloads become error verdicts
  server.Post("/broken", [](const httplib::Request&, httplib::Response& res) {
    res.status = 500;
  });
  evos::HttpJudge broken("hb", "http://127.0.0.1:" + std::to_string(port) + "/broken", 2000);
  CHECK(broken.judge(request).outcome == evos::Verdict::error);

  evos::HttpJudge unreachable("hu", "http://127.0.0.1:1/verify", 300);
  CHECK(unreachable.judge(request).outcome == evos::Verdict::error);

  CHECK(requests.load() == 2);
  server.stop();
  server_thread.join();
}
