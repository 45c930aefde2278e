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
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "evos/base64.hpp"
#include "evos/core.hpp"
#include "evos/png_io.hpp"

namespace evos {

enum class Verdict { present, absent, error };

inline std::string verdict_to_string(Verdict v) {
  switch (v) {
    case Verdict::present: return "present";
    case Verdict::absent: return "absent";
    default: return "error";
  }
}

inline Verdict verdict_from_string(const std::string& s) {
  if (s == "present") return Verdict::present;
  if (s == "absent") return Verdict::absent;
  if (s == "error") return Verdict::error;
  throw DataError("unknown verdict '" + s + "'");
}

enum class ConsensusPolicy { unanimous, majority, single };

inline ConsensusPolicy consensus_from_string(const std::string& s) {
  if (s == "unanimous") return ConsensusPolicy::unanimous;
  if (s == "majority") return ConsensusPolicy::majority;
  if (s == "single") return ConsensusPolicy::single;
  throw ConfigError("unknown consensus policy '" + s + "'");
}

inline std::string consensus_to_string(ConsensusPolicy p) {
  switch (p) {
    case ConsensusPolicy::unanimous: return "unanimous";
    case ConsensusPolicy::majority: return "majority";
    default: return "single";
  }
}

struct JudgeVerdict {
  std::string judge_id;
  Verdict outcome = Verdict::error;
  std::int64_t latency_ms = 0;
  std::string raw_response;
};

enum class GateOutcome { proceed, null_target };

inline std::string outcome_to_string(GateOutcome o) {
  return o == GateOutcome::null_target ? "null_target" : "proceed";
}

struct GateDecision {
  std::string expression_id;
  std::vector<JudgeVerdict> verdicts;
  GateOutcome outcome = GateOutcome::proceed;
};

/// What a judge sees for one (video, expression) pair: the subsampled
/// encoded frames and the rendered prompt. expression_id is harness-side
/// bookkeeping and never crosses the wire.
struct JudgeRequest {
  std::string expression_id;
  std::string expression;
  std::vector<std::shared_ptr<const std::vector<std::uint8_t>>> frames;
  std::string prompt;
};

struct GateConfig {
  bool enabled = true;
  std::vector<std::string> judge_specs;
  ConsensusPolicy consensus = ConsensusPolicy::unanimous;
  int max_frames = 32;
  int timeout_ms = 10000;
  bool fail_open = true;
  std::string prompt_template =
      "You are shown frames sampled in temporal order from one video. "
      "Decide whether the referred object is actually present in the video. "
      "Expression: {expression}. Reply with exactly one word: PRESENT or ABSENT.";
};

/// Consensus over the collected verdicts. A null-target call always
/// requires at least two verdicts and no errors; judge failures keep the
/// expression on the segmentation path.
inline GateOutcome decide(const std::vector<JudgeVerdict>& verdicts, ConsensusPolicy policy) {
  if (verdicts.empty()) {
    throw ConfigError("gate decision requires at least one verdict");
  }
  if (policy == ConsensusPolicy::single) {
    return GateOutcome::proceed;
  }
  bool any_error = false;
  std::size_t absent = 0;
  for (const JudgeVerdict& v : verdicts) {
    if (v.outcome == Verdict::error) any_error = true;
    if (v.outcome == Verdict::absent) ++absent;
  }
  if (any_error || verdicts.size() < 2) {
    return GateOutcome::proceed;
  }
  if (policy == ConsensusPolicy::unanimous) {
    return absent == verdicts.size() ? GateOutcome::null_target : GateOutcome::proceed;
  }
  return 2 * absent > verdicts.size() ? GateOutcome::null_target : GateOutcome::proceed;
}

inline GateOutcome decide(const std::vector<JudgeVerdict>& verdicts) {
  return decide(verdicts, ConsensusPolicy::unanimous);
}

/// Maps free-form judge text to a verdict, case-insensitively. Replies
/// naming both or neither keyword are unusable and become errors.
inline Verdict parse_verdict_text(const std::string& text) {
  std::string lower(text.size(), '\0');
  std::transform(text.begin(), text.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  const bool has_absent = lower.find("absent") != std::string::npos;
  const bool has_present = lower.find("present") != std::string::npos;
  if (has_absent && !has_present) return Verdict::absent;
  if (has_present && !has_absent) return Verdict::present;
  return Verdict::error;
}

inline std::shared_ptr<const std::vector<std::uint8_t>> frame_bytes(const FrameRef& ref) {
  if (ref.in_memory()) {
    return ref.buffer;
  }
  return std::make_shared<const std::vector<std::uint8_t>>(read_file_bytes(ref.path));
}

/// Uniformly subsamples the video to at most max_frames frames and
/// renders the prompt template ({expression} placeholder).
inline JudgeRequest build_request(const VideoSequence& video, const ReferringExpression& expr,
                                  int max_frames, const std::string& prompt_template) {
  if (max_frames < 1) {
    throw ConfigError("judge frame budget must be >= 1");
  }
  JudgeRequest request;
  request.expression_id = expr.expression_id;
  request.expression = expr.text;
  const int length = video.frame_count();
  if (length <= max_frames) {
    for (const FrameRef& ref : video.frames) {
      request.frames.push_back(frame_bytes(ref));
    }
  } else {
    for (int i = 0; i < max_frames; ++i) {
      const int index = static_cast<int>(static_cast<std::int64_t>(i) * length / max_frames);
      request.frames.push_back(frame_bytes(video.frames[static_cast<std::size_t>(index)]));
    }
  }
  request.prompt = prompt_template;
  const std::string placeholder = "{expression}";
  std::size_t pos = 0;
  while ((pos = request.prompt.find(placeholder, pos)) != std::string::npos) {
    request.prompt.replace(pos, placeholder.size(), expr.text);
    pos += expr.text.size();
  }
  return request;
}

class JudgeClient {
public:
  virtual ~JudgeClient() = default;
  virtual std::string id() const = 0;
  virtual JudgeVerdict judge(const JudgeRequest& request) = 0;
};

/// Scripted judge backed by a fixture file mapping expression ids to
/// verdicts, with optional latency and error injection:
///   {"schema_version":1, "default":"present",
///    "expressions": {"e1": {"verdict":"absent", "latency_ms": 5}}}
class MockJudge final : public JudgeClient {
public:
  MockJudge(std::string id, nlohmann::json fixture) : id_(std::move(id)) {
    if (fixture.contains("default")) {
      default_ = verdict_from_string(fixture["default"].get<std::string>());
    }
    if (fixture.contains("expressions")) {
      for (auto& [key, value] : fixture["expressions"].items()) {
        Entry entry;
        entry.verdict = verdict_from_string(value.at("verdict").get<std::string>());
        entry.latency_ms = value.value("latency_ms", 0);
        entry.raw = value.value("raw", std::string());
        entries_[key] = std::move(entry);
      }
    }
  }

  static std::shared_ptr<MockJudge> from_file(std::string id, const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return std::make_shared<MockJudge>(std::move(id),
                                       nlohmann::json::parse(bytes.begin(), bytes.end()));
  }

  std::string id() const override { return id_; }

  JudgeVerdict judge(const JudgeRequest& request) override {
    Verdict verdict = default_;
    int latency = 0;
    std::string raw;
    auto it = entries_.find(request.expression_id);
    if (it != entries_.end()) {
      verdict = it->second.verdict;
      latency = it->second.latency_ms;
      raw = it->second.raw;
    }
    if (latency > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(latency));
    }
    if (raw.empty()) {
      raw = verdict == Verdict::error ? "scripted judge failure"
                                      : (verdict == Verdict::absent ? "ABSENT" : "PRESENT");
    }
    return JudgeVerdict{id_, verdict, latency, raw};
  }

private:
  struct Entry {
    Verdict verdict = Verdict::present;
    int latency_ms = 0;
    std::string raw;
  };

  std::string id_;
  Verdict default_ = Verdict::present;
  std::map<std::string, Entry> entries_;
};

inline nlohmann::json judge_request_to_wire(const JudgeRequest& request) {
  nlohmann::json doc;
  doc["expression"] = request.expression;
  doc["prompt"] = request.prompt;
  doc["frames"] = nlohmann::json::array();
  for (const auto& frame : request.frames) {
    doc["frames"].push_back(base64_encode(*frame));
  }
  return doc;
}

/// HTTP judge speaking the JSON wire protocol:
///   POST <path> {"expression", "frames":[base64...], "prompt"}
///   200 -> {"verdict":"present"|"absent", "confidence"?: number}
/// Anything else (non-200, bad schema) becomes an error verdict. An API
/// key, when present in EVOS_JUDGE_API_KEY, is sent as a Bearer token.
class HttpJudge final : public JudgeClient {
public:
  HttpJudge(std::string id, const std::string& url, int timeout_ms)
      : id_(std::move(id)), timeout_ms_(timeout_ms) {
    const auto split = url.find('/', url.find("//") == std::string::npos
                                        ? 0
                                        : url.find("//") + 2);
    if (split == std::string::npos) {
      base_ = url;
      path_ = "/";
    } else {
      base_ = url.substr(0, split);
      path_ = url.substr(split);
    }
  }

  std::string id() const override { return id_; }

  JudgeVerdict judge(const JudgeRequest& request) override {
    const auto start = std::chrono::steady_clock::now();
    auto elapsed_ms = [&start]() {
      return std::chrono::duration_cast<std::chrono::milliseconds>(
                 std::chrono::steady_clock::now() - start)
          .count();
    };
    httplib::Client client(base_);
    client.set_connection_timeout(0, timeout_ms_ * 1000);
    client.set_read_timeout(timeout_ms_ / 1000, (timeout_ms_ % 1000) * 1000);
    if (const char* key = std::getenv("EVOS_JUDGE_API_KEY")) {
      client.set_default_headers({{"Authorization", std::string("Bearer ") + key}});
    }
    const std::string body = judge_request_to_wire(request).dump();
    auto result = client.Post(path_, body, "application/json");
    if (!result) {
      return JudgeVerdict{id_, Verdict::error, elapsed_ms(), "judge unreachable: " + base_};
    }
    if (result->status != 200) {
      return JudgeVerdict{id_, Verdict::error, elapsed_ms(),
                          "judge returned HTTP " + std::to_string(result->status)};
    }
    try {
      const auto doc = nlohmann::json::parse(result->body);
      const auto verdict = verdict_from_string(doc.at("verdict").get<std::string>());
      if (verdict == Verdict::error) {
        return JudgeVerdict{id_, Verdict::error, elapsed_ms(), "judge reported an error"};
      }
      return JudgeVerdict{id_, verdict, elapsed_ms(), result->body};
    } catch (const std::exception& e) {
      return JudgeVerdict{id_, Verdict::error, elapsed_ms(),
                          std::string("invalid judge response: ") + e.what()};
    }
  }

private:
  std::string id_;
  std::string base_;
  std::string path_;
  int timeout_ms_;
};

/// Queries all judges concurrently (bounded by timeout_ms against a
/// shared deadline) and folds the verdicts through decide(). Judges that
/// miss the deadline contribute timeout error verdicts; their worker
/// threads finish in the background.
inline GateDecision verify(const VideoSequence& video, const ReferringExpression& expr,
                           const std::vector<std::shared_ptr<JudgeClient>>& judges,
                           const GateConfig& cfg) {
  if (judges.empty()) {
    throw ConfigError("gate verification requires at least one judge");
  }
  if (cfg.consensus != ConsensusPolicy::single && judges.size() < 2) {
    throw ConfigError("consensus '" + consensus_to_string(cfg.consensus) +
                      "' requires at least 2 judges");
  }
  auto request = std::make_shared<JudgeRequest>(
      build_request(video, expr, cfg.max_frames, cfg.prompt_template));

  std::vector<std::future<JudgeVerdict>> futures;
  futures.reserve(judges.size());
  for (const auto& judge : judges) {
    auto promise = std::make_shared<std::promise<JudgeVerdict>>();
    futures.push_back(promise->get_future());
    std::thread([judge, request, promise]() {
      const auto start = std::chrono::steady_clock::now();
      JudgeVerdict verdict;
      try {
        verdict = judge->judge(*request);
      } catch (const std::exception& e) {
        verdict = JudgeVerdict{judge->id(), Verdict::error, 0, e.what()};
      }
      verdict.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::steady_clock::now() - start)
                               .count();
      try {
        promise->set_value(std::move(verdict));
      } catch (...) {
        // future already abandoned; nothing to deliver to
      }
    }).detach();
  }

  const auto deadline =
      std::chrono::steady_clock::now() + std::chrono::milliseconds(cfg.timeout_ms);
  GateDecision decision;
  decision.expression_id = expr.expression_id;
  for (std::size_t i = 0; i < futures.size(); ++i) {
    if (futures[i].wait_until(deadline) == std::future_status::ready) {
      decision.verdicts.push_back(futures[i].get());
    } else {
      decision.verdicts.push_back(JudgeVerdict{
          judges[i]->id(), Verdict::error, cfg.timeout_ms,
          "timeout after " + std::to_string(cfg.timeout_ms) + "ms"});
    }
  }
  decision.outcome = decide(decision.verdicts, cfg.consensus);
  return decision;
}

inline nlohmann::ordered_json decision_to_json(const GateDecision& decision) {
  nlohmann::ordered_json doc;
  doc["expression_id"] = decision.expression_id;
  doc["outcome"] = outcome_to_string(decision.outcome);
  doc["verdicts"] = nlohmann::ordered_json::array();
  for (const JudgeVerdict& v : decision.verdicts) {
    doc["verdicts"].push_back({{"judge_id", v.judge_id},
                               {"outcome", verdict_to_string(v.outcome)},
                               {"latency_ms", v.latency_ms},
                               {"raw_response", v.raw_response}});
  }
  return doc;
}

}  // namespace evos
