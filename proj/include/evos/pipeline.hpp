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

#include <atomic>
#include <filesystem>
#include <fstream>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "evos/backend.hpp"
#include "evos/clip_plan.hpp"
#include "evos/core.hpp"
#include "evos/dataset.hpp"
#include "evos/gate.hpp"
#include "evos/kfc.hpp"
#include "evos/metrics.hpp"

namespace evos {

struct RunConfig {
  SchedulerConfig scheduler;
  GateConfig gate;
  std::string backend_spec = "zero";
  double tau = 0.5;
  int parallelism = 4;
  bool evaluate = true;
  double tolerance_px = -1.0;  // < 0: DAVIS default per video dimensions

  void validate() const {
    scheduler.validate();
    if (!(tau > 0.0 && tau <= 1.0)) {
      throw ConfigError("tau must be in (0,1]");
    }
    if (parallelism < 1) {
      throw ConfigError("parallelism must be >= 1");
    }
    if (gate.max_frames < 1 || gate.timeout_ms < 1) {
      throw ConfigError("gate frame budget and timeout must be positive");
    }
  }
};

struct ExpressionOutcome {
  enum class Status { ok, null_gated, failed };

  std::string expression_id;
  Status status = Status::failed;
  std::string error;
  int backend_requests = 0;
  std::optional<GateDecision> gate;
};

struct RunResult {
  std::vector<ExpressionOutcome> outcomes;
  std::optional<MetricsReport> report;
  std::filesystem::path predictions_dir;
  int failed = 0;
  int total_backend_requests = 0;
};

/// Thread-safe JSONL sink for gate verdicts and backend calls. Log lines
/// carry timings, so the log file is excluded from the byte-determinism
/// contract that predictions and reports honor.
class JsonlLogger {
public:
  JsonlLogger() = default;

  explicit JsonlLogger(const std::filesystem::path& path) {
    std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::trunc);
    if (!out_) {
      throw DataError("cannot open log file: " + path.string());
    }
  }

  void log(const nlohmann::ordered_json& line) {
    if (!out_.is_open()) return;
    std::lock_guard<std::mutex> lock(mutex_);
    out_ << line.dump() << '\n';
    out_.flush();
  }

private:
  std::ofstream out_;
  std::mutex mutex_;
};

/// Judge that answers from the loaded ground truth; the scripted-correct
/// jury used for oracle runs.
class OracleJudge final : public JudgeClient {
public:
  OracleJudge(std::string id, const DatasetManifest& manifest) : id_(std::move(id)) {
    for (const ReferringExpression& expr : manifest.expressions) {
      if (expr.gt_target_present.has_value()) {
        present_[expr.expression_id] = *expr.gt_target_present;
      }
    }
  }

  std::string id() const override { return id_; }

  JudgeVerdict judge(const JudgeRequest& request) override {
    auto it = present_.find(request.expression_id);
    if (it == present_.end()) {
      return JudgeVerdict{id_, Verdict::error, 0, "no ground truth for expression"};
    }
    return JudgeVerdict{id_, it->second ? Verdict::present : Verdict::absent, 0,
                        it->second ? "PRESENT" : "ABSENT"};
  }

private:
  std::string id_;
  std::map<std::string, bool> present_;
};

/// Judge spec forms: "mock:<fixture path>", "oracle", or an http(s) URL.
inline std::vector<std::shared_ptr<JudgeClient>> make_judges(
    const std::vector<std::string>& specs, const DatasetManifest& manifest, int timeout_ms) {
  std::vector<std::shared_ptr<JudgeClient>> judges;
  int i = 0;
  for (const std::string& spec : specs) {
    const std::string id = "judge" + std::to_string(i++);
    if (spec.rfind("mock:", 0) == 0) {
      judges.push_back(MockJudge::from_file(id + ":mock", spec.substr(5)));
    } else if (spec == "oracle") {
      judges.push_back(std::make_shared<OracleJudge>(id + ":oracle", manifest));
    } else if (spec.rfind("http://", 0) == 0 || spec.rfind("https://", 0) == 0) {
      judges.push_back(std::make_shared<HttpJudge>(id + ":http", spec, timeout_ms));
    } else {
      throw ConfigError("unknown judge spec '" + spec + "'");
    }
  }
  return judges;
}

/// Backend spec forms: "oracle", "forced", "zero", or an http(s) URL.
inline std::shared_ptr<SegmentationBackend> make_backend(const std::string& spec,
                                                         const DatasetManifest& manifest,
                                                         int timeout_ms) {
  if (spec == "oracle") {
    return std::make_shared<OracleBackend>(load_ground_truth(manifest));
  }
  if (spec == "forced") {
    return std::make_shared<ForcedMappingBackend>();
  }
  if (spec == "zero") {
    return std::make_shared<ConstantZeroBackend>();
  }
  if (spec.rfind("http://", 0) == 0 || spec.rfind("https://", 0) == 0) {
    return std::make_shared<HttpBackend>(spec, timeout_ms);
  }
  throw ConfigError("unknown backend spec '" + spec + "'");
}

namespace detail {

/// Segments every token of the planned video and assembles the masklet.
/// Token requests run concurrently; any backend failure aborts the
/// expression (an accidental all-empty masklet would silently count as a
/// confident "no target").
inline Masklet segment_expression(const VideoSequence& video, const ReferringExpression& expr,
                                  const ClipPlan& plan,
                                  const std::shared_ptr<SegmentationBackend>& backend,
                                  double tau, std::atomic<int>& request_count,
                                  JsonlLogger* logger) {
  std::vector<Image> images;
  images.reserve(video.frames.size());
  for (const FrameRef& ref : video.frames) {
    Image image = load_frame_image(ref);
    if (image.width != video.width || image.height != video.height) {
      throw DataError("frame image dimensions do not match video '" + video.video_id + "'");
    }
    images.push_back(std::move(image));
  }

  std::vector<std::future<SegmentResponse>> futures;
  futures.reserve(static_cast<std::size_t>(plan.num_clips));
  for (int t = 0; t < plan.num_clips; ++t) {
    SegmentRequest request;
    request.expression_id = expr.expression_id;
    request.expression = expr.text;
    request.clip_index = t;
    request.token_id = t;
    std::vector<Image> clip_images;
    for (int f : plan.clips[static_cast<std::size_t>(t)].slots()) {
      clip_images.push_back(images[static_cast<std::size_t>(f)]);
    }
    request.composite = compress_clip(t, clip_images, plan.grid);
    for (int f = 0; f < plan.video_length; ++f) {
      for (int token : plan.token_assignments[static_cast<std::size_t>(f)]) {
        if (token == t) {
          request.frames.emplace_back(f, images[static_cast<std::size_t>(f)]);
        }
      }
    }
    futures.push_back(std::async(std::launch::async, [backend, request = std::move(request),
                                                      &request_count]() {
      ++request_count;
      return backend->segment(request);
    }));
  }

  std::vector<SegmentResponse> responses;
  responses.reserve(futures.size());
  for (auto& future : futures) {
    responses.push_back(future.get());
  }
  if (logger) {
    logger->log({{"event", "segment"},
                 {"expression_id", expr.expression_id},
                 {"tokens", plan.num_clips},
                 {"backend", backend->name()}});
  }
  return assemble_masklet(plan, responses, tau, expr.expression_id, video.width, video.height);
}

}  // namespace detail

/// End-to-end run: gate -> plan -> compress -> segment -> assemble ->
/// persist, then evaluate when ground truth is available. Expressions
/// are processed by a bounded worker pool; each one succeeds or fails
/// independently and writes only its own files.
inline RunResult run(const DatasetManifest& manifest, const RunConfig& cfg,
                     const std::filesystem::path& out_dir,
                     std::vector<std::shared_ptr<JudgeClient>> judges,
                     std::shared_ptr<SegmentationBackend> backend) {
  cfg.validate();
  if (manifest.expressions.empty()) {
    throw DataError("dataset has no expressions");
  }
  if (cfg.gate.enabled) {
    if (judges.empty()) {
      throw ConfigError("gate is enabled but no judges are configured");
    }
    if (cfg.gate.consensus != ConsensusPolicy::single && judges.size() < 2) {
      throw ConfigError("consensus '" + consensus_to_string(cfg.gate.consensus) +
                        "' requires at least 2 judges");
    }
  }
  std::filesystem::create_directories(out_dir);
  const auto predictions_dir = out_dir / "predictions";
  std::filesystem::create_directories(predictions_dir);
  JsonlLogger logger(out_dir / "logs.jsonl");

  const std::size_t n = manifest.expressions.size();
  std::vector<ExpressionOutcome> outcomes(n);
  std::vector<std::optional<Masklet>> predictions(n);
  std::atomic<std::size_t> next{0};
  std::atomic<int> backend_requests{0};

  auto process = [&](std::size_t i) {
    const ReferringExpression& expr = manifest.expressions[i];
    ExpressionOutcome& outcome = outcomes[i];
    outcome.expression_id = expr.expression_id;
    std::atomic<int> local_requests{0};
    try {
      const VideoSequence& video = manifest.video(expr.video_id);
      if (cfg.gate.enabled) {
        GateDecision decision = verify(video, expr, judges, cfg.gate);
        logger.log(decision_to_json(decision));
        if (!cfg.gate.fail_open) {
          for (const JudgeVerdict& v : decision.verdicts) {
            if (v.outcome == Verdict::error) {
              throw BackendError("judge '" + v.judge_id + "' failed: " + v.raw_response);
            }
          }
        }
        outcome.gate = decision;
        if (decision.outcome == GateOutcome::null_target) {
          predictions[i] = masklet_null(video, expr.expression_id);
          write_expression_prediction(video, *predictions[i], predictions_dir);
          outcome.status = ExpressionOutcome::Status::null_gated;
          return;
        }
      }
      const ClipPlan video_plan = plan(video, cfg.scheduler);
      predictions[i] = detail::segment_expression(video, expr, video_plan, backend, cfg.tau,
                                                  local_requests, &logger);
      write_expression_prediction(video, *predictions[i], predictions_dir);
      outcome.status = ExpressionOutcome::Status::ok;
    } catch (const std::exception& e) {
      outcome.status = ExpressionOutcome::Status::failed;
      outcome.error = e.what();
      logger.log({{"event", "expression_failed"},
                  {"expression_id", expr.expression_id},
                  {"error", e.what()}});
    }
    outcome.backend_requests = local_requests.load();
    backend_requests += local_requests.load();
  };

  const int workers = std::min<int>(cfg.parallelism, static_cast<int>(n));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        process(i);
      }
    });
  }
  for (std::thread& t : pool) {
    t.join();
  }

  RunResult result;
  result.outcomes = std::move(outcomes);
  result.predictions_dir = predictions_dir;
  result.total_backend_requests = backend_requests.load();
  std::vector<std::string> written_ids;
  for (std::size_t i = 0; i < n; ++i) {
    if (result.outcomes[i].status == ExpressionOutcome::Status::failed) {
      ++result.failed;
    } else {
      written_ids.push_back(result.outcomes[i].expression_id);
    }
  }
  write_prediction_index(manifest, written_ids, predictions_dir);

  if (cfg.evaluate && manifest.has_annotations && result.failed == 0) {
    std::vector<ExpressionScore> scores;
    scores.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const ReferringExpression& expr = manifest.expressions[i];
      const VideoSequence& video = manifest.video(expr.video_id);
      const double tolerance = cfg.tolerance_px >= 0.0
                                   ? cfg.tolerance_px
                                   : default_boundary_tolerance(video.width, video.height);
      if (expr.gt_target_present.value_or(false)) {
        const Masklet gt = load_gt_masklet(manifest, expr);
        scores.push_back(score_expression(*predictions[i], &gt, tolerance));
      } else {
        scores.push_back(score_expression(*predictions[i], nullptr, tolerance));
      }
    }
    result.report = aggregate(scores);
    const std::string text = report_to_json(*result.report).dump(2) + "\n";
    write_file_bytes(out_dir / "report.json", std::vector<std::uint8_t>(text.begin(), text.end()));
  }
  return result;
}

inline RunResult run(const DatasetManifest& manifest, const RunConfig& cfg,
                     const std::filesystem::path& out_dir) {
  cfg.validate();
  std::vector<std::shared_ptr<JudgeClient>> judges;
  if (cfg.gate.enabled) {
    judges = make_judges(cfg.gate.judge_specs, manifest, cfg.gate.timeout_ms);
  }
  return run(manifest, cfg, out_dir,
             std::move(judges), make_backend(cfg.backend_spec, manifest, cfg.gate.timeout_ms));
}

/// Gate-only pass over the dataset, one decision per expression in
/// manifest order.
inline std::vector<GateDecision> gate_all(const DatasetManifest& manifest, const GateConfig& cfg,
                                          const std::vector<std::shared_ptr<JudgeClient>>& judges) {
  std::vector<GateDecision> decisions;
  decisions.reserve(manifest.expressions.size());
  for (const ReferringExpression& expr : manifest.expressions) {
    decisions.push_back(verify(manifest.video(expr.video_id), expr, judges, cfg));
  }
  return decisions;
}

}  // namespace evos
