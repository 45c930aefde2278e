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

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "evos/dataset.hpp"
#include "evos/fixture.hpp"
#include "evos/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitPartialFailure = 2;
constexpr int kExitConfig = 3;

struct CommonOptions {
  std::string root;
  std::string split = "mini";
};

evos::Image overlay_mask(const evos::Image& frame, const evos::BinaryMask& mask) {
  evos::Image out = frame;
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      if (!mask.test(x, y)) continue;
      const evos::Rgb c = frame.at(x, y);
      out.set(x, y, evos::Rgb{static_cast<std::uint8_t>((c.r + 255) / 2),
                              static_cast<std::uint8_t>(c.g / 2),
                              static_cast<std::uint8_t>(c.b / 2)});
    }
  }
  return out;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) {
    throw evos::DataError("cannot write " + out_path);
  }
  out << text;
}

int report_run_result(const evos::RunResult& result) {
  int ok = 0;
  int gated = 0;
  for (const evos::ExpressionOutcome& outcome : result.outcomes) {
    if (outcome.status == evos::ExpressionOutcome::Status::failed) {
      std::cerr << "expression " << outcome.expression_id << " failed: " << outcome.error << "\n";
    } else if (outcome.status == evos::ExpressionOutcome::Status::null_gated) {
      ++gated;
    } else {
      ++ok;
    }
  }
  std::cout << ok << " segmented, " << gated << " gated null, " << result.failed << " failed; "
            << result.total_backend_requests << " backend calls\n";
  std::cout << "predictions: " << result.predictions_dir.string() << "\n";
  if (result.report.has_value()) {
    std::cout << evos::report_table(*result.report);
  }
  return result.failed > 0 ? kExitPartialFailure : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"evos - existence-aware referring video object segmentation harness"};
  app.set_config("--config", "", "read options from an INI/TOML config file");
  app.require_subcommand(1);

  CommonOptions common;
  evos::RunConfig run_cfg;
  std::string gate_switch = "on";
  std::string consensus = "unanimous";
  std::string out_path;
  std::string video_id;
  std::string pred_dir;
  std::string scores_path;
  double tolerance = -1.0;
  evos::FixtureConfig fixture_cfg;

  auto add_dataset_options = [&](CLI::App* cmd) {
    cmd->add_option("--root", common.root, "dataset root directory")->required();
    cmd->add_option("--split", common.split, "dataset split name");
  };
  auto add_scheduler_options = [&](CLI::App* cmd) {
    cmd->add_option("--target-frames", run_cfg.scheduler.target_frames,
                    "frames sampled per video");
    cmd->add_option("--clips", run_cfg.scheduler.num_clips, "number of clips");
  };
  auto add_gate_options = [&](CLI::App* cmd) {
    cmd->add_option("--judge", run_cfg.gate.judge_specs,
                    "judge spec: mock:<fixture>, oracle, or an http(s) URL (repeatable)");
    cmd->add_option("--consensus", consensus, "unanimous|majority|single");
    cmd->add_option("--max-frames", run_cfg.gate.max_frames, "judge frame budget");
    cmd->add_option("--timeout-ms", run_cfg.gate.timeout_ms, "judge/backend timeout");
    cmd->add_flag("--fail-closed", [&](std::int64_t) { run_cfg.gate.fail_open = false; },
                  "treat judge errors as expression failures instead of proceeding");
    cmd->add_option("--prompt-template", run_cfg.gate.prompt_template,
                    "judge prompt; {expression} is substituted");
  };
  auto add_run_options = [&](CLI::App* cmd) {
    add_dataset_options(cmd);
    add_scheduler_options(cmd);
    add_gate_options(cmd);
    cmd->add_option("--out", out_path, "output directory")->required();
    cmd->add_option("--gate", gate_switch, "on|off")->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--backend", run_cfg.backend_spec,
                    "backend spec: oracle, forced, zero, or an http(s) URL");
    cmd->add_option("--tau", run_cfg.tau, "binarization threshold in (0,1]");
    cmd->add_option("--parallelism", run_cfg.parallelism, "max concurrent expressions");
    cmd->add_option("--tolerance", tolerance, "boundary tolerance in px (default: 0.8% diag)");
  };

  CLI::App* fixture_cmd = app.add_subcommand("fixture", "generate the synthetic dataset");
  fixture_cmd->add_option("--out", out_path, "dataset root to create")->required();
  fixture_cmd->add_option("--split", fixture_cfg.split, "split name");
  fixture_cmd->add_option("--videos", fixture_cfg.num_videos, "number of videos");
  fixture_cmd->add_option("--frames", fixture_cfg.frames_per_video, "frames per video");
  fixture_cmd->add_option("--width", fixture_cfg.width, "frame width");
  fixture_cmd->add_option("--height", fixture_cfg.height, "frame height");
  fixture_cmd->add_option("--seed", fixture_cfg.seed, "generator seed");

  CLI::App* plan_cmd = app.add_subcommand("plan", "emit the clip plan for a video as JSON");
  add_dataset_options(plan_cmd);
  add_scheduler_options(plan_cmd);
  plan_cmd->add_option("--video", video_id, "video id")->required();
  plan_cmd->add_option("--out", out_path, "output file (default: stdout)");

  CLI::App* gate_cmd = app.add_subcommand("gate", "run existence verification only (JSONL)");
  add_dataset_options(gate_cmd);
  add_gate_options(gate_cmd);
  gate_cmd->add_option("--out", out_path, "output file (default: stdout)");

  CLI::App* infer_cmd = app.add_subcommand("infer", "full inference without evaluation");
  add_run_options(infer_cmd);

  CLI::App* run_cmd = app.add_subcommand("run", "inference plus evaluation");
  add_run_options(run_cmd);

  CLI::App* eval_cmd = app.add_subcommand("eval", "score a prediction directory against GT");
  eval_cmd->add_option("--root", common.root, "dataset root directory");
  eval_cmd->add_option("--split", common.split, "dataset split name");
  eval_cmd->add_option("--pred", pred_dir, "prediction directory (with index.json)");
  eval_cmd->add_option("--scores", scores_path,
                       "recompute Final from a {jf,n_acc,t_acc} JSON file instead");
  eval_cmd->add_option("--tolerance", tolerance, "boundary tolerance in px");
  eval_cmd->add_option("--out", out_path, "write the report JSON here");

  CLI::App* render_cmd = app.add_subcommand("render", "emit KFC composites and mask overlays");
  add_dataset_options(render_cmd);
  add_scheduler_options(render_cmd);
  render_cmd->add_option("--video", video_id, "video id")->required();
  render_cmd->add_option("--pred", pred_dir, "prediction directory for overlays");
  render_cmd->add_option("--out", out_path, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    run_cfg.gate.consensus = evos::consensus_from_string(consensus);
    run_cfg.gate.enabled = gate_switch == "on";
    run_cfg.tolerance_px = tolerance;

    if (fixture_cmd->parsed()) {
      fixture_cfg.root = out_path;
      const evos::FixtureSummary summary = evos::generate_fixture(fixture_cfg);
      std::cout << "wrote " << summary.videos << " videos, " << summary.expressions
                << " expressions (" << summary.notarget_expressions << " no-target) under "
                << (fixture_cfg.root / fixture_cfg.split).string() << "\n"
                << "judge fixture: " << summary.judge_fixture.string() << "\n";
      return kExitOk;
    }

    if (plan_cmd->parsed()) {
      const auto manifest = evos::load_manifest(common.root, common.split);
      const auto doc = evos::plan_to_json(evos::plan(manifest.video(video_id),
                                                     run_cfg.scheduler));
      emit(doc.dump(2) + "\n", out_path);
      return kExitOk;
    }

    if (gate_cmd->parsed()) {
      const auto manifest = evos::load_manifest(common.root, common.split);
      const auto judges =
          evos::make_judges(run_cfg.gate.judge_specs, manifest, run_cfg.gate.timeout_ms);
      std::string lines;
      for (const evos::GateDecision& decision :
           evos::gate_all(manifest, run_cfg.gate, judges)) {
        lines += evos::decision_to_json(decision).dump() + "\n";
      }
      emit(lines, out_path);
      return kExitOk;
    }

    if (infer_cmd->parsed() || run_cmd->parsed()) {
      run_cfg.evaluate = run_cmd->parsed();
      const auto manifest = evos::load_manifest(common.root, common.split);
      const evos::RunResult result = evos::run(manifest, run_cfg, out_path);
      return report_run_result(result);
    }

    if (eval_cmd->parsed()) {
      evos::MetricsReport report;
      if (!scores_path.empty()) {
        const auto bytes = evos::read_file_bytes(scores_path);
        const auto doc = nlohmann::json::parse(bytes.begin(), bytes.end());
        report = evos::report_from_triple(doc.at("jf").get<double>(),
                                          doc.at("n_acc").get<double>(),
                                          doc.at("t_acc").get<double>());
      } else {
        if (common.root.empty() || pred_dir.empty()) {
          throw evos::ConfigError("eval needs --root and --pred (or --scores)");
        }
        const auto manifest = evos::load_manifest(common.root, common.split);
        if (!manifest.has_annotations) {
          throw evos::DataError("split '" + common.split + "' has no annotations to score against");
        }
        const auto predictions = evos::read_predictions(manifest, pred_dir);
        const auto ground_truth = evos::load_ground_truth(manifest);
        std::vector<evos::ExpressionScore> scores;
        for (const evos::ReferringExpression& expr : manifest.expressions) {
          const evos::VideoSequence& video = manifest.video(expr.video_id);
          const double tol = tolerance >= 0.0
                                 ? tolerance
                                 : evos::default_boundary_tolerance(video.width, video.height);
          const evos::Masklet& pred = predictions.at(expr.expression_id);
          if (expr.gt_target_present.value_or(false)) {
            scores.push_back(evos::score_expression(pred, &ground_truth.at(expr.expression_id),
                                                    tol));
          } else {
            scores.push_back(evos::score_expression(pred, nullptr, tol));
          }
        }
        report = evos::aggregate(scores);
      }
      std::cout << evos::report_table(report);
      if (!out_path.empty()) {
        emit(evos::report_to_json(report).dump(2) + "\n", out_path);
      }
      return kExitOk;
    }

    if (render_cmd->parsed()) {
      const auto manifest = evos::load_manifest(common.root, common.split);
      const evos::VideoSequence& video = manifest.video(video_id);
      const evos::ClipPlan plan = evos::plan(video, run_cfg.scheduler);
      std::vector<evos::Image> images;
      for (const evos::FrameRef& ref : video.frames) {
        images.push_back(evos::load_frame_image(ref));
      }
      const fs::path out_dir = fs::path(out_path) / video_id;
      for (int k = 0; k < plan.num_clips; ++k) {
        std::vector<evos::Image> clip_images;
        for (int f : plan.clips[static_cast<std::size_t>(k)].slots()) {
          clip_images.push_back(images[static_cast<std::size_t>(f)]);
        }
        const evos::CompositeFrame composite = evos::compress_clip(k, clip_images, plan.grid);
        char name[32];
        std::snprintf(name, sizeof(name), "clip_%02d", k);
        evos::write_png_rgb8(out_dir / (std::string(name) + "_key.png"), composite.key_image);
        evos::write_png_rgb8(out_dir / (std::string(name) + "_mosaic.png"), composite.mosaic);
      }
      if (!pred_dir.empty()) {
        const auto predictions = evos::read_predictions(manifest, pred_dir);
        for (const evos::ReferringExpression& expr : manifest.expressions) {
          if (expr.video_id != video_id) continue;
          const evos::Masklet& masklet = predictions.at(expr.expression_id);
          for (int t = 0; t < masklet.frame_count(); ++t) {
            const std::string stem =
                evos::frame_stem(video.frames[static_cast<std::size_t>(t)]);
            evos::write_png_rgb8(out_dir / "overlays" / expr.expression_id / (stem + ".png"),
                                 overlay_mask(images[static_cast<std::size_t>(t)],
                                              masklet.mask(t)));
          }
        }
      }
      std::cout << "rendered " << plan.num_clips << " composites under " << out_dir.string()
                << "\n";
      return kExitOk;
    }
  } catch (const evos::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitUsage;
}
