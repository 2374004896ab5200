// Copyright 2026 The beltcount Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "beltcount/beltcount.hpp"

namespace {

using namespace beltcount;

template <class T>
void optional_flag(CLI::App* app, const std::string& name, std::optional<T>& target,
                   const std::string& help) {
  app->add_option_function<T>(name, [&target](const T& v) { target = v; }, help);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Track-and-count engine for objects on a conveyor belt"};
  app.require_subcommand(1);

  // count
  cli::CountOptions count;
  auto* count_cmd = app.add_subcommand("count", "Count objects in a detection stream");
  count_cmd->add_option("-i,--input", count.input, "Detection stream (JSON Lines)")
      ->required()
      ->check(CLI::ExistingFile);
  optional_flag(count_cmd, "-o,--out", count.output, "Report path ('-' for stdout)");
  optional_flag(count_cmd, "--assign-dist", count.assign_dist,
                "Max center distance (px) for frame-to-frame association [20]");
  optional_flag(count_cmd, "--enter-cap", count.enter_cap,
                "New-entry candidates lie above this y (px) [200 at height 600]");
  optional_flag(count_cmd, "--end-threshold", count.end_threshold,
                "Exiting area starts at this y (px) [500 at height 600]");
  optional_flag(count_cmd, "--lost-lookback", count.lost_lookback,
                "Frames searched back for lost detections, 2..6 [6]");
  optional_flag(count_cmd, "--min-score", count.min_score,
                "Detections scoring below this are ignored [0.5]");
  count_cmd->add_flag("--report-throughput", count.report_throughput,
                      "Print counting frames per second (excludes detection)");

  // simulate
  cli::SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic detection stream");
  sim_cmd->add_option("--seed", sim.scenario.seed, "Random seed");
  sim_cmd->add_option("--objects", sim.scenario.num_objects, "Number of objects");
  sim_cmd->add_option("--open-fraction", sim.scenario.open_fraction, "Share of open objects");
  sim_cmd->add_option("--width", sim.scenario.geometry.width, "Image width (px)");
  sim_cmd->add_option("--height", sim.scenario.geometry.height, "Image height (px)");
  sim_cmd->add_option("--speed", sim.scenario.speed_mean, "Mean speed (px/frame)");
  sim_cmd->add_option("--speed-jitter", sim.scenario.speed_jitter, "Speed spread (px/frame)");
  sim_cmd->add_option("--spacing-min", sim.scenario.entry_spacing_min, "Min frames between entries");
  sim_cmd->add_option("--spacing-max", sim.scenario.entry_spacing_max, "Max frames between entries");
  sim_cmd->add_option("--entry-y", sim.scenario.entry_y, "Center y of first appearance");
  sim_cmd->add_option("--min-spacing", sim.scenario.min_spacing,
                      "Min distance between concurrent objects (px)");
  sim_cmd->add_option("--dropout", sim.noise.dropout_prob, "Per-detection dropout probability");
  sim_cmd->add_option("--max-dropout-run", sim.noise.max_consecutive_dropout,
                      "Longest run of missed frames per object");
  sim_cmd->add_option("--jitter", sim.noise.jitter_sigma, "Center jitter sigma (px)");
  sim_cmd->add_option("--open-visible", sim.noise.flip_open_visible_prob,
                      "Per-frame chance an open object shows open");
  sim_cmd->add_option("--merge-distance", sim.noise.merge_distance,
                      "Objects closer than this emit one box (px)");
  optional_flag(sim_cmd, "--guarantee-open-before", sim.noise.guarantee_open_before_y,
                "Force one open-labeled frame above this y for open objects");
  optional_flag(sim_cmd, "--noise-seed", sim.noise_seed, "Seed for noise (default: --seed)");
  optional_flag(sim_cmd, "--fps", sim.fps, "Frame rate recorded in the header");
  optional_flag(sim_cmd, "-o,--out", sim.output, "Stream path ('-' for stdout)");
  optional_flag(sim_cmd, "--truth", sim.truth_output,
                "Ground-truth sidecar path [<out>.truth.json]");
  optional_flag(sim_cmd, "--clean-out", sim.clean_output, "Noise-free stream path");

  // eval-detections
  cli::EvalDetectionsOptions evd;
  auto* evd_cmd = app.add_subcommand("eval-detections",
                                     "AP / mAP / precision / recall against ground truth");
  evd_cmd->add_option("-d,--detections", evd.detections, "Detection stream")
      ->required()
      ->check(CLI::ExistingFile);
  evd_cmd->add_option("-g,--ground-truth", evd.ground_truth, "Ground-truth stream")
      ->required()
      ->check(CLI::ExistingFile);
  evd_cmd->add_option("--iou", evd.iou_threshold, "IoU a match must exceed [0.5]");
  optional_flag(evd_cmd, "-o,--out", evd.output, "Report path ('-' for stdout)");

  // eval-counts
  cli::EvalCountsOptions evc;
  auto* evc_cmd = app.add_subcommand("eval-counts", "Counting accuracy TP/(TP+FN+FP)");
  optional_flag(evc_cmd, "--report", evc.report, "Count report from `count`");
  optional_flag(evc_cmd, "--truth", evc.truth, "Ground-truth sidecar from `simulate`");
  optional_flag(evc_cmd, "--stream", evc.stream, "Stream the report was counted from");
  optional_flag(evc_cmd, "--truth-open", evc.truth_open, "Ground-truth open objects");
  optional_flag(evc_cmd, "--truth-closed", evc.truth_closed, "Ground-truth closed objects");
  optional_flag(evc_cmd, "--counted-open", evc.counted_open, "Counted open objects");
  optional_flag(evc_cmd, "--counted-closed", evc.counted_closed, "Counted closed objects");
  optional_flag(evc_cmd, "--correct-open", evc.correct_open, "Correctly counted open objects");
  optional_flag(evc_cmd, "--correct-closed", evc.correct_closed,
                "Correctly counted closed objects");
  optional_flag(evc_cmd, "--extra", evc.extra, "Extra (miscounted) objects");
  optional_flag(evc_cmd, "-o,--out", evc.output, "Report path ('-' for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? cli::kExitOk : cli::kExitInputError;
  }

  try {
    if (*count_cmd) return cli::run_count(count);
    if (*sim_cmd) return cli::run_simulate(sim);
    if (*evd_cmd) return cli::run_eval_detections(evd);
    if (*evc_cmd) return cli::run_eval_counts(evc);
  } catch (const InputError& e) {
    std::cerr << cli::error_record("input", e.what(), e.frame(), e.field());
    return cli::kExitInputError;
  } catch (const UndefinedMetricError& e) {
    std::cerr << cli::error_record("input", e.what());
    return cli::kExitInputError;
  } catch (const InvariantError& e) {
    std::cerr << cli::error_record("internal", e.what());
    return cli::kExitInternalError;
  } catch (const std::exception& e) {
    std::cerr << cli::error_record("internal", e.what());
    return cli::kExitInternalError;
  }
  return cli::kExitInternalError;
}
