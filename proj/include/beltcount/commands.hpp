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

#pragma once

// Implementations of the command-line subcommands. Each returns the process
// exit status and throws InputError / InvariantError on failure; the
// executable maps those to exit codes 1 and 2.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "beltcount/counter.hpp"
#include "beltcount/io.hpp"
#include "beltcount/metrics.hpp"
#include "beltcount/simulator.hpp"

namespace beltcount::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitInternalError = 2;

/// Environment variable naming the directory that receives outputs whose
/// path was not given explicitly.
inline constexpr const char* kOutputDirEnv = "BELTCOUNT_OUTPUT_DIR";

/// Explicit path wins; otherwise `$BELTCOUNT_OUTPUT_DIR/default_name`;
/// otherwise "-" (standard output).
inline std::string resolve_output(const std::optional<std::string>& explicit_path,
                                  const std::string& default_name) {
  if (explicit_path && !explicit_path->empty()) return *explicit_path;
  if (const char* dir = std::getenv(kOutputDirEnv); dir && *dir) {
    return (std::filesystem::path(dir) / default_name).string();
  }
  return "-";
}

inline void write_output(const std::string& path, const std::string& content,
                         std::ostream& stdout_stream) {
  if (path == "-") {
    stdout_stream << content;
    return;
  }
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw InputError("failed writing '" + path + "'");
}

inline std::string dump(const io::Json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// count

struct CountOptions {
  std::string input;
  std::optional<std::string> output;
  std::optional<double> assign_dist;
  std::optional<double> enter_cap;
  std::optional<double> end_threshold;
  std::optional<int> lost_lookback;
  std::optional<double> min_score;
  bool report_throughput = false;
};

/// Effective configuration: scaled defaults for the stream's geometry, then
/// any explicit overrides.
inline CounterConfig effective_config(const CountOptions& o, const ImageGeometry& g) {
  CounterConfig c = CounterConfig::for_geometry(g);
  if (o.assign_dist) c.assign_dist = *o.assign_dist;
  if (o.enter_cap) c.entering_candidate_cap = *o.enter_cap;
  if (o.end_threshold) c.end_threshold = *o.end_threshold;
  if (o.lost_lookback) c.lost_lookback = *o.lost_lookback;
  if (o.min_score) c.min_score = *o.min_score;
  c.validate();
  return c;
}

inline int run_count(const CountOptions& o, std::ostream& out = std::cout,
                     std::ostream& err = std::cerr) {
  const io::StreamFile file = io::parse_stream_file(o.input);
  const CounterConfig config = effective_config(o, file.header.geometry);

  const auto start = std::chrono::steady_clock::now();
  const CountReport report = count_video(file.frames, config);
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;

  write_output(resolve_output(o.output, "count_report.json"),
               dump(io::count_report_to_json(report)), out);
  if (o.report_throughput) {
    const double secs = elapsed.count();
    const double fps = secs > 0.0 ? static_cast<double>(file.frames.size()) / secs : 0.0;
    err << "throughput: " << file.frames.size() << " frames in " << secs << " s ("
        << fps << " frames/s, counting only)\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
  Scenario scenario;
  NoiseProfile noise;
  std::optional<std::uint64_t> noise_seed;
  std::optional<double> fps;
  std::optional<std::string> output;
  std::optional<std::string> truth_output;
  /// Noise-free copy of the stream, usable as detection ground truth.
  std::optional<std::string> clean_output;
};

inline int run_simulate(const SimulateOptions& o, std::ostream& out = std::cout,
                        std::ostream& /*err*/ = std::cerr) {
  auto [clean, truth] = generate(o.scenario);
  const SimulatedStream noisy =
      perturb(clean, truth, o.noise, o.noise_seed.value_or(o.scenario.seed));

  const io::StreamHeader header{truth.geometry, truth.num_frames, o.fps};
  const std::string stream_path = resolve_output(o.output, "stream.jsonl");
  write_output(stream_path, io::stream_to_string(header, noisy.frames), out);

  std::optional<std::string> truth_path = o.truth_output;
  if (!truth_path) {
    if (const char* dir = std::getenv(kOutputDirEnv); dir && *dir && !o.output) {
      truth_path = (std::filesystem::path(dir) / "truth.json").string();
    } else if (stream_path != "-") {
      truth_path = stream_path + ".truth.json";
    }
  }
  if (truth_path) {
    write_output(*truth_path, dump(io::truth_to_json(truth, noisy.owners)), out);
  }
  if (o.clean_output) {
    write_output(*o.clean_output, io::stream_to_string(header, clean.frames), out);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval-detections

struct EvalDetectionsOptions {
  std::string detections;
  std::string ground_truth;
  double iou_threshold = 0.5;
  std::optional<std::string> output;
};

inline int run_eval_detections(const EvalDetectionsOptions& o,
                               std::ostream& out = std::cout,
                               std::ostream& /*err*/ = std::cerr) {
  if (!(o.iou_threshold >= 0.0 && o.iou_threshold < 1.0)) {
    throw InputError("IoU threshold must lie in [0, 1)", std::nullopt, "iou");
  }
  const io::StreamFile dets = io::parse_stream_file(o.detections);
  const io::StreamFile gts = io::parse_stream_file(o.ground_truth);
  if (dets.header.frame_count != gts.header.frame_count) {
    throw InputError("detection and ground-truth files differ in frame count",
                     std::nullopt, "frames");
  }
  const DetectionMetrics m = evaluate_detections(dets.frames, gts.frames, o.iou_threshold);
  write_output(resolve_output(o.output, "detection_metrics.json"),
               dump(io::detection_metrics_to_json(m, o.iou_threshold)), out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval-counts

struct EvalCountsOptions {
  /// Report + sidecar mode.
  std::optional<std::string> report;
  std::optional<std::string> truth;
  /// Stream the report was computed from; enables identity matching when
  /// the sidecar carries an ownership table.
  std::optional<std::string> stream;

  /// Tabulated mode.
  std::optional<std::uint64_t> truth_open;
  std::optional<std::uint64_t> truth_closed;
  std::optional<std::uint64_t> counted_open;
  std::optional<std::uint64_t> counted_closed;
  std::optional<std::uint64_t> correct_open;
  std::optional<std::uint64_t> correct_closed;
  std::optional<std::uint64_t> extra;

  std::optional<std::string> output;
};

/// Rebases a sidecar ownership table onto the slots the counter saw.
inline std::vector<std::vector<ObjectId>> owners_for_report(
    const io::StreamFile& stream, const std::vector<std::vector<ObjectId>>& owners,
    const CounterConfig& config) {
  if (owners.size() != stream.frames.size()) {
    throw InputError("ownership table does not match the stream's frame count",
                     std::nullopt, "owners");
  }
  std::vector<std::vector<std::size_t>> origin;
  const DetectionStream prepared = prepare_stream(stream.frames, config, &origin);
  std::vector<std::vector<ObjectId>> out(prepared.size());
  for (std::size_t f = 0; f < prepared.size(); ++f) {
    if (owners[f].size() != stream.frames[f].size()) {
      throw InputError("ownership row does not match the frame's detections",
                       static_cast<FrameIndex>(f), "owners");
    }
    for (std::size_t raw : origin[f]) out[f].push_back(owners[f][raw]);
  }
  return out;
}

inline int run_eval_counts(const EvalCountsOptions& o, std::ostream& out = std::cout,
                           std::ostream& /*err*/ = std::cerr) {
  io::Json doc;
  doc["format"] = io::kCountAccuracyFormat;

  if (o.report || o.truth) {
    if (!o.report || !o.truth) {
      throw InputError("--report and --truth must be given together");
    }
    const CountReport report = io::parse_count_report_file(*o.report);
    const io::TruthFile truth = io::parse_truth_file(*o.truth);
    const ClassCounts truth_counts{truth.truth.open, truth.truth.closed};
    const ClassCounts counted{report.open_count, report.closed_count};
    doc["truth"] = {{"open", truth_counts.open}, {"closed", truth_counts.closed}};
    doc["counted"] = {{"open", counted.open}, {"closed", counted.closed}};
    doc["clamp"] = io::counting_accuracy_to_json(counting_accuracy(counted, truth_counts));
    if (o.stream) {
      if (truth.owners.empty()) {
        throw InputError("identity matching needs a sidecar with an ownership table",
                         std::nullopt, "owners");
      }
      const io::StreamFile stream = io::parse_stream_file(*o.stream);
      const auto owners = owners_for_report(stream, truth.owners, report.config);
      std::vector<ClassLabel> classes;
      for (const auto& obj : truth.truth.objects) classes.push_back(obj.true_class);
      doc["matched"] = io::counting_accuracy_to_json(
          counting_accuracy_matched(report, owners, classes));
    }
  } else {
    if (!o.truth_open || !o.truth_closed) {
      throw InputError("--truth-open and --truth-closed are required without --report");
    }
    const ClassCounts truth_counts{*o.truth_open, *o.truth_closed};
    doc["truth"] = {{"open", truth_counts.open}, {"closed", truth_counts.closed}};
    const bool tally = o.correct_open || o.correct_closed || o.extra;
    if (tally) {
      const CountTally t{o.correct_open.value_or(0), o.correct_closed.value_or(0),
                         o.extra.value_or(0)};
      doc["tally"] = {{"correct_open", t.correct_open},
                      {"correct_closed", t.correct_closed},
                      {"extra", t.extra}};
      doc["result"] = io::counting_accuracy_to_json(counting_accuracy(t, truth_counts));
    } else {
      if (!o.counted_open || !o.counted_closed) {
        throw InputError("give --counted-open/--counted-closed or a correct/extra tally");
      }
      const ClassCounts counted{*o.counted_open, *o.counted_closed};
      doc["counted"] = {{"open", counted.open}, {"closed", counted.closed}};
      doc["clamp"] = io::counting_accuracy_to_json(counting_accuracy(counted, truth_counts));
    }
  }
  write_output(resolve_output(o.output, "count_accuracy.json"), dump(doc), out);
  return kExitOk;
}

/// Machine-readable error record written to stderr on failure.
inline std::string error_record(const std::string& kind, const std::string& message,
                                std::optional<FrameIndex> frame = std::nullopt,
                                const std::string& field = {}) {
  io::Json j;
  j["error"] = {{"kind", kind}, {"message", message}};
  if (frame) j["error"]["frame"] = *frame;
  if (!field.empty()) j["error"]["field"] = field;
  return j.dump() + "\n";
}

}  // namespace beltcount::cli
