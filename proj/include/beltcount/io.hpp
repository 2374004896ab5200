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

// File formats. Detection streams are JSON Lines: a header object followed
// by one object per frame,
//
//   {"format":"beltcount-stream/v1","width":800.0,"height":600.0,"frames":3}
//   {"frame":0,"detections":[[x1,y1,x2,y2,"open",0.93],...]}
//
// Frames without detections may be omitted; they are read back as empty.
// Ground-truth sidecars, count reports and metric reports are single JSON
// documents, each tagged with its own "format" string.

#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "beltcount/counter.hpp"
#include "beltcount/detection.hpp"
#include "beltcount/error.hpp"
#include "beltcount/geometry.hpp"
#include "beltcount/metrics.hpp"
#include "beltcount/simulator.hpp"

namespace beltcount::io {

using Json = nlohmann::ordered_json;

inline constexpr const char* kStreamFormat = "beltcount-stream/v1";
inline constexpr const char* kTruthFormat = "beltcount-truth/v1";
inline constexpr const char* kCountReportFormat = "beltcount-count-report/v1";
inline constexpr const char* kDetectionMetricsFormat = "beltcount-detection-metrics/v1";
inline constexpr const char* kCountAccuracyFormat = "beltcount-count-accuracy/v1";

struct StreamHeader {
  ImageGeometry geometry;
  std::size_t frame_count = 0;
  std::optional<double> fps;

  friend bool operator==(const StreamHeader&, const StreamHeader&) = default;
};

struct StreamFile {
  StreamHeader header;
  DetectionStream frames;

  friend bool operator==(const StreamFile&, const StreamFile&) = default;
};

namespace detail {

inline std::string format_line(std::size_t line) {
  return "line " + std::to_string(line) + ": ";
}

template <class T>
T require(const Json& j, const char* key, std::optional<FrameIndex> frame,
          const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw InputError(where + "missing field '" + key + "'", frame, key);
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InputError(where + "field '" + key + "' has the wrong type", frame, key);
  }
}

inline double number(const Json& j, std::optional<FrameIndex> frame,
                     const char* field, const std::string& where) {
  if (!j.is_number()) {
    throw InputError(where + "field '" + field + "' must be a number", frame, field);
  }
  return j.get<double>();
}

inline void check_format(const Json& j, const char* expected,
                         const std::string& where) {
  const auto fmt = require<std::string>(j, "format", std::nullopt, where);
  if (fmt != expected) {
    throw InputError(where + "unsupported format '" + fmt + "', expected '" +
                         expected + "'",
                     std::nullopt, "format");
  }
}

inline Json parse_json(const std::string& text, const std::string& where) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(where + "malformed JSON: " + e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Json box_json(const BBox& b) {
  return Json::array({b.x1(), b.y1(), b.x2(), b.y2()});
}

inline BBox box_from(const Json& j, std::optional<FrameIndex> frame,
                     const std::string& where) {
  if (!j.is_array() || j.size() < 4) {
    throw InputError(where + "box must hold four coordinates", frame, "box");
  }
  try {
    return BBox::make(number(j[0], frame, "x1", where), number(j[1], frame, "y1", where),
                      number(j[2], frame, "x2", where), number(j[3], frame, "y2", where));
  } catch (const InputError& e) {
    if (e.frame()) throw;
    throw InputError(where + e.what(), frame, "box");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Detection streams

/// Reads and validates a stream. All-or-nothing: the first problem aborts
/// with an InputError naming the frame and field. Detections keep file
/// order; missing frames up to the header's frame count are filled in.
inline StreamFile parse_stream(std::istream& in) {
  StreamFile out;
  std::string text;
  std::size_t line_no = 0;
  bool have_header = false;
  FrameIndex last = -1;

  while (std::getline(in, text)) {
    ++line_no;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = detail::format_line(line_no);
    const Json j = detail::parse_json(text, where);

    if (!have_header) {
      detail::check_format(j, kStreamFormat, where);
      out.header.geometry.width = detail::require<double>(j, "width", std::nullopt, where);
      out.header.geometry.height = detail::require<double>(j, "height", std::nullopt, where);
      out.header.geometry.validate();
      const auto frames = detail::require<std::int64_t>(j, "frames", std::nullopt, where);
      if (frames < 0) throw InputError(where + "frame count must be >= 0", std::nullopt, "frames");
      out.header.frame_count = static_cast<std::size_t>(frames);
      if (j.contains("fps")) {
        out.header.fps = detail::require<double>(j, "fps", std::nullopt, where);
        if (!(*out.header.fps > 0.0)) {
          throw InputError(where + "fps must be positive", std::nullopt, "fps");
        }
      }
      have_header = true;
      continue;
    }

    const auto frame = detail::require<std::int64_t>(j, "frame", std::nullopt, where);
    if (frame <= last) {
      throw InputError(where + "frame " + std::to_string(frame) +
                           " is out of order (previous frame " + std::to_string(last) + ")",
                       frame, "frame");
    }
    if (static_cast<std::size_t>(frame) >= out.header.frame_count) {
      throw InputError(where + "frame " + std::to_string(frame) +
                           " exceeds the header frame count",
                       frame, "frame");
    }
    for (FrameIndex f = last + 1; f < frame; ++f) out.frames.push_back({f, {}});
    last = frame;

    FrameDetections fd{frame, {}};
    const Json* dets = j.contains("detections") ? &j.at("detections") : nullptr;
    if (!dets || !dets->is_array()) {
      throw InputError(where + "'detections' must be an array", frame, "detections");
    }
    const ImageGeometry& g = out.header.geometry;
    for (const Json& d : *dets) {
      if (!d.is_array() || d.size() != 6) {
        throw InputError(where + "detection must be [x1,y1,x2,y2,class,score]",
                         frame, "detections");
      }
      const BBox box = detail::box_from(d, frame, where);
      if (box.x2() > g.width || box.y2() > g.height) {
        throw InputError(where + "box lies outside the image", frame, "box");
      }
      if (!d[4].is_string()) {
        throw InputError(where + "class must be a string", frame, "class");
      }
      const auto label = parse_class_label(d[4].get<std::string>());
      if (!label) {
        throw InputError(where + "unknown class '" + d[4].get<std::string>() +
                             "' (expected open or closed)",
                         frame, "class");
      }
      const double score = detail::number(d[5], frame, "score", where);
      if (!(score >= 0.0 && score <= 1.0)) {
        throw InputError(where + "score must lie in [0, 1]", frame, "score");
      }
      fd.detections.push_back({frame, box, *label, score});
    }
    out.frames.push_back(std::move(fd));
  }
  if (!have_header) throw InputError("missing stream header", std::nullopt, "header");
  for (FrameIndex f = last + 1; static_cast<std::size_t>(f) < out.header.frame_count; ++f) {
    out.frames.push_back({f, {}});
  }
  return out;
}

inline StreamFile parse_stream_text(const std::string& text) {
  std::istringstream in(text);
  return parse_stream(in);
}

inline StreamFile parse_stream_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "' for reading");
  return parse_stream(in);
}

/// Writes every frame, empty ones included, one record per line.
inline void write_stream(std::ostream& out, const StreamHeader& header,
                         std::span<const FrameDetections> frames) {
  Json h;
  h["format"] = kStreamFormat;
  h["width"] = header.geometry.width;
  h["height"] = header.geometry.height;
  h["frames"] = header.frame_count;
  if (header.fps) h["fps"] = *header.fps;
  out << h.dump() << '\n';
  for (const auto& f : frames) {
    Json rec;
    rec["frame"] = f.frame_index;
    Json dets = Json::array();
    for (const auto& d : f.detections) {
      dets.push_back(Json::array({d.box.x1(), d.box.y1(), d.box.x2(), d.box.y2(),
                                  std::string(to_string(d.class_label)), d.score}));
    }
    rec["detections"] = std::move(dets);
    out << rec.dump() << '\n';
  }
}

inline std::string stream_to_string(const StreamHeader& header,
                                    std::span<const FrameDetections> frames) {
  std::ostringstream ss;
  write_stream(ss, header, frames);
  return ss.str();
}

// ---------------------------------------------------------------------------
// Ground-truth sidecar

struct TruthFile {
  GroundTruth truth;
  /// Object id per frame and slot of the accompanying stream file; empty
  /// when the sidecar carries no ownership table.
  std::vector<std::vector<ObjectId>> owners;
};

inline Json truth_to_json(const GroundTruth& truth,
                          const std::vector<std::vector<ObjectId>>& owners) {
  Json j;
  j["format"] = kTruthFormat;
  j["width"] = truth.geometry.width;
  j["height"] = truth.geometry.height;
  j["frames"] = truth.num_frames;
  j["totals"] = {{"open", truth.open}, {"closed", truth.closed}};
  Json objs = Json::array();
  for (const auto& o : truth.objects) {
    Json traj = Json::array();
    for (const auto& b : o.trajectory) traj.push_back(detail::box_json(b));
    objs.push_back({{"id", o.id},
                    {"class", std::string(to_string(o.true_class))},
                    {"entry_frame", o.entry_frame},
                    {"exit_frame", o.exit_frame},
                    {"trajectory", std::move(traj)}});
  }
  j["objects"] = std::move(objs);
  Json own = Json::array();
  for (const auto& frame : owners) {
    Json row = Json::array();
    for (ObjectId id : frame) {
      if (id == kNoObject) {
        row.push_back(-1);
      } else {
        row.push_back(id);
      }
    }
    own.push_back(std::move(row));
  }
  j["owners"] = std::move(own);
  return j;
}

inline TruthFile truth_from_json(const Json& j) {
  const std::string where = "ground truth: ";
  detail::check_format(j, kTruthFormat, where);
  TruthFile out;
  GroundTruth& t = out.truth;
  t.geometry.width = detail::require<double>(j, "width", std::nullopt, where);
  t.geometry.height = detail::require<double>(j, "height", std::nullopt, where);
  t.geometry.validate();
  t.num_frames = detail::require<std::size_t>(j, "frames", std::nullopt, where);
  const Json totals = detail::require<Json>(j, "totals", std::nullopt, where);
  t.open = detail::require<std::uint64_t>(totals, "open", std::nullopt, where);
  t.closed = detail::require<std::uint64_t>(totals, "closed", std::nullopt, where);
  for (const Json& o : detail::require<Json>(j, "objects", std::nullopt, where)) {
    ObjectTruth obj;
    obj.id = detail::require<ObjectId>(o, "id", std::nullopt, where);
    const auto label = parse_class_label(detail::require<std::string>(o, "class", std::nullopt, where));
    if (!label) throw InputError(where + "unknown class", std::nullopt, "class");
    obj.true_class = *label;
    obj.entry_frame = detail::require<FrameIndex>(o, "entry_frame", std::nullopt, where);
    obj.exit_frame = detail::require<FrameIndex>(o, "exit_frame", std::nullopt, where);
    for (const Json& b : detail::require<Json>(o, "trajectory", std::nullopt, where)) {
      obj.trajectory.push_back(detail::box_from(b, std::nullopt, where));
    }
    if (obj.id != t.objects.size()) {
      throw InputError(where + "object ids must be 0..n-1 in order", std::nullopt, "id");
    }
    t.objects.push_back(std::move(obj));
  }
  t.validate();
  if (j.contains("owners")) {
    for (const Json& row : j.at("owners")) {
      std::vector<ObjectId> frame;
      for (const Json& id : row) {
        const auto v = id.get<std::int64_t>();
        frame.push_back(v < 0 ? kNoObject : static_cast<ObjectId>(v));
      }
      out.owners.push_back(std::move(frame));
    }
  }
  return out;
}

inline TruthFile parse_truth_file(const std::string& path) {
  return truth_from_json(detail::parse_json(detail::read_file(path), path + ": "));
}

// ---------------------------------------------------------------------------
// Reports

inline Json config_to_json(const CounterConfig& c) {
  return {{"width", c.geometry.width},
          {"height", c.geometry.height},
          {"assign_dist", c.assign_dist},
          {"enter_cap", c.entering_candidate_cap},
          {"end_threshold", c.end_threshold},
          {"lost_lookback", c.lost_lookback},
          {"min_score", c.min_score}};
}

inline CounterConfig config_from_json(const Json& j) {
  const std::string where = "config: ";
  CounterConfig c;
  c.geometry.width = detail::require<double>(j, "width", std::nullopt, where);
  c.geometry.height = detail::require<double>(j, "height", std::nullopt, where);
  c.assign_dist = detail::require<double>(j, "assign_dist", std::nullopt, where);
  c.entering_candidate_cap = detail::require<double>(j, "enter_cap", std::nullopt, where);
  c.end_threshold = detail::require<double>(j, "end_threshold", std::nullopt, where);
  c.lost_lookback = detail::require<int>(j, "lost_lookback", std::nullopt, where);
  c.min_score = detail::require<double>(j, "min_score", std::nullopt, where);
  c.validate();
  return c;
}

inline Json count_report_to_json(const CountReport& r) {
  Json j;
  j["format"] = kCountReportFormat;
  j["counts"] = {{"open", r.open_count}, {"closed", r.closed_count}, {"total", r.total_count}};
  j["config"] = config_to_json(r.config);
  j["initial_threshold"] = r.initial_threshold;
  j["calibration"] = {{"empty", r.calibration_empty},
                      {"candidates", r.calibration_candidates}};
  const auto& d = r.diagnostics;
  j["diagnostics"] = {{"frames_processed", d.frames_processed},
                      {"tracks_started", d.tracks_started},
                      {"extended", d.extended},
                      {"rejected_exiting", d.rejected_exiting},
                      {"orphan_assignments", d.orphan_assignments},
                      {"lost_pushed", d.lost_pushed},
                      {"lost_recovered", d.lost_recovered},
                      {"lost_rejected", d.lost_rejected},
                      {"max_history_frames", d.max_history_frames}};
  Json tracks = Json::array();
  for (const auto& t : r.tracks) {
    Json members = Json::array();
    for (const auto& [f, s] : t.members) members.push_back(Json::array({f, s}));
    tracks.push_back({{"id", t.id},
                      {"first_frame", t.first_frame},
                      {"last_frame", t.last_frame},
                      {"class", std::string(to_string(t.label))},
                      {"members", std::move(members)}});
  }
  j["tracks"] = std::move(tracks);
  return j;
}

inline CountReport count_report_from_json(const Json& j) {
  const std::string where = "count report: ";
  detail::check_format(j, kCountReportFormat, where);
  CountReport r;
  const Json counts = detail::require<Json>(j, "counts", std::nullopt, where);
  r.open_count = detail::require<std::uint64_t>(counts, "open", std::nullopt, where);
  r.closed_count = detail::require<std::uint64_t>(counts, "closed", std::nullopt, where);
  r.total_count = detail::require<std::uint64_t>(counts, "total", std::nullopt, where);
  r.config = config_from_json(detail::require<Json>(j, "config", std::nullopt, where));
  r.initial_threshold = detail::require<double>(j, "initial_threshold", std::nullopt, where);
  const Json cal = detail::require<Json>(j, "calibration", std::nullopt, where);
  r.calibration_empty = detail::require<bool>(cal, "empty", std::nullopt, where);
  r.calibration_candidates = detail::require<std::size_t>(cal, "candidates", std::nullopt, where);
  if (j.contains("diagnostics")) {
    const Json& d = j.at("diagnostics");
    auto& o = r.diagnostics;
    o.frames_processed = d.value("frames_processed", std::uint64_t{0});
    o.tracks_started = d.value("tracks_started", std::uint64_t{0});
    o.extended = d.value("extended", std::uint64_t{0});
    o.rejected_exiting = d.value("rejected_exiting", std::uint64_t{0});
    o.orphan_assignments = d.value("orphan_assignments", std::uint64_t{0});
    o.lost_pushed = d.value("lost_pushed", std::uint64_t{0});
    o.lost_recovered = d.value("lost_recovered", std::uint64_t{0});
    o.lost_rejected = d.value("lost_rejected", std::uint64_t{0});
    o.max_history_frames = d.value("max_history_frames", std::size_t{0});
  }
  for (const Json& t : detail::require<Json>(j, "tracks", std::nullopt, where)) {
    TrackSummary s;
    s.id = detail::require<TrackId>(t, "id", std::nullopt, where);
    s.first_frame = detail::require<FrameIndex>(t, "first_frame", std::nullopt, where);
    s.last_frame = detail::require<FrameIndex>(t, "last_frame", std::nullopt, where);
    const auto label = parse_class_label(detail::require<std::string>(t, "class", std::nullopt, where));
    if (!label) throw InputError(where + "unknown class", std::nullopt, "class");
    s.label = *label;
    for (const Json& m : detail::require<Json>(t, "members", std::nullopt, where)) {
      s.members.emplace_back(m.at(0).get<FrameIndex>(), m.at(1).get<std::size_t>());
    }
    r.tracks.push_back(std::move(s));
  }
  if (r.open_count + r.closed_count != r.total_count || r.total_count != r.tracks.size()) {
    throw InputError(where + "counts disagree with the track list", std::nullopt, "counts");
  }
  return r;
}

inline CountReport parse_count_report_file(const std::string& path) {
  return count_report_from_json(detail::parse_json(detail::read_file(path), path + ": "));
}

/// Undefined metrics are written as the string "undefined".
inline Json metric_json(const MetricValue& v) {
  return v ? Json(*v) : Json("undefined");
}

inline Json detection_metrics_to_json(const DetectionMetrics& m, double iou_threshold) {
  Json j;
  j["format"] = kDetectionMetricsFormat;
  j["iou_threshold"] = iou_threshold;
  Json ap;
  for (ClassLabel c : kAllClasses) ap[std::string(to_string(c))] = metric_json(m.ap.at(c));
  j["ap"] = std::move(ap);
  j["map"] = metric_json(m.map);
  j["tp"] = m.counts.tp;
  j["fp"] = m.counts.fp;
  j["fn"] = m.counts.fn;
  j["recall"] = metric_json(m.pooled.recall);
  j["precision"] = metric_json(m.pooled.precision);
  j["f1"] = metric_json(m.pooled.f1);
  j["accuracy"] = metric_json(m.pooled.accuracy);
  return j;
}

inline Json counting_accuracy_to_json(const CountingAccuracy& a) {
  return {{"tp", a.counts.tp},
          {"fp", a.counts.fp},
          {"fn", a.counts.fn},
          {"accuracy", metric_json(a.accuracy)}};
}

}  // namespace beltcount::io
