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

#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "beltcount/assignment.hpp"
#include "beltcount/detection.hpp"
#include "beltcount/error.hpp"
#include "beltcount/geometry.hpp"

namespace beltcount {

/// Thresholds of the counting state machine. The defaults are the values
/// tuned for 600 px tall frames; `for_geometry` rescales them for other
/// heights (entering-candidate cap at 1/3 of the height, end threshold at
/// 5/6).
struct CounterConfig {
  static constexpr double kReferenceHeight = 600.0;

  ImageGeometry geometry{800.0, kReferenceHeight};
  /// Largest center distance (px) at which two detections in consecutive
  /// frames may be associated.
  double assign_dist = 20.0;
  /// Unassigned detections above this y (px) are initial-threshold
  /// candidates.
  double entering_candidate_cap = 200.0;
  /// Detections at or below this y (px) are in the exiting area.
  double end_threshold = 500.0;
  /// Deepest look-back (frames) for the lost-detection buffer; gaps 2 up to
  /// this value are tried.
  int lost_lookback = kMaxLostGap;
  double min_score = 0.5;

  static CounterConfig for_geometry(ImageGeometry geometry) {
    CounterConfig c;
    c.geometry = geometry;
    if (geometry.height != kReferenceHeight) {
      c.entering_candidate_cap = geometry.height / 3.0;
      c.end_threshold = 5.0 * geometry.height / 6.0;
    }
    return c;
  }

  void validate() const {
    geometry.validate();
    if (!(assign_dist > 0.0)) {
      throw InputError("assign_dist must be positive", std::nullopt,
                       "assign_dist");
    }
    if (!(entering_candidate_cap > 0.0 &&
          entering_candidate_cap < end_threshold &&
          end_threshold < geometry.height)) {
      throw InputError(
          "thresholds must satisfy 0 < enter_cap < end_threshold < height",
          std::nullopt, "end_threshold");
    }
    if (lost_lookback < kMinLostGap || lost_lookback > kMaxLostGap) {
      throw InputError("lost_lookback must lie in [2, 6]", std::nullopt,
                       "lost_lookback");
    }
    if (!(min_score >= 0.0 && min_score <= 1.0)) {
      throw InputError("min_score must lie in [0, 1]", std::nullopt,
                       "min_score");
    }
  }

  friend bool operator==(const CounterConfig&, const CounterConfig&) = default;
};

enum class Zone : std::uint8_t { Entering, Middle, Exiting };

using TrackId = std::uint64_t;

struct TrackMember {
  Detection detection;
  /// Position of the detection in its (canonicalized) frame.
  std::size_t slot = 0;

  friend bool operator==(const TrackMember&, const TrackMember&) = default;
};

/// One physical object followed across frames. Once any member is seen
/// open-mouthed the whole track stays open.
class Track {
 public:
  Track(TrackId id, TrackMember first) : id_(id) { append(std::move(first)); }

  void append(TrackMember m) {
    if (!members_.empty() &&
        m.detection.frame_index <= members_.back().detection.frame_index) {
      throw InvariantError("track members must have increasing frame indices");
    }
    if (m.detection.class_label == ClassLabel::OpenMouth) latched_open_ = true;
    members_.push_back(std::move(m));
  }

  TrackId id() const noexcept { return id_; }
  bool latched_open() const noexcept { return latched_open_; }
  ClassLabel label() const noexcept {
    return latched_open_ ? ClassLabel::OpenMouth : ClassLabel::ClosedMouth;
  }
  const std::vector<TrackMember>& members() const noexcept { return members_; }
  FrameIndex first_frame() const { return members_.front().detection.frame_index; }
  FrameIndex last_frame() const { return members_.back().detection.frame_index; }

 private:
  TrackId id_;
  std::vector<TrackMember> members_;
  bool latched_open_ = false;
};

struct TrackSummary {
  TrackId id = 0;
  FrameIndex first_frame = 0;
  FrameIndex last_frame = 0;
  ClassLabel label = ClassLabel::ClosedMouth;
  /// (frame index, slot) of every member, in frame order.
  std::vector<std::pair<FrameIndex, std::size_t>> members;

  friend bool operator==(const TrackSummary&, const TrackSummary&) = default;
};

/// Event tallies kept while counting; useful for auditing a run.
struct CounterDiagnostics {
  std::uint64_t frames_processed = 0;
  std::uint64_t tracks_started = 0;
  std::uint64_t extended = 0;
  std::uint64_t rejected_exiting = 0;
  /// Assigned pairs whose previous detection belonged to no track.
  std::uint64_t orphan_assignments = 0;
  std::uint64_t lost_pushed = 0;
  std::uint64_t lost_recovered = 0;
  std::uint64_t lost_rejected = 0;
  std::size_t max_history_frames = 0;

  friend bool operator==(const CounterDiagnostics&,
                         const CounterDiagnostics&) = default;
};

struct CountReport {
  std::uint64_t open_count = 0;
  std::uint64_t closed_count = 0;
  std::uint64_t total_count = 0;
  std::vector<TrackSummary> tracks;

  CounterConfig config;
  double initial_threshold = 0.0;
  bool calibration_empty = false;
  std::size_t calibration_candidates = 0;
  CounterDiagnostics diagnostics;

  friend bool operator==(const CountReport&, const CountReport&) = default;
};

/// Outcome of the threshold-calibration pass. `assignments[k]` matches frame
/// k - 1 against frame k (entry 0 matches an empty list against frame 0) and
/// is replayed by the counting pass.
struct Calibration {
  double initial_threshold = 0.0;
  bool empty = false;
  std::size_t num_candidates = 0;
  std::vector<AssignmentSet> assignments;
};

namespace detail {

inline void require_consecutive(std::span<const FrameDetections> stream) {
  for (std::size_t k = 1; k < stream.size(); ++k) {
    if (stream[k].frame_index != stream[k - 1].frame_index + 1) {
      throw InputError("frames must be consecutive", stream[k].frame_index,
                       "frame");
    }
  }
}

}  // namespace detail

/// Associates every consecutive frame pair class-blind, collects the center
/// y of each unassigned current detection lying above the candidate cap,
/// and averages them. Without candidates the cap itself is used and
/// `empty` is set. The first frame has no predecessor and contributes no
/// candidates.
inline Calibration calibrate_initial_threshold(
    std::span<const FrameDetections> stream, const CounterConfig& config) {
  config.validate();
  detail::require_consecutive(stream);

  Calibration cal;
  cal.assignments.reserve(stream.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < stream.size(); ++k) {
    if (k == 0) {
      cal.assignments.push_back(
          assign(std::span<const Detection>{},
                 std::span<const Detection>(stream[0].detections),
                 config.assign_dist));
      continue;
    }
    AssignmentSet a = assign(stream[k - 1], stream[k], config.assign_dist);
    for (std::size_t j : a.unassigned_curr) {
      const double y = stream[k].detections[j].center().y;
      if (y < config.entering_candidate_cap) {
        sum += y;
        ++cal.num_candidates;
      }
    }
    cal.assignments.push_back(std::move(a));
  }
  if (cal.num_candidates == 0) {
    cal.initial_threshold = config.entering_candidate_cap;
    cal.empty = true;
  } else {
    cal.initial_threshold = sum / static_cast<double>(cal.num_candidates);
  }
  return cal;
}

/// Streaming state of the track-and-count state machine for one video.
///
/// Frames are fed in order with `process_frame`. Each call:
///  1. extends tracks along assigned pairs, unless either end of the pair
///     is in the exiting area;
///  2. starts a track for each unassigned detection in the entering area,
///     provided the frame holds more detections than its predecessor;
///     other unassigned detections outside the exiting area become lost;
///  3. retries each lost detection against the still-unassigned detections
///     2..lost_lookback frames back (closest gap first, cap scaled by the
///     gap) and appends it to the matched detection's track, or drops it.
///
/// Only the last `lost_lookback` frames are retained.
class CounterState {
 public:
  struct LostEntry {
    Detection detection;
    std::size_t slot = 0;
    /// Gap at which the entry was recovered; empty when it was dropped.
    std::optional<int> recovered_gap;
  };

  CounterState(const CounterConfig& config, double initial_threshold)
      : config_(config), initial_threshold_(initial_threshold) {
    config_.validate();
  }

  const CounterConfig& config() const noexcept { return config_; }
  double initial_threshold() const noexcept { return initial_threshold_; }
  double end_threshold() const noexcept { return config_.end_threshold; }

  Zone zone_of(const Detection& d) const noexcept { return zone_of_y(d.center().y); }

  Zone zone_of_y(double y) const noexcept {
    if (y >= config_.end_threshold) return Zone::Exiting;
    if (y <= initial_threshold_) return Zone::Entering;
    return Zone::Middle;
  }

  /// Processes `curr` given its association with the previously processed
  /// frame (or with an empty list, for the first frame).
  void process_frame(const FrameDetections& curr,
                     const AssignmentSet& assignment) {
    if (!history_.empty() &&
        curr.frame_index != history_.back().frame.frame_index + 1) {
      throw InputError("frames must be processed consecutively",
                       curr.frame_index, "frame");
    }
    const HistoryFrame* prev = history_.empty() ? nullptr : &history_.back();
    const std::size_t prev_size = prev ? prev->frame.size() : 0;
    check_assignment(assignment, prev_size, curr.size());

    HistoryFrame now;
    now.frame = curr;
    now.track_of.assign(curr.size(), std::nullopt);
    now.forward_assigned.assign(curr.size(), false);

    for (const auto& [p, c] : assignment.pairs) {
      history_.back().forward_assigned[p] = true;
      const Detection& pd = prev->frame.detections[p];
      const Detection& cd = curr.detections[c];
      if (zone_of(pd) == Zone::Exiting || zone_of(cd) == Zone::Exiting) {
        ++diag_.rejected_exiting;
        continue;
      }
      const auto& owner = prev->track_of[p];
      if (!owner) {
        ++diag_.orphan_assignments;
        continue;
      }
      tracks_.at(*owner).append({cd, c});
      now.track_of[c] = *owner;
      ++diag_.extended;
    }

    lost_.clear();
    const bool count_grew = curr.size() > prev_size;
    for (std::size_t c : assignment.unassigned_curr) {
      const Detection& cd = curr.detections[c];
      const Zone z = zone_of(cd);
      if (z == Zone::Exiting) {
        ++diag_.rejected_exiting;
      } else if (z == Zone::Entering && count_grew) {
        const TrackId id = next_track_id_++;
        tracks_.emplace(id, Track(id, {cd, c}));
        now.track_of[c] = id;
        ++diag_.tracks_started;
      } else {
        lost_.push_back({cd, c, std::nullopt});
        ++diag_.lost_pushed;
      }
    }

    for (auto& entry : lost_) {
      entry.recovered_gap = recover(entry, now);
      if (entry.recovered_gap) {
        ++diag_.lost_recovered;
      } else {
        ++diag_.lost_rejected;
      }
    }

    history_.push_back(std::move(now));
    while (history_.size() > static_cast<std::size_t>(config_.lost_lookback)) {
      history_.pop_front();
    }
    diag_.max_history_frames = std::max(diag_.max_history_frames, history_.size());
    ++diag_.frames_processed;
  }

  /// Convenience overload that associates `curr` with the last processed
  /// frame itself.
  void process_frame(const FrameDetections& curr) {
    const std::span<const Detection> prev =
        history_.empty() ? std::span<const Detection>{}
                         : std::span<const Detection>(history_.back().frame.detections);
    process_frame(curr, assign(prev, std::span<const Detection>(curr.detections),
                               config_.assign_dist));
  }

  CountReport finalize() const {
    CountReport r;
    r.config = config_;
    r.initial_threshold = initial_threshold_;
    r.diagnostics = diag_;
    r.tracks.reserve(tracks_.size());
    for (const auto& [id, t] : tracks_) {
      TrackSummary s{id, t.first_frame(), t.last_frame(), t.label(), {}};
      s.members.reserve(t.members().size());
      for (const auto& m : t.members()) {
        s.members.emplace_back(m.detection.frame_index, m.slot);
      }
      if (t.latched_open()) {
        ++r.open_count;
      } else {
        ++r.closed_count;
      }
      r.tracks.push_back(std::move(s));
    }
    r.total_count = r.open_count + r.closed_count;
    if (r.total_count != r.tracks.size()) {
      throw InvariantError("per-class counts disagree with the track list");
    }
    return r;
  }

  const std::map<TrackId, Track>& tracks() const noexcept { return tracks_; }
  /// Lost detections of the most recent frame with their outcome.
  const std::vector<LostEntry>& lost_pistachios() const noexcept { return lost_; }
  std::size_t history_size() const noexcept { return history_.size(); }
  const CounterDiagnostics& diagnostics() const noexcept { return diag_; }

 private:
  struct HistoryFrame {
    FrameDetections frame;
    std::vector<std::optional<TrackId>> track_of;
    /// Whether the detection was paired with one in the following frame,
    /// or claimed by a lost recovery.
    std::vector<bool> forward_assigned;
  };

  static void check_assignment(const AssignmentSet& a, std::size_t n_prev,
                               std::size_t n_curr) {
    std::vector<bool> seen_prev(n_prev, false);
    std::vector<bool> seen_curr(n_curr, false);
    auto mark = [](std::vector<bool>& seen, std::size_t i) {
      if (i >= seen.size() || seen[i]) {
        throw InvariantError("assignment does not partition its inputs");
      }
      seen[i] = true;
    };
    for (const auto& [p, c] : a.pairs) {
      mark(seen_prev, p);
      mark(seen_curr, c);
    }
    for (std::size_t p : a.unassigned_prev) mark(seen_prev, p);
    for (std::size_t c : a.unassigned_curr) mark(seen_curr, c);
    if (std::find(seen_prev.begin(), seen_prev.end(), false) != seen_prev.end() ||
        std::find(seen_curr.begin(), seen_curr.end(), false) != seen_curr.end()) {
      throw InvariantError("assignment does not partition its inputs");
    }
  }

  std::optional<int> recover(const LostEntry& entry, HistoryFrame& now) {
    for (int gap = kMinLostGap; gap <= config_.lost_lookback; ++gap) {
      // history_ does not yet hold the current frame: back() is gap 1.
      if (static_cast<std::size_t>(gap) > history_.size()) break;
      HistoryFrame& past = history_[history_.size() - static_cast<std::size_t>(gap)];
      const auto hit = assign_with_gap(
          std::span<const Detection>(past.frame.detections), entry.detection,
          gap, config_.assign_dist,
          [&](std::size_t i) { return !past.forward_assigned[i]; });
      if (!hit) continue;

      past.forward_assigned[*hit] = true;
      const auto& owner = past.track_of[*hit];
      if (!owner || zone_of(past.frame.detections[*hit]) == Zone::Exiting) {
        return std::nullopt;
      }
      Track& track = tracks_.at(*owner);
      if (track.last_frame() >= entry.detection.frame_index) return std::nullopt;
      track.append({entry.detection, entry.slot});
      now.track_of[entry.slot] = *owner;
      return gap;
    }
    return std::nullopt;
  }

  CounterConfig config_;
  double initial_threshold_;
  std::deque<HistoryFrame> history_;
  std::map<TrackId, Track> tracks_;
  std::vector<LostEntry> lost_;
  TrackId next_track_id_ = 0;
  CounterDiagnostics diag_;
};

/// Applies the counter's ingestion rules to a raw stream: drops detections
/// below the score floor, canonicalizes detection order and inserts empty
/// frames where indices skip. Throws on out-of-order frames. When `origin`
/// is given, `(*origin)[k][slot]` receives the index the detection had in
/// the raw frame.
inline DetectionStream prepare_stream(
    std::span<const FrameDetections> raw, const CounterConfig& config,
    std::vector<std::vector<std::size_t>>* origin = nullptr) {
  DetectionStream out;
  out.reserve(raw.size());
  if (origin) origin->clear();
  for (const auto& frame : raw) {
    frame.validate();
    if (!out.empty()) {
      const FrameIndex last = out.back().frame_index;
      if (frame.frame_index <= last) {
        throw InputError("frame indices must be strictly increasing",
                         frame.frame_index, "frame");
      }
      for (FrameIndex f = last + 1; f < frame.frame_index; ++f) {
        out.push_back({f, {}});
        if (origin) origin->emplace_back();
      }
    }
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < frame.size(); ++i) {
      if (frame.detections[i].score >= config.min_score) kept.push_back(i);
    }
    std::stable_sort(kept.begin(), kept.end(), [&](std::size_t a, std::size_t b) {
      return canonical_less(frame.detections[a], frame.detections[b]);
    });
    FrameDetections prepared{frame.frame_index, {}};
    prepared.detections.reserve(kept.size());
    for (std::size_t i : kept) prepared.detections.push_back(frame.detections[i]);
    out.push_back(std::move(prepared));
    if (origin) origin->push_back(std::move(kept));
  }
  return out;
}

/// Two-pass count of one video: calibrate the initial threshold over the
/// whole stream, then replay the cached associations through the state
/// machine and report per-class counts.
inline CountReport count_video(std::span<const FrameDetections> raw,
                               const CounterConfig& config) {
  config.validate();
  const DetectionStream stream = prepare_stream(raw, config);
  Calibration cal = calibrate_initial_threshold(stream, config);

  CounterState state(config, cal.initial_threshold);
  for (std::size_t k = 0; k < stream.size(); ++k) {
    state.process_frame(stream[k], cal.assignments[k]);
  }
  CountReport report = state.finalize();
  report.calibration_empty = cal.empty;
  report.calibration_candidates = cal.num_candidates;
  return report;
}

}  // namespace beltcount
