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

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "beltcount/counter.hpp"
#include "beltcount/detection.hpp"
#include "beltcount/error.hpp"
#include "beltcount/geometry.hpp"

namespace beltcount {

/// A metric value; empty when its denominator is zero.
using MetricValue = std::optional<double>;

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  ConfusionCounts& operator+=(const ConfusionCounts& o) noexcept {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Detections of one class in descending score order with their TP/FP
/// outcome, plus the number of ground-truth boxes of that class.
class RankedDetectionList {
 public:
  struct Entry {
    double score = 0.0;
    bool true_positive = false;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  RankedDetectionList() = default;

  /// Sorts by descending score; equal scores keep their input order.
  RankedDetectionList(std::vector<Entry> entries, std::size_t num_annotations)
      : entries_(std::move(entries)), num_annotations_(num_annotations) {
    std::stable_sort(entries_.begin(), entries_.end(),
                     [](const Entry& a, const Entry& b) { return a.score > b.score; });
    std::size_t tp = 0;
    cumulative_tp_.reserve(entries_.size());
    for (const auto& e : entries_) {
      if (e.true_positive) ++tp;
      cumulative_tp_.push_back(tp);
    }
    if (tp > num_annotations_) {
      throw InputError("more true positives than annotations", std::nullopt,
                       "num_annotations");
    }
  }

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t num_annotations() const noexcept { return num_annotations_; }
  const std::vector<Entry>& entries() const noexcept { return entries_; }

  /// Precision over the top `i` detections, 1-based.
  double precision(std::size_t i) const {
    return static_cast<double>(cumulative_tp_.at(i - 1)) / static_cast<double>(i);
  }

  /// Recall over the top `i` detections, 1-based. Requires annotations.
  double recall(std::size_t i) const {
    if (num_annotations_ == 0) {
      throw UndefinedMetricError("recall is undefined without annotations");
    }
    return static_cast<double>(cumulative_tp_.at(i - 1)) /
           static_cast<double>(num_annotations_);
  }

 private:
  std::vector<Entry> entries_;
  std::vector<std::size_t> cumulative_tp_;
  std::size_t num_annotations_ = 0;
};

struct DetectionMatchResult {
  ConfusionCounts pooled;
  std::map<ClassLabel, ConfusionCounts> per_class;
  std::map<ClassLabel, RankedDetectionList> ranked;
};

inline constexpr std::array<ClassLabel, 2> kAllClasses{ClassLabel::ClosedMouth,
                                                        ClassLabel::OpenMouth};

/// Per frame and class, walks detections from the highest score down and
/// pairs each with the unmatched ground-truth box of highest IoU, provided
/// that IoU strictly exceeds `iou_threshold`. Frames must be aligned.
inline DetectionMatchResult match_detections(std::span<const FrameDetections> dets,
                                             std::span<const FrameDetections> gts,
                                             double iou_threshold = 0.5) {
  if (dets.size() != gts.size()) {
    throw InputError("detection and ground-truth streams differ in length");
  }
  DetectionMatchResult out;
  std::map<ClassLabel, std::vector<RankedDetectionList::Entry>> entries;
  std::map<ClassLabel, std::size_t> annotations;
  for (ClassLabel c : kAllClasses) {
    out.per_class[c] = {};
    entries[c] = {};
    annotations[c] = 0;
  }

  for (std::size_t k = 0; k < dets.size(); ++k) {
    const FrameDetections& df = dets[k];
    const FrameDetections& gf = gts[k];
    if (df.frame_index != gf.frame_index) {
      throw InputError("detection and ground-truth frames are misaligned",
                       df.frame_index, "frame");
    }
    for (ClassLabel c : kAllClasses) {
      std::vector<std::size_t> d_idx;
      std::vector<std::size_t> g_idx;
      for (std::size_t i = 0; i < df.size(); ++i) {
        if (df.detections[i].class_label == c) d_idx.push_back(i);
      }
      for (std::size_t i = 0; i < gf.size(); ++i) {
        if (gf.detections[i].class_label == c) g_idx.push_back(i);
      }
      std::stable_sort(d_idx.begin(), d_idx.end(), [&](std::size_t a, std::size_t b) {
        return df.detections[a].score > df.detections[b].score;
      });
      std::vector<bool> taken(g_idx.size(), false);
      ConfusionCounts& cc = out.per_class[c];
      for (std::size_t i : d_idx) {
        const BBox& box = df.detections[i].box;
        std::optional<std::size_t> best;
        double best_iou = iou_threshold;
        for (std::size_t g = 0; g < g_idx.size(); ++g) {
          if (taken[g]) continue;
          const double v = iou(box, gf.detections[g_idx[g]].box);
          if (v > best_iou) {
            best_iou = v;
            best = g;
          }
        }
        const bool tp = best.has_value();
        if (tp) {
          taken[*best] = true;
          ++cc.tp;
        } else {
          ++cc.fp;
        }
        entries[c].push_back({df.detections[i].score, tp});
      }
      for (bool t : taken) {
        if (!t) ++cc.fn;
      }
      annotations[c] += g_idx.size();
    }
  }
  for (ClassLabel c : kAllClasses) {
    out.pooled += out.per_class[c];
    out.ranked.emplace(c, RankedDetectionList(std::move(entries[c]), annotations[c]));
  }
  return out;
}

/// Sum over ranks of Precision(i) * Recall(i), divided by the number of
/// annotations. Note this is not the interpolated area under the PR curve
/// and can exceed 1 when false positives trail the last true positive.
inline double average_precision(const RankedDetectionList& list) {
  if (list.num_annotations() == 0) {
    throw UndefinedMetricError("AP is undefined for a class without annotations");
  }
  double sum = 0.0;
  for (std::size_t i = 1; i <= list.size(); ++i) {
    sum += list.precision(i) * list.recall(i);
  }
  return sum / static_cast<double>(list.num_annotations());
}

inline double mean_average_precision(std::span<const double> per_class_ap) {
  if (per_class_ap.empty()) {
    throw UndefinedMetricError("mAP of an empty class list");
  }
  double sum = 0.0;
  for (double ap : per_class_ap) sum += ap;
  return sum / static_cast<double>(per_class_ap.size());
}

struct PooledScores {
  MetricValue recall;
  MetricValue precision;
  MetricValue f1;
  MetricValue accuracy;
};

/// Recall, precision, F1 and TP / (TP + FP + FN).
inline PooledScores pooled_scores(const ConfusionCounts& c) {
  const auto tp = static_cast<double>(c.tp);
  const auto fp = static_cast<double>(c.fp);
  const auto fn = static_cast<double>(c.fn);
  PooledScores s;
  if (c.tp + c.fn > 0) s.recall = tp / (tp + fn);
  if (c.tp + c.fp > 0) s.precision = tp / (tp + fp);
  if (s.recall && s.precision && *s.recall + *s.precision > 0.0) {
    s.f1 = 2.0 * tp / (2.0 * tp + fp + fn);
  }
  if (c.tp + c.fp + c.fn > 0) s.accuracy = tp / (tp + fp + fn);
  return s;
}

/// Per-class AP, their mean and pooled scores for one evaluation run.
struct DetectionMetrics {
  std::map<ClassLabel, MetricValue> ap;
  MetricValue map;
  ConfusionCounts counts;
  PooledScores pooled;
};

/// mAP averages the classes that have annotations; it is undefined when
/// none do.
inline DetectionMetrics evaluate_detections(std::span<const FrameDetections> dets,
                                            std::span<const FrameDetections> gts,
                                            double iou_threshold = 0.5) {
  const DetectionMatchResult m = match_detections(dets, gts, iou_threshold);
  DetectionMetrics out;
  std::vector<double> defined;
  for (ClassLabel c : kAllClasses) {
    const auto& list = m.ranked.at(c);
    if (list.num_annotations() == 0) {
      out.ap[c] = std::nullopt;
      continue;
    }
    out.ap[c] = average_precision(list);
    defined.push_back(*out.ap[c]);
  }
  if (!defined.empty()) out.map = mean_average_precision(defined);
  out.counts = m.pooled;
  out.pooled = pooled_scores(m.pooled);
  return out;
}

// ---------------------------------------------------------------------------
// Counting accuracy

struct ClassCounts {
  std::uint64_t open = 0;
  std::uint64_t closed = 0;
  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

struct CountingAccuracy {
  ConfusionCounts counts;
  MetricValue accuracy;
};

inline CountingAccuracy counting_accuracy_of(const ConfusionCounts& c) {
  return {c, pooled_scores(c).accuracy};
}

/// Count-clamping mode: per class, min(counted, truth) are correct, any
/// surplus is extra and any shortfall is missed.
inline CountingAccuracy counting_accuracy(const ClassCounts& counted,
                                          const ClassCounts& truth) {
  ConfusionCounts c;
  for (auto [n, t] : {std::pair{counted.open, truth.open},
                      std::pair{counted.closed, truth.closed}}) {
    c.tp += std::min(n, t);
    c.fn += t > n ? t - n : 0;
    c.fp += n > t ? n - t : 0;
  }
  return counting_accuracy_of(c);
}

inline CountingAccuracy counting_accuracy(const CountReport& report,
                                          const ClassCounts& truth) {
  return counting_accuracy(ClassCounts{report.open_count, report.closed_count},
                           truth);
}

/// Tabulated results: objects counted with the right class per class, plus
/// the number of extra (spurious or misclassified) counts.
struct CountTally {
  std::uint64_t correct_open = 0;
  std::uint64_t correct_closed = 0;
  std::uint64_t extra = 0;
};

inline CountingAccuracy counting_accuracy(const CountTally& tally,
                                          const ClassCounts& truth) {
  if (tally.correct_open > truth.open || tally.correct_closed > truth.closed) {
    throw InputError("more correct counts than ground-truth objects");
  }
  ConfusionCounts c;
  c.tp = tally.correct_open + tally.correct_closed;
  c.fn = (truth.open - tally.correct_open) + (truth.closed - tally.correct_closed);
  c.fp = tally.extra;
  return counting_accuracy_of(c);
}

/// Identity mode. Each track is attributed to the object owning most of its
/// member detections (`owners[frame_index][slot]`, ties to the smaller id).
/// The lowest-id track of each object is its match: a correct class is a
/// TP, a wrong class one FP plus one FN. Further tracks on the same object
/// and tracks without an owner are FPs; unclaimed objects are FNs.
inline CountingAccuracy counting_accuracy_matched(
    const CountReport& report, std::span<const std::vector<ObjectId>> owners,
    std::span<const ClassLabel> object_classes) {
  std::map<ObjectId, std::vector<const TrackSummary*>> claims;
  ConfusionCounts c;
  for (const auto& t : report.tracks) {
    std::map<ObjectId, std::size_t> votes;
    for (const auto& [frame, slot] : t.members) {
      const auto f = static_cast<std::size_t>(frame);
      if (frame < 0 || f >= owners.size() || slot >= owners[f].size()) {
        throw InputError("track member outside the ownership table", frame,
                         "slot");
      }
      const ObjectId id = owners[f][slot];
      if (id != kNoObject) ++votes[id];
    }
    std::optional<ObjectId> best;
    std::size_t best_votes = 0;
    for (const auto& [id, n] : votes) {
      if (n > best_votes) {
        best = id;
        best_votes = n;
      }
    }
    if (!best || *best >= object_classes.size()) {
      ++c.fp;
    } else {
      claims[*best].push_back(&t);
    }
  }
  for (ObjectId id = 0; id < object_classes.size(); ++id) {
    const auto it = claims.find(id);
    if (it == claims.end()) {
      ++c.fn;
      continue;
    }
    const auto& tracks = it->second;
    const auto first = std::min_element(
        tracks.begin(), tracks.end(),
        [](const TrackSummary* a, const TrackSummary* b) { return a->id < b->id; });
    if ((*first)->label == object_classes[id]) {
      ++c.tp;
    } else {
      ++c.fp;
      ++c.fn;
    }
    c.fp += tracks.size() - 1;
  }
  return counting_accuracy_of(c);
}

}  // namespace beltcount
