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
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "beltcount/detection.hpp"
#include "beltcount/error.hpp"
#include "beltcount/geometry.hpp"

namespace beltcount {

/// Parameters of a synthetic conveyor video. Every object is dropped on the
/// belt at the feed line (`entry_y`), travels straight down at its own
/// constant speed and leaves once its center passes the bottom edge.
struct Scenario {
  ImageGeometry geometry{800.0, 600.0};
  std::size_t num_objects = 20;
  double open_fraction = 0.5;
  /// Per-object speed is uniform in [mean - jitter, mean + jitter].
  double speed_mean = 8.0;
  double speed_jitter = 1.0;
  /// Frames between consecutive entries, uniform in [min, max].
  int entry_spacing_min = 2;
  int entry_spacing_max = 8;
  /// Lane x-centers; empty means lanes every 64 px with a 40 px margin.
  std::vector<double> lane_positions;
  /// Center y of each object's first appearance.
  double entry_y = 24.0;
  /// Box size is base +/- an integer jitter.
  int box_width = 30;
  int box_height = 40;
  int box_size_jitter = 4;
  /// Minimum center distance between any two objects visible in the same
  /// frame; entries are delayed until it holds.
  double min_spacing = 60.0;
  std::uint64_t seed = 0;

  std::vector<double> lanes() const {
    if (!lane_positions.empty()) return lane_positions;
    std::vector<double> out;
    for (double x = 40.0; x <= geometry.width - 40.0; x += 64.0) out.push_back(x);
    if (out.empty()) out.push_back(geometry.width / 2.0);
    return out;
  }

  void validate() const {
    geometry.validate();
    if (!(speed_mean - speed_jitter > 0.0) || speed_jitter < 0.0) {
      throw InputError("object speed must stay positive", std::nullopt, "speed");
    }
    if (!(open_fraction >= 0.0 && open_fraction <= 1.0)) {
      throw InputError("open_fraction must lie in [0, 1]", std::nullopt,
                       "open_fraction");
    }
    if (entry_spacing_min < 0 || entry_spacing_max < entry_spacing_min) {
      throw InputError("invalid entry spacing range", std::nullopt,
                       "entry_spacing");
    }
    if (box_width - box_size_jitter <= 0 || box_height - box_size_jitter <= 0 ||
        box_size_jitter < 0) {
      throw InputError("invalid box size", std::nullopt, "box");
    }
    const double half_w = (box_width + box_size_jitter) / 2.0 + 3.0;
    for (double x : lanes()) {
      if (x - half_w < 0.0 || x + half_w > geometry.width) {
        throw InputError("lane does not fit inside the image", std::nullopt,
                         "lane_positions");
      }
    }
    if (entry_y - (box_height + box_size_jitter) / 2.0 < 0.0 ||
        !(entry_y < geometry.height)) {
      throw InputError("entry_y must leave the first box inside the image",
                       std::nullopt, "entry_y");
    }
  }
};

/// Belt speed in pixels per frame for a given frame rate, assuming the
/// 480 px/s belt the presets are built around (8 px/frame at 60 fps).
inline double speed_preset_for_fps(double fps) { return 480.0 / fps; }

struct ObjectTruth {
  ObjectId id = 0;
  ClassLabel true_class = ClassLabel::ClosedMouth;
  FrameIndex entry_frame = 0;
  FrameIndex exit_frame = 0;
  /// Noise-free box for each frame entry_frame..exit_frame.
  std::vector<BBox> trajectory;

  friend bool operator==(const ObjectTruth&, const ObjectTruth&) = default;
};

struct GroundTruth {
  ImageGeometry geometry;
  std::size_t num_frames = 0;
  std::vector<ObjectTruth> objects;
  std::uint64_t open = 0;
  std::uint64_t closed = 0;

  void validate() const {
    std::uint64_t o = 0;
    for (const auto& obj : objects) {
      if (obj.true_class == ClassLabel::OpenMouth) ++o;
    }
    if (o != open || objects.size() - o != closed) {
      throw InputError("ground-truth totals disagree with object records",
                       std::nullopt, "totals");
    }
  }

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

/// A detection stream plus, for each frame and slot, the simulated object
/// that produced the detection.
struct SimulatedStream {
  DetectionStream frames;
  std::vector<std::vector<ObjectId>> owners;

  friend bool operator==(const SimulatedStream&, const SimulatedStream&) = default;
};

namespace detail {

struct Motion {
  FrameIndex entry = 0;
  FrameIndex last = 0;
  double x = 0.0;
  double speed = 0.0;

  /// Unclipped center y at frame f.
  double y_at(FrameIndex f, double entry_y) const {
    return entry_y + speed * static_cast<double>(f - entry);
  }
};

inline FrameIndex last_visible_frame(FrameIndex entry, double entry_y,
                                     double speed, double image_height) {
  // Largest k with entry_y + speed * k < image_height.
  auto k = static_cast<FrameIndex>(std::floor((image_height - entry_y) / speed));
  while (k > 0 && entry_y + speed * static_cast<double>(k) >= image_height) --k;
  while (entry_y + speed * static_cast<double>(k + 1) < image_height) ++k;
  return entry + k;
}

/// Canonicalizes a frame and applies the same permutation to its owners.
inline void canonicalize_with_owners(FrameDetections& frame,
                                     std::vector<ObjectId>& owners) {
  std::vector<std::pair<Detection, ObjectId>> zipped;
  zipped.reserve(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) {
    zipped.emplace_back(frame.detections[i], owners[i]);
  }
  std::stable_sort(zipped.begin(), zipped.end(), [](const auto& a, const auto& b) {
    return canonical_less(a.first, b.first);
  });
  for (std::size_t i = 0; i < zipped.size(); ++i) {
    frame.detections[i] = zipped[i].first;
    owners[i] = zipped[i].second;
  }
}

}  // namespace detail

/// Builds a noise-free stream and its ground truth. Deterministic in
/// `scenario.seed`. Entries are scheduled so that objects visible together
/// stay `min_spacing` apart and no object enters on a frame where another
/// one leaves the image.
inline std::pair<SimulatedStream, GroundTruth> generate(const Scenario& scenario) {
  scenario.validate();
  std::mt19937_64 rng(scenario.seed);
  const auto lanes = scenario.lanes();
  const double H = scenario.geometry.height;

  std::uniform_int_distribution<int> spacing(scenario.entry_spacing_min,
                                             scenario.entry_spacing_max);
  std::uniform_int_distribution<std::size_t> lane_pick(0, lanes.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> speed(
      scenario.speed_mean - scenario.speed_jitter,
      scenario.speed_mean + scenario.speed_jitter);
  std::uniform_int_distribution<int> size_jitter(-scenario.box_size_jitter,
                                                 scenario.box_size_jitter);
  std::uniform_real_distribution<double> x_offset(-3.0, 3.0);
  std::uniform_real_distribution<double> score(0.6, 1.0);

  GroundTruth truth;
  truth.geometry = scenario.geometry;
  std::vector<detail::Motion> motions;
  std::vector<FrameIndex> entry_frames;
  std::vector<FrameIndex> leave_frames;

  auto conflicts = [&](const detail::Motion& m) {
    if (std::find(leave_frames.begin(), leave_frames.end(), m.entry) !=
            leave_frames.end() ||
        std::find(entry_frames.begin(), entry_frames.end(), m.last + 1) !=
            entry_frames.end()) {
      return true;
    }
    for (const auto& o : motions) {
      const FrameIndex lo = std::max(o.entry, m.entry);
      const FrameIndex hi = std::min(o.last, m.last);
      if (lo > hi || std::abs(o.x - m.x) >= scenario.min_spacing) continue;
      for (FrameIndex f = lo; f <= hi; ++f) {
        const Point a{o.x, o.y_at(f, scenario.entry_y)};
        const Point b{m.x, m.y_at(f, scenario.entry_y)};
        if (distance(a, b) < scenario.min_spacing) return true;
      }
    }
    return false;
  };

  FrameIndex next_entry = 0;
  for (std::size_t i = 0; i < scenario.num_objects; ++i) {
    if (i > 0) next_entry += spacing(rng);
    ObjectTruth obj;
    obj.id = static_cast<ObjectId>(i);
    obj.true_class = unit(rng) < scenario.open_fraction ? ClassLabel::OpenMouth
                                                        : ClassLabel::ClosedMouth;
    detail::Motion m;
    m.x = lanes[lane_pick(rng)] + x_offset(rng);
    m.speed = speed(rng);
    const int w = scenario.box_width + size_jitter(rng);
    const int h = scenario.box_height + size_jitter(rng);

    constexpr int kMaxDelay = 100000;
    int delay = 0;
    for (;; ++delay) {
      if (delay > kMaxDelay) {
        throw InputError("cannot schedule objects with the requested spacing",
                         std::nullopt, "min_spacing");
      }
      m.entry = next_entry + delay;
      m.last = detail::last_visible_frame(m.entry, scenario.entry_y, m.speed, H);
      if (!conflicts(m)) break;
    }
    next_entry = m.entry;
    obj.entry_frame = m.entry;
    obj.exit_frame = m.last;
    for (FrameIndex f = m.entry; f <= m.last; ++f) {
      const double cy = m.y_at(f, scenario.entry_y);
      const double y1 = cy - h / 2.0;
      const double y2 = std::min(cy + h / 2.0, H);
      obj.trajectory.push_back(BBox::make(m.x - w / 2.0, y1, m.x + w / 2.0, y2));
    }
    if (obj.true_class == ClassLabel::OpenMouth) {
      ++truth.open;
    } else {
      ++truth.closed;
    }
    entry_frames.push_back(m.entry);
    leave_frames.push_back(m.last + 1);
    motions.push_back(m);
    truth.objects.push_back(std::move(obj));
  }

  FrameIndex num_frames = 0;
  for (const auto& m : motions) num_frames = std::max(num_frames, m.last + 1);
  truth.num_frames = static_cast<std::size_t>(num_frames);

  SimulatedStream sim;
  sim.frames.resize(truth.num_frames);
  sim.owners.resize(truth.num_frames);
  for (FrameIndex f = 0; f < num_frames; ++f) {
    sim.frames[static_cast<std::size_t>(f)].frame_index = f;
  }
  for (const auto& obj : truth.objects) {
    for (std::size_t k = 0; k < obj.trajectory.size(); ++k) {
      const FrameIndex f = obj.entry_frame + static_cast<FrameIndex>(k);
      const auto fi = static_cast<std::size_t>(f);
      sim.frames[fi].detections.push_back(
          {f, obj.trajectory[k], obj.true_class, score(rng)});
      sim.owners[fi].push_back(obj.id);
    }
  }
  for (std::size_t f = 0; f < sim.frames.size(); ++f) {
    detail::canonicalize_with_owners(sim.frames[f], sim.owners[f]);
  }
  return {std::move(sim), std::move(truth)};
}

/// Detector imperfections applied on top of a generated stream.
struct NoiseProfile {
  /// Chance that any one detection is missing.
  double dropout_prob = 0.0;
  /// Longest run of consecutive missing frames per object.
  int max_consecutive_dropout = 0;
  /// Standard deviation (px) of the Gaussian center displacement.
  double jitter_sigma = 0.0;
  /// Chance per frame that an open object shows its open face; otherwise it
  /// is labeled closed. 1 leaves labels untouched.
  double flip_open_visible_prob = 1.0;
  /// Objects whose centers are closer than this emit one union box.
  double merge_distance = 0.0;
  /// When set, every open object is guaranteed at least one open-labeled,
  /// non-dropped detection with center y below this value.
  std::optional<double> guarantee_open_before_y;

  static NoiseProfile none() { return {}; }

  void validate() const {
    auto ratio = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!ratio(dropout_prob) || !ratio(flip_open_visible_prob)) {
      throw InputError("noise probabilities must lie in [0, 1]", std::nullopt,
                       "noise");
    }
    if (max_consecutive_dropout < 0 || jitter_sigma < 0.0 || merge_distance < 0.0) {
      throw InputError("noise magnitudes must be non-negative", std::nullopt,
                       "noise");
    }
  }
};

/// Applies `noise` to a generated stream. The ground truth is only read:
/// object classes decide which detections may flip. Deterministic in
/// `seed`.
inline SimulatedStream perturb(const SimulatedStream& in, const GroundTruth& truth,
                               const NoiseProfile& noise, std::uint64_t seed) {
  noise.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  auto class_of = [&](ObjectId id) {
    return id < truth.objects.size() ? truth.objects[id].true_class
                                     : ClassLabel::ClosedMouth;
  };

  // Dropout, walking frames in order so runs are tracked per object.
  std::vector<std::vector<bool>> keep(in.frames.size());
  std::vector<int> run(truth.objects.size(), 0);
  for (std::size_t f = 0; f < in.frames.size(); ++f) {
    keep[f].assign(in.frames[f].size(), true);
    for (std::size_t s = 0; s < in.frames[f].size(); ++s) {
      const ObjectId id = in.owners[f][s];
      if (noise.dropout_prob <= 0.0 || id >= run.size()) continue;
      const bool drop = unit(rng) < noise.dropout_prob &&
                        run[id] < noise.max_consecutive_dropout;
      keep[f][s] = !drop;
      run[id] = drop ? run[id] + 1 : 0;
    }
  }

  // Labels: open objects reveal the open face per frame with the given odds.
  std::vector<std::vector<ClassLabel>> labels(in.frames.size());
  for (std::size_t f = 0; f < in.frames.size(); ++f) {
    for (const auto& d : in.frames[f].detections) labels[f].push_back(d.class_label);
  }
  if (noise.flip_open_visible_prob < 1.0) {
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> seen(
        truth.objects.size());
    for (std::size_t f = 0; f < in.frames.size(); ++f) {
      for (std::size_t s = 0; s < in.frames[f].size(); ++s) {
        const ObjectId id = in.owners[f][s];
        if (id < seen.size() && keep[f][s]) seen[id].emplace_back(f, s);
      }
    }
    constexpr int kMaxRetries = 64;
    for (ObjectId id = 0; id < seen.size(); ++id) {
      if (class_of(id) != ClassLabel::OpenMouth) continue;
      const auto& slots = seen[id];
      auto eligible = [&](std::size_t k) {
        const auto [f, s] = slots[k];
        return !noise.guarantee_open_before_y ||
               in.frames[f].detections[s].center().y < *noise.guarantee_open_before_y;
      };
      bool satisfied = false;
      for (int attempt = 0; attempt < kMaxRetries && !satisfied; ++attempt) {
        satisfied = !noise.guarantee_open_before_y.has_value();
        for (std::size_t k = 0; k < slots.size(); ++k) {
          const auto [f, s] = slots[k];
          const bool open = unit(rng) < noise.flip_open_visible_prob;
          labels[f][s] = open ? ClassLabel::OpenMouth : ClassLabel::ClosedMouth;
          if (open && eligible(k)) satisfied = true;
        }
      }
      if (!satisfied) {
        for (std::size_t k = 0; k < slots.size(); ++k) {
          if (eligible(k)) {
            labels[slots[k].first][slots[k].second] = ClassLabel::OpenMouth;
            break;
          }
        }
      }
    }
  }

  SimulatedStream out;
  out.frames.resize(in.frames.size());
  out.owners.resize(in.frames.size());
  const ImageGeometry g = truth.geometry;
  for (std::size_t f = 0; f < in.frames.size(); ++f) {
    const FrameDetections& src = in.frames[f];
    FrameDetections& dst = out.frames[f];
    dst.frame_index = src.frame_index;
    for (std::size_t s = 0; s < src.size(); ++s) {
      if (!keep[f][s]) continue;
      Detection d = src.detections[s];
      d.class_label = labels[f][s];
      if (noise.jitter_sigma > 0.0) {
        const double w = d.box.width();
        const double h = d.box.height();
        Point c = d.center();
        c.x += noise.jitter_sigma * gauss(rng);
        c.y += noise.jitter_sigma * gauss(rng);
        c.x = std::clamp(c.x, w / 2.0, g.width - w / 2.0);
        c.y = std::clamp(c.y, h / 2.0, std::max(h / 2.0, g.height - h / 2.0));
        d.box = BBox::from_center(c, w, h);
      }
      dst.detections.push_back(d);
      out.owners[f].push_back(in.owners[f][s]);
    }

    if (noise.merge_distance > 0.0 && dst.size() > 1) {
      // Topmost object of each cluster absorbs the others.
      std::vector<std::size_t> order(dst.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dst.detections[a].center().y < dst.detections[b].center().y;
      });
      std::vector<bool> absorbed(dst.size(), false);
      FrameDetections merged{dst.frame_index, {}};
      std::vector<ObjectId> merged_owners;
      for (std::size_t a : order) {
        if (absorbed[a]) continue;
        Detection top = dst.detections[a];
        const Point anchor = top.center();
        for (std::size_t b : order) {
          if (b == a || absorbed[b]) continue;
          if (distance(anchor, dst.detections[b].center()) < noise.merge_distance) {
            top.box = union_box(top.box, dst.detections[b].box);
            top.score = std::max(top.score, dst.detections[b].score);
            absorbed[b] = true;
          }
        }
        absorbed[a] = true;
        merged.detections.push_back(top);
        merged_owners.push_back(out.owners[f][a]);
      }
      dst = std::move(merged);
      out.owners[f] = std::move(merged_owners);
    }
    detail::canonicalize_with_owners(dst, out.owners[f]);
  }
  return out;
}

}  // namespace beltcount
