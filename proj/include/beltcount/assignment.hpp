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
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "beltcount/detection.hpp"
#include "beltcount/error.hpp"
#include "beltcount/geometry.hpp"

namespace beltcount {

/// Result of matching a previous detection list against a current one.
/// `pairs` holds (previous index, current index); the two unassigned lists
/// hold the remaining indices of each side in ascending order.
struct AssignmentSet {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<std::size_t> unassigned_prev;
  std::vector<std::size_t> unassigned_curr;

  friend bool operator==(const AssignmentSet&, const AssignmentSet&) = default;
};

/// Greedy class-blind association: repeatedly take the unmatched cross pair
/// with the smallest center distance not exceeding `max_dist`. Equal
/// distances go to the smaller previous index, then the smaller current
/// index.
inline AssignmentSet assign(std::span<const Detection> prev,
                            std::span<const Detection> curr, double max_dist) {
  if (!(max_dist > 0.0)) {
    throw InputError("assignment distance cap must be positive", std::nullopt,
                     "assign_dist");
  }

  struct Candidate {
    double dist;
    std::size_t prev;
    std::size_t curr;
  };
  std::vector<Candidate> candidates;
  std::vector<Point> curr_centers;
  curr_centers.reserve(curr.size());
  for (const auto& d : curr) curr_centers.push_back(d.center());

  for (std::size_t i = 0; i < prev.size(); ++i) {
    const Point p = prev[i].center();
    for (std::size_t j = 0; j < curr.size(); ++j) {
      const double d = distance(p, curr_centers[j]);
      if (d <= max_dist) candidates.push_back({d, i, j});
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              if (a.dist != b.dist) return a.dist < b.dist;
              if (a.prev != b.prev) return a.prev < b.prev;
              return a.curr < b.curr;
            });

  std::vector<bool> prev_used(prev.size(), false);
  std::vector<bool> curr_used(curr.size(), false);
  AssignmentSet out;
  for (const auto& c : candidates) {
    if (prev_used[c.prev] || curr_used[c.curr]) continue;
    prev_used[c.prev] = true;
    curr_used[c.curr] = true;
    out.pairs.emplace_back(c.prev, c.curr);
  }
  for (std::size_t i = 0; i < prev.size(); ++i) {
    if (!prev_used[i]) out.unassigned_prev.push_back(i);
  }
  for (std::size_t j = 0; j < curr.size(); ++j) {
    if (!curr_used[j]) out.unassigned_curr.push_back(j);
  }
  return out;
}

inline AssignmentSet assign(const FrameDetections& prev,
                            const FrameDetections& curr, double max_dist) {
  return assign(std::span<const Detection>(prev.detections),
                std::span<const Detection>(curr.detections), max_dist);
}

inline constexpr int kMinLostGap = 2;
inline constexpr int kMaxLostGap = 6;

struct AnyCandidate {
  constexpr bool operator()(std::size_t) const noexcept { return true; }
};

/// Looks `gap` frames back for the detection closest to `current`, within
/// `gap * base_dist` pixels. Only indices accepted by `eligible` are
/// considered; ties go to the smaller index.
template <class Eligible = AnyCandidate>
std::optional<std::size_t> assign_with_gap(std::span<const Detection> history,
                                           const Detection& current, int gap,
                                           double base_dist,
                                           Eligible eligible = {}) {
  if (gap < kMinLostGap || gap > kMaxLostGap) {
    throw InputError("lost-recovery gap must lie in [2, 6]", std::nullopt,
                     "gap");
  }
  if (!(base_dist > 0.0)) {
    throw InputError("assignment distance cap must be positive", std::nullopt,
                     "assign_dist");
  }
  const double cap = static_cast<double>(gap) * base_dist;
  const Point c = current.center();
  std::optional<std::size_t> best;
  double best_dist = 0.0;
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (!eligible(i)) continue;
    const double d = distance(history[i].center(), c);
    if (d > cap) continue;
    if (!best || d < best_dist) {
      best = i;
      best_dist = d;
    }
  }
  return best;
}

template <class Eligible = AnyCandidate>
std::optional<std::size_t> assign_with_gap(const FrameDetections& history,
                                           const Detection& current, int gap,
                                           double base_dist,
                                           Eligible eligible = {}) {
  return assign_with_gap(std::span<const Detection>(history.detections),
                         current, gap, base_dist, eligible);
}

}  // namespace beltcount
