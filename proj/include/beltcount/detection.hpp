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
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "beltcount/error.hpp"
#include "beltcount/geometry.hpp"

namespace beltcount {

enum class ClassLabel : std::uint8_t { OpenMouth, ClosedMouth };

inline constexpr std::string_view to_string(ClassLabel c) noexcept {
  return c == ClassLabel::OpenMouth ? "open" : "closed";
}

inline std::optional<ClassLabel> parse_class_label(std::string_view s) {
  if (s == "open") return ClassLabel::OpenMouth;
  if (s == "closed") return ClassLabel::ClosedMouth;
  return std::nullopt;
}

using FrameIndex = std::int64_t;

/// Identity of a physical object in simulator ground truth.
using ObjectId = std::uint32_t;
inline constexpr ObjectId kNoObject = std::numeric_limits<ObjectId>::max();

struct Detection {
  FrameIndex frame_index = 0;
  BBox box;
  ClassLabel class_label = ClassLabel::ClosedMouth;
  double score = 1.0;

  Point center() const noexcept { return beltcount::center(box); }

  void validate() const {
    if (frame_index < 0) {
      throw InputError("frame index must be non-negative", frame_index,
                       "frame");
    }
    if (!(score >= 0.0 && score <= 1.0)) {
      throw InputError("score must lie in [0, 1]", frame_index, "score");
    }
  }

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct FrameDetections {
  FrameIndex frame_index = 0;
  std::vector<Detection> detections;

  std::size_t size() const noexcept { return detections.size(); }
  bool empty() const noexcept { return detections.empty(); }

  void validate() const {
    for (const auto& d : detections) {
      d.validate();
      if (d.frame_index != frame_index) {
        throw InputError("detection frame index differs from its frame",
                         frame_index, "frame");
      }
    }
  }

  friend bool operator==(const FrameDetections&,
                         const FrameDetections&) = default;
};

using DetectionStream = std::vector<FrameDetections>;

/// Strict ordering by center y, then center x, then class, then
/// descending score and raw coordinates.
inline bool canonical_less(const Detection& a, const Detection& b) {
  auto key = [](const Detection& d) {
    const Point c = d.center();
    return std::tuple(c.y, c.x, static_cast<int>(d.class_label), -d.score,
                      d.box.x1(), d.box.y1(), d.box.x2(), d.box.y2());
  };
  return key(a) < key(b);
}

/// Sorts a frame's detections into canonical order so that list indices
/// (and every index-based tie-break) do not depend on the order a detector
/// emitted them in.
inline void canonicalize(FrameDetections& frame) {
  std::stable_sort(frame.detections.begin(), frame.detections.end(),
                   canonical_less);
}

/// Removes detections scoring below `min_score`.
inline void drop_low_scores(FrameDetections& frame, double min_score) {
  std::erase_if(frame.detections,
                [&](const Detection& d) { return d.score < min_score; });
}

}  // namespace beltcount
