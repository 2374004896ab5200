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
#include <string>

#include "beltcount/error.hpp"

namespace beltcount {

/// A pixel position. Origin is the top-left corner; y grows downward, so
/// objects on the belt enter near y = 0 and leave near y = image height.
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// Axis-aligned box in pixel coordinates. Construction through `make`
/// enforces x1 < x2, y1 < y2, finite and non-negative coordinates; a
/// default-constructed box is the unit box at the origin.
class BBox {
 public:
  constexpr BBox() = default;

  static BBox make(double x1, double y1, double x2, double y2) {
    if (!(std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) &&
          std::isfinite(y2))) {
      throw InputError("box coordinates must be finite", std::nullopt, "box");
    }
    if (x1 < 0.0 || y1 < 0.0) {
      throw InputError("box coordinates must be non-negative", std::nullopt,
                       "box");
    }
    if (!(x1 < x2) || !(y1 < y2)) {
      throw InputError("box must have positive area (x1 < x2, y1 < y2)",
                       std::nullopt, "box");
    }
    return BBox(x1, y1, x2, y2);
  }

  static BBox from_center(Point c, double width, double height) {
    return make(c.x - width / 2.0, c.y - height / 2.0, c.x + width / 2.0,
                c.y + height / 2.0);
  }

  constexpr double x1() const noexcept { return x1_; }
  constexpr double y1() const noexcept { return y1_; }
  constexpr double x2() const noexcept { return x2_; }
  constexpr double y2() const noexcept { return y2_; }
  constexpr double width() const noexcept { return x2_ - x1_; }
  constexpr double height() const noexcept { return y2_ - y1_; }
  constexpr double area() const noexcept { return width() * height(); }

  friend bool operator==(const BBox&, const BBox&) = default;

 private:
  constexpr BBox(double x1, double y1, double x2, double y2)
      : x1_(x1), y1_(y1), x2_(x2), y2_(y2) {}

  double x1_ = 0.0;
  double y1_ = 0.0;
  double x2_ = 1.0;
  double y2_ = 1.0;
};

struct ImageGeometry {
  double width = 0.0;
  double height = 0.0;

  void validate() const {
    if (!(width > 0.0) || !(height > 0.0) || !std::isfinite(width) ||
        !std::isfinite(height)) {
      throw InputError("image width and height must be positive", std::nullopt,
                       "geometry");
    }
  }

  friend bool operator==(const ImageGeometry&, const ImageGeometry&) = default;
};

inline Point center(const BBox& box) noexcept {
  return {(box.x1() + box.x2()) / 2.0, (box.y1() + box.y2()) / 2.0};
}

inline double distance(const Point& a, const Point& b) noexcept {
  return std::hypot(a.x - b.x, a.y - b.y);
}

/// Smallest box covering both inputs.
inline BBox union_box(const BBox& a, const BBox& b) {
  return BBox::make(std::min(a.x1(), b.x1()), std::min(a.y1(), b.y1()),
                    std::max(a.x2(), b.x2()), std::max(a.y2(), b.y2()));
}

/// Intersection over union; exactly 0 for disjoint or edge-touching boxes.
inline double iou(const BBox& a, const BBox& b) noexcept {
  const double iw = std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1());
  const double ih = std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  if (a == b) return 1.0;
  return inter / (a.area() + b.area() - inter);
}

}  // namespace beltcount
