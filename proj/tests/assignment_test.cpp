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

#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "beltcount/assignment.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

namespace {

using namespace beltcount;
using beltcount::testing::det_at;

std::vector<Detection> dets(std::initializer_list<std::pair<double, double>> centers) {
  std::vector<Detection> out;
  for (auto [x, y] : centers) out.push_back(det_at(x, y));
  return out;
}

TEST(Assign, SingleCandidateWithinCap) {
  const auto a = assign(dets({{100, 100}}), dets({{105, 110}}), 20.0);
  ASSERT_EQ(a.pairs.size(), 1u);
  EXPECT_EQ(a.pairs[0], (std::pair<std::size_t, std::size_t>{0, 0}));
  EXPECT_TRUE(a.unassigned_prev.empty());
  EXPECT_TRUE(a.unassigned_curr.empty());
}

TEST(Assign, OverCapLeavesBothUnassigned) {
  const auto a = assign(dets({{100, 100}}), dets({{100, 130}}), 20.0);
  EXPECT_TRUE(a.pairs.empty());
  EXPECT_EQ(a.unassigned_prev, std::vector<std::size_t>{0});
  EXPECT_EQ(a.unassigned_curr, std::vector<std::size_t>{0});
}

TEST(Assign, CapIsInclusive) {
  const auto a = assign(dets({{100, 100}}), dets({{100, 120}}), 20.0);
  EXPECT_EQ(a.pairs.size(), 1u);
}

TEST(Assign, EqualDistanceGoesToEarlierPrevious) {
  // A and B are both 9 px from C; A comes first.
  const auto prev = dets({{50, 50}, {50, 68}});
  const auto curr = dets({{50, 59}});
  const auto a = assign(prev, curr, 20.0);
  ASSERT_EQ(a.pairs.size(), 1u);
  EXPECT_EQ(a.pairs[0], (std::pair<std::size_t, std::size_t>{0, 0}));
  EXPECT_EQ(a.unassigned_prev, std::vector<std::size_t>{1});
  // The exhaustive matcher picks the same pair on this instance.
  EXPECT_EQ(oracle::best_matching(prev, curr, 20.0), a.pairs);
}

TEST(Assign, ClassIsIgnored) {
  std::vector<Detection> prev{det_at(100, 100, 0, ClassLabel::OpenMouth)};
  std::vector<Detection> curr{det_at(100, 110, 1, ClassLabel::ClosedMouth)};
  EXPECT_EQ(assign(prev, curr, 20.0).pairs.size(), 1u);
}

TEST(Assign, EmptyInputs) {
  const auto a = assign(std::vector<Detection>{}, std::vector<Detection>{}, 20.0);
  EXPECT_TRUE(a.pairs.empty());
  const auto b = assign(std::vector<Detection>{}, dets({{40, 40}, {80, 80}}), 20.0);
  EXPECT_EQ(b.unassigned_curr, (std::vector<std::size_t>{0, 1}));
}

TEST(Assign, RejectsNonPositiveCap) {
  EXPECT_THROW(assign(dets({{40, 40}}), dets({{40, 40}}), 0.0), InputError);
}

TEST(AssignWithGap, ScaledCap) {
  const FrameDetections history{0, {det_at(100, 100)}};
  const Detection curr = det_at(100, 135, 2);
  EXPECT_EQ(assign_with_gap(history, curr, 2, 20.0), std::optional<std::size_t>{0});
  // The plain 20 px cap would not reach 35 px.
  EXPECT_TRUE(assign(history.detections, std::vector<Detection>{curr}, 20.0).pairs.empty());
}

TEST(AssignWithGap, EmptyHistory) {
  EXPECT_FALSE(assign_with_gap(FrameDetections{}, det_at(100, 100), 3, 20.0));
}

TEST(AssignWithGap, PicksClosestEligible) {
  const FrameDetections history{0, {det_at(100, 100), det_at(100, 120)}};
  const Detection curr = det_at(100, 125, 3);
  EXPECT_EQ(assign_with_gap(history, curr, 3, 20.0), std::optional<std::size_t>{1});
  EXPECT_EQ(assign_with_gap(history, curr, 3, 20.0, [](std::size_t i) { return i != 1; }),
            std::optional<std::size_t>{0});
}

TEST(AssignWithGap, GapOutsideRangeThrows) {
  EXPECT_THROW(assign_with_gap(FrameDetections{}, det_at(100, 100), 1, 20.0), InputError);
  EXPECT_THROW(assign_with_gap(FrameDetections{}, det_at(100, 100), 7, 20.0), InputError);
}

TEST(Assign, SingletonMatchesNearestNeighbour) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> pos(20.0, 120.0);
  for (int it = 0; it < 500; ++it) {
    std::vector<Detection> prev{det_at(pos(rng), pos(rng))};
    std::vector<Detection> curr;
    for (int k = 0; k < 6; ++k) curr.push_back(det_at(pos(rng), pos(rng)));
    const auto a = assign(prev, curr, 30.0);
    std::optional<std::size_t> nearest;
    for (std::size_t j = 0; j < curr.size(); ++j) {
      const double d = oracle::center_distance(prev[0], curr[j]);
      if (d <= 30.0 && (!nearest || d < oracle::center_distance(prev[0], curr[*nearest]))) {
        nearest = j;
      }
    }
    if (nearest) {
      ASSERT_EQ(a.pairs.size(), 1u);
      EXPECT_EQ(a.pairs[0].second, *nearest);
    } else {
      EXPECT_TRUE(a.pairs.empty());
    }
  }
}

}  // namespace
