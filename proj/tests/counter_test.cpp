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

#include <gtest/gtest.h>

#include "beltcount/counter.hpp"
#include "test_helpers.hpp"

namespace {

using namespace beltcount;
using beltcount::testing::det_at;
using beltcount::testing::frame_of;
using beltcount::testing::single_track;

constexpr auto kOpen = ClassLabel::OpenMouth;
constexpr auto kClosed = ClassLabel::ClosedMouth;

TEST(CounterConfig, ScalesWithHeight) {
  const auto c600 = CounterConfig::for_geometry({800, 600});
  EXPECT_EQ(c600.entering_candidate_cap, 200.0);
  EXPECT_EQ(c600.end_threshold, 500.0);
  const auto c900 = CounterConfig::for_geometry({800, 900});
  EXPECT_EQ(c900.entering_candidate_cap, 300.0);
  EXPECT_EQ(c900.end_threshold, 750.0);
}

TEST(CounterConfig, RejectsInconsistentThresholds) {
  CounterConfig c;
  c.end_threshold = 150.0;
  EXPECT_THROW(c.validate(), InputError);
  c = {};
  c.lost_lookback = 1;
  EXPECT_THROW(c.validate(), InputError);
  c = {};
  c.assign_dist = 0.0;
  EXPECT_THROW(c.validate(), InputError);
}

// --- calibration -----------------------------------------------------------

TEST(Calibrate, SingleCandidate) {
  const DetectionStream s{{0, {}}, frame_of(1, {{100, 100}})};
  const auto cal = calibrate_initial_threshold(s, CounterConfig{});
  EXPECT_EQ(cal.initial_threshold, 100.0);
  EXPECT_FALSE(cal.empty);
  EXPECT_EQ(cal.num_candidates, 1u);
}

TEST(Calibrate, MeanOfCandidates) {
  const DetectionStream s{{0, {}}, frame_of(1, {{100, 80}, {200, 120}, {300, 160}})};
  EXPECT_EQ(calibrate_initial_threshold(s, CounterConfig{}).initial_threshold, 120.0);
}

TEST(Calibrate, IgnoresAssignedAndLowDetections) {
  // Frame 2: the first detection continues from frame 1, the second sits
  // below the candidate cap.
  const DetectionStream s{{0, {}},
                          frame_of(1, {{100, 50}}),
                          frame_of(2, {{100, 60}, {300, 250}})};
  const auto cal = calibrate_initial_threshold(s, CounterConfig{});
  EXPECT_EQ(cal.num_candidates, 1u);
  EXPECT_EQ(cal.initial_threshold, 50.0);
}

TEST(Calibrate, NoCandidatesFallsBackToCap) {
  const auto cal = calibrate_initial_threshold(single_track(100, 300, 10, 5), CounterConfig{});
  EXPECT_EQ(cal.initial_threshold, 200.0);
  EXPECT_TRUE(cal.empty);
}

TEST(Calibrate, EmptyStreamFallsBack) {
  const auto cal = calibrate_initial_threshold(DetectionStream{}, CounterConfig{});
  EXPECT_EQ(cal.initial_threshold, 200.0);
  EXPECT_TRUE(cal.empty);
}

// --- zones -----------------------------------------------------------------

TEST(Zone, Classification) {
  const CounterState state(CounterConfig{}, 120.0);
  EXPECT_EQ(state.zone_of(det_at(100, 50)), Zone::Entering);
  EXPECT_EQ(state.zone_of(det_at(100, 120)), Zone::Entering);
  EXPECT_EQ(state.zone_of(det_at(100, 300)), Zone::Middle);
  EXPECT_EQ(state.zone_of(det_at(100, 500)), Zone::Exiting);
  EXPECT_EQ(state.zone_of(det_at(100, 550)), Zone::Exiting);
}

// --- state machine traces --------------------------------------------------

// One object, 20 px per frame from y=100. Calibration finds no candidate
// (every step is assigned) so the threshold falls back to 200. Frame 0
// starts the track, frames 1..19 extend it, frame 20 (y=500) and frame 21
// (previous in exiting area) are rejected.
TEST(CountVideo, SingleObjectTwentyPixelSteps) {
  const auto stream = single_track(100, 100, 20, 22);
  const CountReport r = count_video(stream, CounterConfig{});
  EXPECT_TRUE(r.calibration_empty);
  EXPECT_EQ(r.initial_threshold, 200.0);
  EXPECT_EQ(r.total_count, 1u);
  ASSERT_EQ(r.tracks.size(), 1u);
  EXPECT_EQ(r.tracks[0].first_frame, 0);
  EXPECT_EQ(r.tracks[0].last_frame, 19);
  EXPECT_EQ(r.tracks[0].members.size(), 20u);
  EXPECT_EQ(r.diagnostics.rejected_exiting, 2u);
}

// The 100 -> 160 -> ... -> 520 trajectory (60 px steps) over 8 frames,
// counted with a 60 px association cap.
TEST(CountVideo, SingleObjectSixtyPixelSteps) {
  CounterConfig c;
  c.assign_dist = 60.0;
  const CountReport r = count_video(single_track(100, 100, 60, 8), c);
  EXPECT_EQ(r.total_count, 1u);
  ASSERT_EQ(r.tracks.size(), 1u);
  EXPECT_EQ(r.tracks[0].last_frame, 6);  // y=460; frame 7 is at 520
}

// Same trajectory with frame 4 missing. Frame 5 (y=400) has no predecessor
// match, is in the middle area and goes to the lost list; at gap 2 it
// reaches frame 3 (y=280, 120 px <= 2 * 60) and rejoins the track.
TEST(CountVideo, DropoutRecoveredThroughLostList) {
  CounterConfig c;
  c.assign_dist = 60.0;
  const CountReport r = count_video(single_track(100, 100, 60, 8, {4}), c);
  EXPECT_EQ(r.total_count, 1u);
  EXPECT_EQ(r.diagnostics.lost_pushed, 1u);
  EXPECT_EQ(r.diagnostics.lost_recovered, 1u);
  ASSERT_EQ(r.tracks.size(), 1u);
  EXPECT_EQ(r.tracks[0].members.size(), 6u);  // frames 0,1,2,3,5,6
}

// 20 px steps with frame 8 (y=260) missing: frame 9 (y=280) is recovered at
// gap 2 from frame 7 (y=240, 40 px <= 2 * 20).
TEST(CountVideo, DropoutRecoveredAtDefaultCap) {
  const CountReport r = count_video(single_track(100, 100, 20, 22, {8}), CounterConfig{});
  EXPECT_EQ(r.total_count, 1u);
  EXPECT_EQ(r.diagnostics.lost_recovered, 1u);
}

// A five-frame hole (6 frames back) is the deepest that can be bridged.
TEST(CountVideo, DropoutBeyondLookbackIsLost) {
  // Frames 10..14 missing: frame 15 must reach frame 9, gap 6.
  const auto ok = count_video(single_track(100, 100, 10, 45, {10, 11, 12, 13, 14}),
                              CounterConfig{});
  EXPECT_EQ(ok.total_count, 1u);
  EXPECT_EQ(ok.diagnostics.lost_recovered, 1u);
  // Frames 10..15 missing: frame 16 would need gap 7.
  const auto lost = count_video(single_track(100, 100, 10, 45, {10, 11, 12, 13, 14, 15}),
                                CounterConfig{});
  EXPECT_EQ(lost.diagnostics.lost_recovered, 0u);
  EXPECT_EQ(lost.diagnostics.lost_rejected, 1u);
  EXPECT_EQ(lost.total_count, 1u);
  EXPECT_EQ(lost.tracks[0].last_frame, 9);
  EXPECT_GT(lost.diagnostics.orphan_assignments, 0u);
}

TEST(CountVideo, LatchesOpenClass) {
  std::vector<ClassLabel> labels{kClosed, kClosed, kOpen,   kClosed,
                                 kClosed, kOpen,   kClosed, kClosed};
  const CountReport r = count_video(single_track(100, 100, 20, 8, {}, labels), CounterConfig{});
  EXPECT_EQ(r.open_count, 1u);
  EXPECT_EQ(r.closed_count, 0u);
  EXPECT_EQ(r.total_count, 1u);
}

TEST(CountVideo, EmptyStream) {
  const CountReport r = count_video(DetectionStream{}, CounterConfig{});
  EXPECT_EQ(r.total_count, 0u);
  EXPECT_EQ(r.open_count, 0u);
  EXPECT_EQ(r.closed_count, 0u);
  EXPECT_TRUE(r.calibration_empty);
}

TEST(CountVideo, SingleFrameStartsEveryEnteringDetection) {
  const DetectionStream s{frame_of(0, {{100, 50}, {200, 60}, {300, 70}})};
  const CountReport r = count_video(s, CounterConfig{});
  EXPECT_EQ(r.total_count, 3u);
}

TEST(CountVideo, NewEntryNeedsGrowingDetectionCount) {
  // Frame 1: one object leaves the image while another appears at the top.
  // The count does not grow, so the newcomer is not accepted as a new input.
  const DetectionStream s{frame_of(0, {{100, 30}, {300, 590}}),
                          frame_of(1, {{100, 40}, {500, 30}})};
  const CountReport r = count_video(s, CounterConfig{});
  EXPECT_EQ(r.total_count, 1u);
  EXPECT_EQ(r.diagnostics.lost_pushed, 1u);
}

TEST(CountVideo, ExitingDetectionsNeverStartTracks) {
  const DetectionStream s{frame_of(0, {{100, 520}}), frame_of(1, {{100, 530}, {300, 560}})};
  EXPECT_EQ(count_video(s, CounterConfig{}).total_count, 0u);
}

TEST(CountVideo, LowScoresDropped) {
  DetectionStream s{frame_of(0, {{100, 50}, {300, 50}})};
  s[0].detections[1].score = 0.2;
  EXPECT_EQ(count_video(s, CounterConfig{}).total_count, 1u);
}

TEST(CountVideo, GapsInFrameIndicesAreEmptyFrames) {
  // Frames 0, 1, then 3: frame 2 is treated as empty and frame 3 recovered.
  auto s = single_track(100, 300, 10, 4);
  s.erase(s.begin() + 2);
  const CountReport r = count_video(s, CounterConfig{});
  EXPECT_EQ(r.diagnostics.frames_processed, 4u);
}

TEST(CountVideo, OutOfOrderFramesRejected) {
  DetectionStream s{{0, {}}, {2, {}}, {1, {}}};
  EXPECT_THROW(count_video(s, CounterConfig{}), InputError);
}

TEST(CountVideo, Deterministic) {
  const auto s = single_track(100, 100, 20, 22, {8});
  EXPECT_EQ(count_video(s, CounterConfig{}), count_video(s, CounterConfig{}));
}

// --- finalize / state ------------------------------------------------------

TEST(Finalize, NoTracks) {
  const CounterState state(CounterConfig{}, 100.0);
  const CountReport r = state.finalize();
  EXPECT_EQ(r.open_count + r.closed_count + r.total_count, 0u);
}

TEST(Finalize, PartitionsByLatchedClass) {
  CounterState state(CounterConfig{}, 100.0);
  state.process_frame(FrameDetections{0,
                                      {det_at(100, 50, 0, kOpen), det_at(200, 50, 0, kOpen),
                                       det_at(300, 50, 0, kClosed)}});
  const CountReport r = state.finalize();
  EXPECT_EQ(r.open_count, 2u);
  EXPECT_EQ(r.closed_count, 1u);
  EXPECT_EQ(r.total_count, 3u);
}

TEST(CounterState, RejectsNonConsecutiveFrames) {
  CounterState state(CounterConfig{}, 100.0);
  state.process_frame(frame_of(0, {{100, 50}}));
  EXPECT_THROW(state.process_frame(frame_of(2, {{100, 60}})), InputError);
}

TEST(CounterState, RejectsBrokenAssignment) {
  CounterState state(CounterConfig{}, 100.0);
  state.process_frame(frame_of(0, {{100, 50}}));
  AssignmentSet bad;
  bad.pairs = {{0, 0}, {0, 1}};
  EXPECT_THROW(state.process_frame(frame_of(1, {{100, 60}, {120, 60}}), bad),
               InvariantError);
}

TEST(CounterState, HistoryBoundedByLookback) {
  CounterConfig c;
  c.lost_lookback = 4;
  CounterState state(c, 100.0);
  for (FrameIndex f = 0; f < 50; ++f) {
    state.process_frame(frame_of(f, {{100, 50.0 + static_cast<double>(f)}}));
    EXPECT_LE(state.history_size(), 4u);
  }
  EXPECT_EQ(state.diagnostics().max_history_frames, 4u);
}

TEST(CounterState, LostEntryOutcomeVisible) {
  CounterState state(CounterConfig{}, 100.0);
  state.process_frame(frame_of(0, {{100, 50}}));
  state.process_frame(frame_of(1, {{100, 70}}));
  state.process_frame(FrameDetections{2, {}});
  state.process_frame(frame_of(3, {{100, 110}}));
  ASSERT_EQ(state.lost_pistachios().size(), 1u);
  EXPECT_EQ(state.lost_pistachios()[0].recovered_gap, std::optional<int>{2});
  EXPECT_EQ(state.tracks().begin()->second.members().size(), 3u);
}

TEST(CounterState, RecoveryIntoUntrackedHistoryIsDiscarded) {
  CounterState state(CounterConfig{}, 40.0);
  // Frame 0: a middle-area detection that starts nothing.
  state.process_frame(frame_of(0, {{100, 300}}));
  state.process_frame(FrameDetections{1, {}});
  state.process_frame(frame_of(2, {{100, 320}}));
  EXPECT_TRUE(state.tracks().empty());
  EXPECT_EQ(state.diagnostics().lost_rejected, 2u);
}

}  // namespace
