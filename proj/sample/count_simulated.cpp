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

// Generates a small synthetic belt video, counts it and compares the result
// with the simulator's ground truth.

#include <iostream>

#include "beltcount/beltcount.hpp"

int main() {
  using namespace beltcount;

  Scenario scenario;
  scenario.num_objects = 40;
  scenario.seed = 2026;
  auto [clean, truth] = generate(scenario);

  NoiseProfile noise;
  noise.flip_open_visible_prob = 0.3;
  noise.guarantee_open_before_y = CounterConfig{}.end_threshold;
  const SimulatedStream observed = perturb(clean, truth, noise, 7);

  const CountReport report = count_video(observed.frames, CounterConfig{});
  const CountingAccuracy acc =
      counting_accuracy(report, ClassCounts{truth.open, truth.closed});

  std::cout << "frames:            " << observed.frames.size() << "\n"
            << "initial threshold: " << report.initial_threshold << " px\n"
            << "counted open:      " << report.open_count << " (truth " << truth.open << ")\n"
            << "counted closed:    " << report.closed_count << " (truth " << truth.closed
            << ")\n"
            << "accuracy:          " << acc.accuracy.value_or(0.0) << "\n";
  return 0;
}
