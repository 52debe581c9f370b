// Copyright 2026 The vidshuffle Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Prints temporal-shuffle draws for a 16-frame clip and the monotonic
// ratio of each draw under a (3,1,1) first-layer window.
//
//   shuffle_demo [h1] [h2] [seed]

#include <cstdio>
#include <cstdlib>
#include <string>

#include "vidshuffle/analysis.hpp"
#include "vidshuffle/transforms.hpp"

int main(int argc, char** argv) {
  using namespace vidshuffle;
  const int h1 = argc > 1 ? std::atoi(argv[1]) : 2;
  const int h2 = argc > 2 ? std::atoi(argv[2]) : 2;
  const std::uint64_t seed = argc > 3 ? std::strtoull(argv[3], nullptr, 10) : 1;
  constexpr int kFrames = 16;
  const ShuffleConfig cfg{h1, h2};
  try {
    cfg.validate(kFrames);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  }
  const analysis::TemporalWindowSpec window{3, 1, 1};
  Rng rng = make_rng(seed, {});
  std::printf("h1=%d h2=%d, T=%d\n", h1, h2, kFrames);
  for (int draw = 0; draw < 5; ++draw) {
    const ShufflePlan plan = draw_shuffle_plan(kFrames, cfg, rng);
    std::string order;
    for (int src : plan.provenance.source_of) order += std::to_string(src) + " ";
    std::printf("  %s  ratio %.3f\n", order.c_str(),
                analysis::monotonic_ratio(plan.provenance.source_of, window));
  }
  return 0;
}
