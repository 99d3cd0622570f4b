// Copyright 2026 The entronas Authors.
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


// Scores every architecture file given on the command line at 64x64 and
// prints its cost next to the multi-scale entropy.
//
//   score_architectures architectures/initial.json architectures/searched_m.json

#include <cstdio>
#include <exception>

#include "entronas/entronas.hpp"

int main(int argc, char** argv) {
  using namespace entronas;
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s ARCH.json...\n", argv[0]);
    return 2;
  }
  EntropyScorerOptions options;
  options.resolution = Resolution::square(64);
  const EntropyScorer scorer(options);
  std::printf("%-40s %10s %10s %6s %14s\n", "file", "GMACs@64", "Mparams", "depth", "score");
  for (int i = 1; i < argc; ++i) {
    try {
      const ArchitectureSpec arch = load_architecture(argv[i]);
      const CostReport cost = analyze(arch, options.resolution);
      const EntropyReport report = scorer.evaluate(arch, /*seed=*/1);
      std::printf("%-40s %10.3f %10.2f %6d %14.6g\n", argv[i], cost.flops / 1e9, cost.params / 1e6,
                  cost.depth, report.score);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "%s: %s\n", argv[i], e.what());
      return 1;
    }
  }
  return 0;
}
