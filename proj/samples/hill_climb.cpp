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


// A short hill climb written against the library API instead of the CLI:
// mutate the best-so-far, keep the mutant if it fits the budget and scores
// higher. Useful as a template for custom search loops.

#include <cstdio>
#include <cstdlib>

#include "entronas/entronas.hpp"

int main(int argc, char** argv) {
  using namespace entronas;
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s INITIAL.json [steps]\n", argv[0]);
    return 2;
  }
  const int steps = argc > 2 ? std::atoi(argv[2]) : 50;
  ArchitectureSpec best = load_architecture(argv[1]);

  SearchConfig budget;
  budget.budget_resolution = Resolution::square(64);
  budget.flops_budget = 2 * count_flops(best, budget.budget_resolution);

  EntropyScorerOptions options;
  options.resolution = Resolution::square(64);
  const EntropyScorer scorer(options);
  double best_score = scorer.evaluate(best, 7).score;

  SeededRng rng(7);
  for (int t = 1; t <= steps; ++t) {
    const ArchitectureSpec child = mutate(best, rng, MutationFlag{});
    const AdmitDecision d = admit(child, budget, scorer);
    if (d.accepted && *d.score > best_score) {
      best = child;
      best_score = *d.score;
      std::printf("step %3d  score %.6g  GMACs %.3f\n", t, best_score, d.cost.flops / 1e9);
    }
  }
  std::fputs(serialize(best).c_str(), stdout);
  return 0;
}
