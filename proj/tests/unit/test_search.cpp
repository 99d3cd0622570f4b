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


#include <atomic>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <gtest/gtest.h>

#include "entronas/cost.hpp"
#include "entronas/search.hpp"
#include "support/fixtures.hpp"

namespace entronas {
namespace {

// Cheap deterministic scorer: log of the parameter count plus a seed-dependent wobble.
class ParamScorer final : public Scorer {
 public:
  EntropyReport evaluate(const ArchitectureSpec& arch, std::uint64_t seed) const override {
    ++calls;
    EntropyReport r;
    SeededRng rng(seed, structural_hash(arch));
    r.score = std::log(static_cast<double>(count_params(arch))) + 0.01 * rng.uniform();
    r.stage_entropy[4] = r.score;
    return r;
  }
  std::string name() const override { return "params"; }
  mutable std::atomic<int> calls{0};
};

class ThrowingScorer final : public Scorer {
 public:
  EntropyReport evaluate(const ArchitectureSpec&, std::uint64_t) const override {
    throw DegenerateError("degenerate feature map: zero variance");
  }
  std::string name() const override { return "throwing"; }
};

SearchConfig tiny_config(int iterations = 200) {
  SearchConfig c;
  c.initial_arch = testing::tiny_arch();
  c.budget_resolution = Resolution::square(64);
  c.flops_budget = 2 * count_flops(c.initial_arch, c.budget_resolution);
  c.iterations = iterations;
  c.population_size = 16;
  c.resolution = 32;
  c.seed = 3;
  return c;
}

Population population_of(const std::vector<double>& scores) {
  Population p;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    auto arch = testing::tiny_arch();
    arch.blocks[1].bottleneck_channels = 8 * static_cast<int>(i + 1);  // distinct hashes
    p.insert(arch, scores[i]);
  }
  return p;
}

std::vector<double> scores_of(const Population& p) {
  std::vector<double> s;
  for (const auto& e : p.entries()) s.push_back(e.score);
  return s;
}

TEST(Maintain, RemovesTheMinimum) {
  const auto p = maintain(population_of({3, 1, 4, 1.5, 5}), 4);
  EXPECT_EQ(scores_of(p), (std::vector<double>{3, 4, 1.5, 5}));
}

TEST(Maintain, TiesKeepTheEarliest) {
  const auto p = maintain(population_of({2, 2, 2, 2}), 2);
  ASSERT_EQ(p.size(), 2U);
  EXPECT_EQ(p.entries()[0].insertion, 0U);
  EXPECT_EQ(p.entries()[1].insertion, 1U);
}

TEST(Maintain, NoChangeWithinCap) {
  const auto before = population_of({1, 2, 3});
  const auto after = maintain(before, 3);
  EXPECT_EQ(scores_of(after), scores_of(before));
  EXPECT_EQ(scores_of(maintain(before, 10)), scores_of(before));
  EXPECT_THROW(maintain(before, 0), std::invalid_argument);
}

TEST(Population, RejectsDuplicatesAndFindsBest) {
  Population p;
  EXPECT_TRUE(p.insert(testing::tiny_arch(), 1.0));
  EXPECT_FALSE(p.insert(testing::tiny_arch(), 5.0));
  EXPECT_EQ(p.size(), 1U);
  auto other = testing::tiny_arch();
  other.blocks[2].kernel = 5;
  p.insert(other, 1.0);
  EXPECT_EQ(p.best().insertion, 0U);  // tie goes to the earlier entry
  EXPECT_THROW(Population{}.best(), std::logic_error);
}

TEST(Population, KeepTopPreservesOrder) {
  auto p = population_of({5, 1, 7, 3, 9, 2});
  p.keep_top(3);
  EXPECT_EQ(scores_of(p), (std::vector<double>{5, 7, 9}));
}

TEST(Admit, OverBudgetIsRejectedWithoutScoring) {
  auto c = tiny_config();
  c.flops_budget = count_flops(c.initial_arch, c.budget_resolution) * 100 / 101;  // arch is 1.01x budget
  ParamScorer s;
  const auto d = admit(c.initial_arch, c, s);
  EXPECT_FALSE(d.accepted);
  EXPECT_EQ(d.reason, "flops budget");
  EXPECT_FALSE(d.score.has_value());
  EXPECT_EQ(s.calls.load(), 0);
}

TEST(Admit, ParamsBudget) {
  auto c = tiny_config();
  c.params_budget = count_params(c.initial_arch) - 1;
  ParamScorer s;
  EXPECT_EQ(admit(c.initial_arch, c, s).reason, "params budget");
  EXPECT_EQ(s.calls.load(), 0);
}

TEST(Admit, TooDeepIsRejected) {
  auto c = tiny_config();
  c.max_depth = c.initial_arch.depth() - 1;
  ParamScorer s;
  const auto d = admit(c.initial_arch, c, s);
  EXPECT_FALSE(d.accepted);
  EXPECT_EQ(d.reason, "max depth");
  c.max_depth = c.initial_arch.depth();
  EXPECT_TRUE(admit(c.initial_arch, c, s).accepted);
}

TEST(Admit, ValidCandidateGetsFiniteScore) {
  const auto c = tiny_config();
  EntropyScorerOptions o;
  o.resolution = Resolution::square(32);
  const auto d = admit(c.initial_arch, c, EntropyScorer(o));
  ASSERT_TRUE(d.accepted);
  ASSERT_TRUE(d.score.has_value());
  EXPECT_TRUE(std::isfinite(*d.score));
  EXPECT_TRUE(d.reason.empty());
}

TEST(Admit, InvalidAndDegenerateAreRejected) {
  auto c = tiny_config();
  auto bad = c.initial_arch;
  bad.blocks[1].kernel = 7;
  ParamScorer s;
  EXPECT_EQ(admit(bad, c, s).reason.rfind("invalid", 0), 0U);
  EXPECT_EQ(admit(c.initial_arch, c, ThrowingScorer{}).reason, "degenerate");
}

TEST(Search, ZeroIterationsReturnsInitial) {
  const auto c = tiny_config(0);
  ParamScorer s;
  const auto r = search(c, s);
  EXPECT_EQ(r.best_arch, c.initial_arch);
  EXPECT_EQ(r.iterations_run, 0);
  ASSERT_EQ(r.records.size(), 1U);
  EXPECT_EQ(r.records[0].reason, "initial");
}

TEST(Search, InvalidConfigThrows) {
  auto c = tiny_config();
  c.population_size = 0;
  ParamScorer s;
  EXPECT_THROW(search(c, s), std::invalid_argument);
  c = tiny_config();
  c.iterations = -1;
  EXPECT_THROW(search(c, s), std::invalid_argument);
}

TEST(Search, OverBudgetInitialThrows) {
  auto c = tiny_config();
  c.flops_budget = count_flops(c.initial_arch, c.budget_resolution) - 1;
  ParamScorer s;
  try {
    search(c, s);
    FAIL() << "expected SearchError";
  } catch (const SearchError& e) {
    EXPECT_NE(std::string(e.what()).find("budget"), std::string::npos) << e.what();
  }
}

TEST(Search, DegenerateInitialThrows) {
  ThrowingScorer s;
  EXPECT_THROW(search(tiny_config(), s), SearchError);
}

struct Trace {
  std::vector<std::size_t> sizes;
  std::vector<std::vector<PopulationEntry>> snapshots;
  int switched_at = -1;
  std::vector<PopulationEntry> before_switch;
  std::vector<PopulationEntry> at_switch;
};

SearchObserver tracer(Trace& t) {
  return [&t](int it, const Population& p, bool switched) {
    if (switched) {
      t.switched_at = it;
      t.before_switch = t.snapshots.back();
      t.at_switch = p.entries();
      return;
    }
    t.sizes.push_back(p.size());
    t.snapshots.push_back(p.entries());
  };
}

TEST(Search, SwitchKeepsExactlyTheTopTen) {
  const auto c = tiny_config(200);
  ParamScorer s;
  Trace t;
  search(c, s, tracer(t));
  EXPECT_EQ(t.switched_at, 100);
  ASSERT_EQ(t.at_switch.size(), kFineSurvivors);
  std::vector<double> all;
  for (const auto& e : t.before_switch) all.push_back(e.score);
  std::sort(all.rbegin(), all.rend());
  std::vector<double> kept;
  for (const auto& e : t.at_switch) kept.push_back(e.score);
  std::sort(kept.rbegin(), kept.rend());
  EXPECT_EQ(kept, std::vector<double>(all.begin(), all.begin() + kFineSurvivors));
}

TEST(Search, ElitismAndCap) {
  const auto c = tiny_config(300);
  ParamScorer s;
  Trace t;
  const auto r = search(c, s, tracer(t));
  ASSERT_EQ(r.score_trajectory.size(), 301U);
  for (std::size_t i = 1; i < r.score_trajectory.size(); ++i) {
    EXPECT_GE(r.score_trajectory[i], r.score_trajectory[i - 1]);
  }
  for (auto n : t.sizes) EXPECT_LE(n, static_cast<std::size_t>(c.population_size));
  EXPECT_EQ(r.best_score, r.score_trajectory.back());
  EXPECT_GT(r.best_score, r.score_trajectory.front());
}

TEST(Search, EveryMemberWithinBudget) {
  auto c = tiny_config(300);
  c.params_budget = 3 * count_params(c.initial_arch);
  c.max_depth = 40;
  ParamScorer s;
  Trace t;
  search(c, s, tracer(t));
  for (const auto& snap : t.snapshots) {
    for (const auto& e : snap) {
      const auto cost = analyze(e.arch, c.budget_resolution);
      ASSERT_LE(cost.flops, c.flops_budget);
      ASSERT_LE(cost.params, *c.params_budget);
      ASSERT_LE(cost.depth, c.max_depth);
      ASSERT_TRUE(validate(e.arch));
    }
  }
}

TEST(Search, PopulationHashesAreUnique) {
  const auto c = tiny_config(300);
  ParamScorer s;
  Trace t;
  const auto r = search(c, s, tracer(t));
  for (const auto& snap : t.snapshots) {
    std::set<std::uint64_t> hashes;
    for (const auto& e : snap) hashes.insert(e.hash);
    ASSERT_EQ(hashes.size(), snap.size());
  }
  const bool any_duplicate = std::any_of(r.records.begin(), r.records.end(), [](const SearchRecord& rec) {
    return rec.status == AdmitStatus::Duplicate;
  });
  EXPECT_TRUE(any_duplicate);
}

TEST(Search, FinePhaseKeepsTopology) {
  const auto c = tiny_config(300);
  ParamScorer s;
  Trace t;
  search(c, s, tracer(t));
  using Skeleton = std::vector<std::tuple<BlockType, int, int>>;
  auto skeleton = [](const ArchitectureSpec& a) {
    Skeleton k;
    for (const auto& b : a.blocks) k.emplace_back(b.type, b.num_layers, b.stride);
    return k;
  };
  std::set<Skeleton> allowed;
  for (const auto& e : t.at_switch) allowed.insert(skeleton(e.arch));
  for (std::size_t it = static_cast<std::size_t>(t.switched_at); it < t.snapshots.size(); ++it) {
    for (const auto& e : t.snapshots[it]) {
      ASSERT_TRUE(allowed.count(skeleton(e.arch))) << "iteration " << it;
    }
  }
}

TEST(Search, IdenticalSeedsGiveIdenticalRuns) {
  for (int jobs : {1, 3}) {
    auto c = tiny_config(150);
    c.jobs = jobs;
    ParamScorer s;
    const auto a = search(c, s);
    const auto b = search(c, s);
    EXPECT_EQ(a.records, b.records) << "jobs " << jobs;
    EXPECT_EQ(a.score_trajectory, b.score_trajectory);
    EXPECT_EQ(a.best_arch, b.best_arch);
  }
}

TEST(Search, DifferentSeedsDiverge) {
  auto c = tiny_config(100);
  ParamScorer s;
  const auto a = search(c, s);
  c.seed = 4;
  EXPECT_NE(search(c, s).records, a.records);
}

TEST(Search, JobsDrawSeveralCandidatesPerIteration) {
  auto c = tiny_config(20);
  c.jobs = 4;
  ParamScorer s;
  const auto r = search(c, s);
  EXPECT_EQ(r.records.size(), 1U + 20U * 4U);
}

TEST(Search, SeedPopulationFillsFirst) {
  auto c = tiny_config(0);
  c.seed_population = true;
  ParamScorer s;
  Trace t;
  const auto r = search(c, s, tracer(t));
  EXPECT_EQ(r.records.size(), static_cast<std::size_t>(c.population_size));
  EXPECT_GT(t.sizes.front(), 1U);
}

TEST(Search, RealScorerImprovesOnTinyNet) {
  auto c = tiny_config(60);
  const auto r = search(c);
  EXPECT_GT(r.best_score, r.score_trajectory.front() - 1e-9);
  EXPECT_TRUE(validate(r.best_arch));
  EXPECT_EQ(r.records, search(c).records);
}

TEST(SearchLog, FormatIsTabSeparated) {
  const auto c = tiny_config(5);
  ParamScorer s;
  const auto r = search(c, s);
  std::ostringstream out;
  write_search_log(out, r.records);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kSearchLogHeader);
  int rows = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), '\t'), 6) << line;
    ++rows;
  }
  EXPECT_EQ(rows, static_cast<int>(r.records.size()));
  EXPECT_EQ(format_hash(0xabcULL), "0000000000000abc");
  EXPECT_EQ(std::stod(format_score(0.1)), 0.1);
}

}  // namespace
}  // namespace entronas
