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

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "entronas/arch.hpp"
#include "entronas/cost.hpp"
#include "entronas/entropy.hpp"
#include "entronas/mutation.hpp"
#include "entronas/rng.hpp"

namespace entronas {

inline constexpr std::size_t kFineSurvivors = 10;
// Stream of the search's own draws (parent selection, mutation).
inline constexpr std::uint64_t kSearchStream = 0x5EA2C4ULL;

struct SearchConfig {
  std::int64_t flops_budget = 0;
  std::optional<std::int64_t> params_budget;
  Resolution budget_resolution = Resolution::square(384);
  int max_depth = 130;
  int iterations = 96000;
  int population_size = 256;
  MsepWeights alpha;
  int resolution = 384;
  int repeats = 1;
  std::uint64_t seed = 0;
  ArchitectureSpec initial_arch;
  std::vector<BlockType> block_types{BlockType::ResBlock};
  bool seed_population = false;
  int jobs = 1;
  WeightInit init = WeightInit::Gaussian;

  /// Empty when the config is usable; otherwise the first problem found.
  std::string check() const {
    if (iterations < 0) return "iterations must be >= 0";
    if (population_size <= 0) return "population must be > 0";
    if (max_depth <= 0) return "max_depth must be > 0";
    if (flops_budget <= 0) return "flops budget must be > 0";
    if (params_budget && *params_budget <= 0) return "params budget must be > 0";
    if (budget_resolution.height <= 0 || budget_resolution.width <= 0) {
      return "budget resolution must be positive";
    }
    if (!alpha.valid()) return "alpha must be non-negative with at least one positive entry";
    if (resolution <= 0 || resolution % 32 != 0) return "resolution must be a positive multiple of 32";
    if (repeats < 1) return "repeats must be >= 1";
    if (jobs < 1) return "jobs must be >= 1";
    if (block_types.empty()) return "block_types must not be empty";
    if (auto r = validate(initial_arch); !r) {
      return "initial architecture: " + InvalidArchitecture::describe(r);
    }
    return {};
  }
};

struct PopulationEntry {
  ArchitectureSpec arch;
  std::uint64_t hash = 0;
  double score = 0.0;
  std::uint64_t insertion = 0;
};

/// Scored candidates in insertion order, unique by structural hash.
class Population {
 public:
  const std::vector<PopulationEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  bool contains(std::uint64_t hash) const noexcept {
    return std::any_of(entries_.begin(), entries_.end(),
                       [hash](const PopulationEntry& e) { return e.hash == hash; });
  }

  /// Returns false (and changes nothing) for a duplicate hash.
  bool insert(ArchitectureSpec arch, double score) {
    const std::uint64_t hash = structural_hash(arch);
    if (contains(hash)) {
      return false;
    }
    entries_.push_back({std::move(arch), hash, score, next_insertion_++});
    return true;
  }

  /// Highest score; on ties the earliest insertion.
  const PopulationEntry& best() const {
    if (entries_.empty()) {
      throw std::logic_error("best() of empty population");
    }
    const PopulationEntry* top = &entries_.front();
    for (const auto& e : entries_) {
      if (e.score > top->score) {
        top = &e;
      }
    }
    return *top;
  }

  double max_score() const { return best().score; }

  /// Drops lowest scores until size <= cap. Among equal scores the later
  /// insertion goes first.
  void maintain(std::size_t cap) {
    if (cap == 0) {
      throw std::invalid_argument("maintain: cap must be positive");
    }
    while (entries_.size() > cap) {
      auto worst = entries_.begin();
      for (auto it = entries_.begin(); it != entries_.end(); ++it) {
        if (it->score < worst->score ||
            (it->score == worst->score && it->insertion > worst->insertion)) {
          worst = it;
        }
      }
      entries_.erase(worst);
    }
  }

  /// Keeps the `k` best entries, preserving insertion order.
  void keep_top(std::size_t k) { maintain(std::max<std::size_t>(k, 1)); }

 private:
  std::vector<PopulationEntry> entries_;
  std::uint64_t next_insertion_ = 0;
};

/// Free-function form used by tests and the search loop.
inline Population maintain(Population pop, std::size_t cap) {
  pop.maintain(cap);
  return pop;
}

enum class AdmitStatus : std::uint8_t { Accepted, Rejected, Duplicate };

constexpr const char* to_string(AdmitStatus s) noexcept {
  switch (s) {
    case AdmitStatus::Accepted: return "accepted";
    case AdmitStatus::Rejected: return "rejected";
    case AdmitStatus::Duplicate: return "duplicate";
  }
  return "?";
}

struct AdmitDecision {
  bool accepted = false;
  std::optional<double> score;
  std::string reason;  // empty when accepted
  CostReport cost;
};

/// Budget gate, then score. Budget failures are never scored.
inline AdmitDecision check_budget(const ArchitectureSpec& candidate, const SearchConfig& config) {
  AdmitDecision d;
  if (auto r = validate(candidate); !r) {
    d.reason = "invalid: " + InvalidArchitecture::describe(r);
    return d;
  }
  d.cost = analyze(candidate, config.budget_resolution);
  if (d.cost.flops > config.flops_budget) {
    d.reason = "flops budget";
  } else if (config.params_budget && d.cost.params > *config.params_budget) {
    d.reason = "params budget";
  } else if (d.cost.depth > config.max_depth) {
    d.reason = "max depth";
  } else {
    d.accepted = true;
  }
  return d;
}

inline AdmitDecision admit(const ArchitectureSpec& candidate, const SearchConfig& config,
                           const Scorer& scorer) {
  AdmitDecision d = check_budget(candidate, config);
  if (!d.accepted) {
    return d;
  }
  try {
    d.score = scorer.evaluate(candidate, config.seed).score;
  } catch (const DegenerateError&) {
    d.accepted = false;
    d.reason = "degenerate";
    return d;
  } catch (const ForwardError&) {
    d.accepted = false;
    d.reason = "non-finite";
    return d;
  }
  if (!std::isfinite(*d.score)) {
    d.accepted = false;
    d.reason = "non-finite";
    d.score.reset();
  }
  return d;
}

/// One line of the search log.
struct SearchRecord {
  int iteration = 0;
  std::uint64_t candidate = 0;
  std::optional<double> score;
  AdmitStatus status = AdmitStatus::Accepted;
  std::string reason;
  std::size_t population = 0;
  double population_max = 0.0;

  friend bool operator==(const SearchRecord&, const SearchRecord&) = default;
};

inline constexpr const char* kSearchLogHeader =
    "iteration\tcandidate\tscore\tstatus\treason\tpop_size\tpop_max";

inline std::string format_hash(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string format_score(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string format_record(const SearchRecord& r) {
  std::string line = std::to_string(r.iteration);
  line += '\t';
  line += format_hash(r.candidate);
  line += '\t';
  line += r.score ? format_score(*r.score) : "-";
  line += '\t';
  line += to_string(r.status);
  line += '\t';
  line += r.reason.empty() ? "-" : r.reason;
  line += '\t';
  line += std::to_string(r.population);
  line += '\t';
  line += format_score(r.population_max);
  return line;
}

struct SearchResult {
  ArchitectureSpec best_arch;
  double best_score = 0.0;
  std::vector<double> score_trajectory;  // population max after each iteration
  int iterations_run = 0;
  std::vector<SearchRecord> records;
};

/// Callback after every iteration (iteration 0 is the seeded population).
/// At the coarse-to-fine switch it is also called once right after the cut,
/// before that iteration's mutants, with `switched_to_fine` set.
using SearchObserver =
    std::function<void(int iteration, const Population& population, bool switched_to_fine)>;

class SearchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

struct Candidate {
  ArchitectureSpec arch;
  std::uint64_t hash = 0;
  std::optional<double> cached;
  bool in_population = false;
  AdmitDecision decision;
};

inline void score_batch(std::vector<Candidate>& batch, const SearchConfig& config,
                        const Scorer& scorer) {
  auto run = [&](Candidate& c) {
    if (c.in_population) {
      return;
    }
    if (c.cached) {
      c.decision = check_budget(c.arch, config);
      if (c.decision.accepted) {
        c.decision.score = c.cached;
      }
      return;
    }
    c.decision = admit(c.arch, config, scorer);
  };
  if (batch.size() == 1 || config.jobs == 1) {
    for (auto& c : batch) {
      run(c);
    }
    return;
  }
  // Workers claim candidates by index; every result depends only on its
  // candidate, so the claim order does not matter.
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(batch.size());
  auto worker = [&] {
    for (std::size_t i = next++; i < batch.size(); i = next++) {
      try {
        run(batch[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = std::min(batch.size(), static_cast<std::size_t>(config.jobs));
  std::vector<std::thread> workers;
  workers.reserve(threads);
  for (std::size_t i = 0; i < threads; ++i) {
    workers.emplace_back(worker);
  }
  for (auto& w : workers) {
    w.join();
  }
  for (auto& e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
}

}  // namespace detail

/// Coarse-to-fine evolutionary search. Each iteration draws `jobs` parents
/// uniformly, mutates each, scores the mutants (concurrently when jobs > 1)
/// and admits them in draw order, pruning the population back to its cap.
/// At iteration T/2 the population is cut to its ten best and mutation
/// switches to fine mode.
inline SearchResult search(const SearchConfig& config, const Scorer& scorer,
                           const SearchObserver& observer = {}) {
  if (auto problem = config.check(); !problem.empty()) {
    throw std::invalid_argument(problem);
  }
  const AdmitDecision initial = check_budget(config.initial_arch, config);
  if (!initial.accepted) {
    throw SearchError("initial architecture violates the " + initial.reason);
  }
  double initial_score = 0.0;
  try {
    initial_score = scorer.evaluate(config.initial_arch, config.seed).score;
  } catch (const DegenerateError& e) {
    throw SearchError(std::string("initial architecture: ") + e.what());
  }

  SeededRng rng(config.seed, kSearchStream);
  MutationOptions mutation{config.block_types};
  MutationFlag flag;
  Population pop;
  std::unordered_map<std::uint64_t, double> seen;
  SearchResult result;
  const auto cap = static_cast<std::size_t>(config.population_size);

  auto log = [&](int t, std::uint64_t hash, std::optional<double> score, AdmitStatus status,
                 std::string reason) {
    result.records.push_back({t, hash, score, status, std::move(reason), pop.size(),
                              pop.max_score()});
  };

  pop.insert(config.initial_arch, initial_score);
  seen.emplace(structural_hash(config.initial_arch), initial_score);
  log(0, structural_hash(config.initial_arch), initial_score, AdmitStatus::Accepted, "initial");

  auto process = [&](int t, std::vector<detail::Candidate>& batch) {
    for (auto& c : batch) {
      c.hash = structural_hash(c.arch);
      c.in_population = pop.contains(c.hash);
      if (auto it = seen.find(c.hash); it != seen.end()) {
        c.cached = it->second;
      }
    }
    detail::score_batch(batch, config, scorer);
    for (auto& c : batch) {
      // Re-check: an earlier mutant of the same batch may share the hash.
      if (c.in_population || pop.contains(c.hash)) {
        log(t, c.hash, c.cached, AdmitStatus::Duplicate, "in population");
        continue;
      }
      if (!c.decision.accepted) {
        log(t, c.hash, std::nullopt, AdmitStatus::Rejected, c.decision.reason);
        continue;
      }
      const double score = *c.decision.score;
      seen.emplace(c.hash, score);
      pop.insert(std::move(c.arch), score);
      pop.maintain(cap);
      log(t, c.hash, score, AdmitStatus::Accepted, c.cached ? "cached" : "");
    }
  };

  if (config.seed_population) {
    std::vector<detail::Candidate> batch;
    for (int i = 0; i + 1 < config.population_size; ++i) {
      batch.emplace_back().arch = mutate(config.initial_arch, rng, flag, mutation);
    }
    process(0, batch);
  }
  result.score_trajectory.push_back(pop.max_score());
  if (observer) {
    observer(0, pop, false);
  }

  const int switch_at = config.iterations / 2;
  for (int t = 1; t <= config.iterations; ++t) {
    if (t == switch_at) {
      pop.keep_top(kFineSurvivors);
      flag.fine = true;
      if (observer) {
        observer(t, pop, true);
      }
    }
    std::vector<detail::Candidate> batch;
    batch.reserve(static_cast<std::size_t>(config.jobs));
    for (int j = 0; j < config.jobs; ++j) {
      const auto& parent = pop.entries()[rng.uniform_index(pop.size())];
      batch.emplace_back().arch = mutate(parent.arch, rng, flag, mutation);
    }
    process(t, batch);
    result.score_trajectory.push_back(pop.max_score());
    result.iterations_run = t;
    if (observer) {
      observer(t, pop, false);
    }
  }

  const auto& best = pop.best();
  result.best_arch = best.arch;
  result.best_score = best.score;
  return result;
}

/// Convenience overload with the built-in entropy scorer.
inline SearchResult search(const SearchConfig& config, const SearchObserver& observer = {}) {
  EntropyScorerOptions options;
  options.weights = config.alpha;
  options.resolution = Resolution::square(config.resolution);
  options.repeats = config.repeats;
  options.init = config.init;
  const EntropyScorer scorer(options);
  return search(config, scorer, observer);
}

inline void write_search_log(std::ostream& out, const std::vector<SearchRecord>& records) {
  out << kSearchLogHeader << '\n';
  for (const auto& r : records) {
    out << format_record(r) << '\n';
  }
}

}  // namespace entronas
