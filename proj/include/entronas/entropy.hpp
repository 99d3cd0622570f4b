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

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "entronas/arch.hpp"
#include "entronas/cost.hpp"
#include "entronas/forward.hpp"
#include "entronas/rng.hpp"
#include "entronas/tensor.hpp"

namespace entronas {

/// Entropy of N(mu, sigma^2) up to additive constants: log(sigma).
inline double gaussian_entropy(double sigma) {
  if (!(sigma > 0.0)) {
    throw std::domain_error("gaussian_entropy: sigma must be positive");
  }
  return std::log(sigma);
}

/// A map (or architecture) whose activations carry no variance.
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Gaussian upper-bound entropy of one element of the map, compensated for
/// upstream rescaling: 1/2 log Var(map) + log_gamma_sum.
inline double entropy_per_element(const FeatureMap& pre_activation, double log_gamma_sum) {
  if (pre_activation.numel() < 2) {
    throw DegenerateError("degenerate feature map: fewer than two elements");
  }
  const double var = variance(pre_activation);
  if (!(var > 0.0)) {
    throw DegenerateError("degenerate feature map: zero variance");
  }
  if (!std::isfinite(var)) {
    throw DegenerateError("degenerate feature map: non-finite variance");
  }
  return 0.5 * std::log(var) + log_gamma_sum;
}

/// Entropy of a stage map: the per-element value scaled by C*H*W.
inline double stage_entropy(const FeatureMap& pre_activation, double log_gamma_sum) {
  return static_cast<double>(pre_activation.numel()) *
         entropy_per_element(pre_activation, log_gamma_sum);
}

/// Per-stage weights of the multi-scale score.
struct MsepWeights {
  std::array<double, kNumStages> alpha{0.0, 0.0, 1.0, 1.0, 6.0};

  static MsepWeights single_scale() { return {{0.0, 0.0, 0.0, 0.0, 1.0}}; }

  friend bool operator==(const MsepWeights&, const MsepWeights&) = default;

  bool valid() const noexcept {
    bool any_positive = false;
    for (double a : alpha) {
      if (!(a >= 0.0) || !std::isfinite(a)) {
        return false;
      }
      any_positive = any_positive || a > 0.0;
    }
    return any_positive;
  }
};

struct EntropyReport {
  std::array<double, kNumStages> stage_entropy{};
  std::array<double, kNumStages> gammas_logsum{};
  double score = 0.0;
};

/// Weighted sum of stage entropies, accumulated in stage order.
inline double weighted_score(const std::array<double, kNumStages>& stage, const MsepWeights& w) {
  double score = 0.0;
  for (int i = 0; i < kNumStages; ++i) {
    score += w.alpha[i] * stage[i];
  }
  return score;
}

/// One rescaled forward pass on a 3-channel (or stem-width) Gaussian image,
/// then stage entropies of C1..C5 and their weighted sum.
inline EntropyReport multiscale_entropy(const ArchitectureSpec& arch, const MsepWeights& weights,
                                        Resolution res, SeededRng& rng,
                                        const ForwardOptions& options = {}) {
  require_valid(arch);
  if (!weights.valid()) {
    throw std::invalid_argument("MSEP weights must be non-negative with at least one positive");
  }
  if (res.height <= 0 || res.width <= 0 || res.height % 32 != 0 || res.width % 32 != 0) {
    throw std::invalid_argument("scoring resolution must be a positive multiple of 32");
  }
  const FeatureMap input = gaussian_input(arch.input_channels(), res.height, res.width, rng);
  ForwardResult fwd;
  try {
    fwd = rescaled_forward(arch, input, rng, options);
  } catch (const ForwardError& e) {
    if (e.kind() == ForwardError::Kind::Degenerate) {
      throw DegenerateError(std::string("degenerate architecture: ") + e.what());
    }
    throw;
  }
  EntropyReport report;
  for (const auto& capture : fwd.stages) {
    const auto i = static_cast<std::size_t>(capture.stage - 1);
    report.gammas_logsum[i] = capture.log_gamma_sum;
    try {
      report.stage_entropy[i] = stage_entropy(capture.pre_activation, capture.log_gamma_sum);
    } catch (const DegenerateError& e) {
      throw DegenerateError("degenerate architecture: stage C" + std::to_string(capture.stage) +
                            ": " + e.what());
    }
  }
  report.score = weighted_score(report.stage_entropy, weights);
  return report;
}

/// Pluggable zero-cost proxy. `evaluate` must be a pure function of
/// (arch, seed) so candidates can be scored in any order or concurrently.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual EntropyReport evaluate(const ArchitectureSpec& arch, std::uint64_t seed) const = 0;
  virtual std::string name() const = 0;
};

struct EntropyScorerOptions {
  MsepWeights weights;
  Resolution resolution = Resolution::square(384);
  int repeats = 1;
  WeightInit init = WeightInit::Gaussian;
  ConvSampling sampling = ConvSampling::Auto;
};

/// Random stream of repeat `r` for a given architecture.
inline std::uint64_t candidate_stream(const ArchitectureSpec& arch, int repeat) noexcept {
  const std::uint64_t h = structural_hash(arch);
  return repeat == 0 ? h : mix64(h + static_cast<std::uint64_t>(repeat));
}

/// Multi-scale entropy averaged over `repeats` independent draws. The draws
/// for a candidate come from SeededRng(seed, candidate_stream(arch, r)).
class EntropyScorer final : public Scorer {
 public:
  explicit EntropyScorer(EntropyScorerOptions options = {}) : options_(options) {
    if (options_.repeats < 1) {
      throw std::invalid_argument("repeats must be >= 1");
    }
  }

  EntropyReport evaluate(const ArchitectureSpec& arch, std::uint64_t seed) const override {
    ForwardOptions fwd;
    fwd.init = options_.init;
    fwd.sampling = options_.sampling;
    EntropyReport mean;
    for (int r = 0; r < options_.repeats; ++r) {
      SeededRng rng(seed, candidate_stream(arch, r));
      const auto report = multiscale_entropy(arch, options_.weights, options_.resolution, rng, fwd);
      for (int i = 0; i < kNumStages; ++i) {
        mean.stage_entropy[i] += report.stage_entropy[i];
        mean.gammas_logsum[i] += report.gammas_logsum[i];
      }
    }
    if (options_.repeats > 1) {
      for (int i = 0; i < kNumStages; ++i) {
        mean.stage_entropy[i] /= options_.repeats;
        mean.gammas_logsum[i] /= options_.repeats;
      }
    }
    mean.score = weighted_score(mean.stage_entropy, options_.weights);
    return mean;
  }

  std::string name() const override { return "multiscale-entropy"; }

  const EntropyScorerOptions& options() const noexcept { return options_; }

 private:
  EntropyScorerOptions options_;
};

}  // namespace entronas
