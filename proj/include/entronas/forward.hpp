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

// Forward inference of a backbone with per-unit rescaling.
//
// Every unit (a plain conv layer, a bottleneck unit, or an inverted bottleneck
// unit) produces a pre-activation map h. The next unit consumes
// x = relu(h) / gamma, where gamma comes from a Rescaler and is recorded in
// the ledger. Because convolutions carry no bias and ReLU is positively
// homogeneous, the whole network is degree-1 homogeneous in its input, so
// any positive gamma sequence shifts log-variance of every downstream map by
// exactly -sum(log gamma). The entropy module adds that sum back.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "entronas/arch.hpp"
#include "entronas/gaussian_conv.hpp"
#include "entronas/rng.hpp"
#include "entronas/tensor.hpp"

namespace entronas {

/// Maps a post-ReLU activation (and its rescale index) to a positive divisor.
using Rescaler = std::function<double(const FeatureMap& activated, std::size_t index)>;

/// gamma = Euclidean norm / sqrt(numel); keeps every rescaled map at RMS 1.
inline Rescaler rms_rescaler() {
  return [](const FeatureMap& x, std::size_t) { return rms(x); };
}

/// gamma = raw Euclidean norm of the map.
inline Rescaler norm_rescaler() {
  return [](const FeatureMap& x, std::size_t) { return l2_norm(x); };
}

/// gamma = 1, i.e. plain unrescaled inference.
inline Rescaler unit_rescaler() {
  return [](const FeatureMap&, std::size_t) { return 1.0; };
}

struct RescaleLedger {
  std::vector<double> gammas;

  double log_sum() const noexcept {
    double total = 0.0;
    for (double g : gammas) {
      total += std::log(g);
    }
    return total;
  }
};

enum class WeightInit : std::uint8_t {
  Gaussian,  // i.i.d. N(0, 1)
  Constant,  // every weight 1; diagnostic only
};

struct ForwardOptions {
  Rescaler rescaler = rms_rescaler();
  WeightInit init = WeightInit::Gaussian;
  /// How Gaussian dense convolutions are drawn; ignored for constant weights.
  ConvSampling sampling = ConvSampling::Auto;
  /// Optional probe, called with every rescaled activation.
  std::function<void(std::size_t index, const FeatureMap& rescaled)> on_rescaled;
};

/// Last pre-activation map of a stage together with the log-gamma sum of every
/// rescaling applied upstream of it.
struct StageCapture {
  int stage = 0;
  FeatureMap pre_activation;
  double log_gamma_sum = 0.0;
};

struct ForwardResult {
  std::vector<StageCapture> stages;
  FeatureMap output;  // final pre-activation map; the input when there are no blocks
  double output_log_gamma_sum = 0.0;
  RescaleLedger ledger;
};

class ForwardError : public std::runtime_error {
 public:
  enum class Kind : std::uint8_t { NonFinite, Degenerate };

  ForwardError(Kind kind, std::size_t layer, const std::string& what)
      : std::runtime_error(what + " at layer " + std::to_string(layer)), kind_(kind), layer_(layer) {}

  Kind kind() const noexcept { return kind_; }
  std::size_t layer() const noexcept { return layer_; }

 private:
  Kind kind_;
  std::size_t layer_;
};

/// Image of i.i.d. N(0, 1) noise.
inline FeatureMap gaussian_input(int channels, int height, int width, SeededRng& rng) {
  if (channels <= 0 || height <= 0 || width <= 0) {
    throw ShapeError("gaussian_input: dimensions must be positive");
  }
  FeatureMap x(channels, height, width);
  rng.fill_normal(x.data);
  return x;
}

namespace detail {

class UnitRunner {
 public:
  UnitRunner(SeededRng& rng, WeightInit init, ConvSampling sampling)
      : rng_(rng), init_(init), sampling_(sampling) {}

  // Dense k x k convolution with fresh random weights.
  FeatureMap conv(const FeatureMap& x, int out, int k, int stride) {
    if (init_ == WeightInit::Gaussian && sampling_ != ConvSampling::Explicit) {
      const auto positions = static_cast<std::size_t>(conv_output_size(x.height, stride)) *
                             static_cast<std::size_t>(conv_output_size(x.width, stride));
      const std::size_t row = static_cast<std::size_t>(x.channels) * k * k;
      if (sampling_ == ConvSampling::Marginal ||
          prefer_marginal(positions, row, static_cast<std::size_t>(out))) {
        return sample_gaussian_conv2d(x, out, k, stride, rng_);
      }
    }
    return conv2d(x, dense(out, x.channels, k), stride);
  }

  // Weights live in one reused buffer; each tensor is consumed by a single
  // convolution before the next one is drawn.
  const ConvWeights& dense(int out, int in, int k) {
    scratch_.out_channels = out;
    scratch_.in_channels = in;
    scratch_.kernel = k;
    scratch_.depthwise = false;
    refill(static_cast<std::size_t>(out) * in * k * k);
    return scratch_;
  }

  const ConvWeights& depthwise(int channels, int k) {
    scratch_.out_channels = channels;
    scratch_.in_channels = channels;
    scratch_.kernel = k;
    scratch_.depthwise = true;
    refill(static_cast<std::size_t>(channels) * k * k);
    return scratch_;
  }

  FeatureMap plain(const FeatureMap& x, int out, int k, int stride) {
    return conv(x, out, k, stride);
  }

  // Weights are drawn reduce, spatial, expand, projection.
  FeatureMap bottleneck(const FeatureMap& x, int out, int mid, int k, int stride) {
    FeatureMap h = conv(x, mid, 1, 1);
    relu_inplace(h);
    h = conv(h, mid, k, stride);
    relu_inplace(h);
    h = conv(h, out, 1, 1);
    if (x.channels != out || stride != 1) {
      add_inplace(h, conv(x, out, 1, stride));
    } else {
      add_inplace(h, x);
    }
    return h;
  }

  FeatureMap inverted(const FeatureMap& x, int out, int hidden, int k, int stride) {
    FeatureMap h = conv(x, hidden, 1, 1);
    relu_inplace(h);
    h = depthwise_conv2d(h, depthwise(hidden, k), stride);
    relu_inplace(h);
    h = conv(h, out, 1, 1);
    if (x.channels == out && stride == 1) {
      add_inplace(h, x);
    }
    return h;
  }

 private:
  void refill(std::size_t n) {
    scratch_.data.resize(n);
    if (init_ == WeightInit::Gaussian) {
      rng_.fill_normal(scratch_.data);
    } else {
      std::fill(scratch_.data.begin(), scratch_.data.end(), 1.0F);
    }
  }

  SeededRng& rng_;
  WeightInit init_;
  ConvSampling sampling_;
  ConvWeights scratch_;
};

}  // namespace detail

/// Runs `blocks` on `input`. Works on any block chain (used directly by tests
/// on shallow nets); stage captures are taken at the last unit before each
/// stride-2 block and at the end of the chain.
inline ForwardResult rescaled_forward(std::span<const BlockSpec> blocks, const FeatureMap& input,
                                      SeededRng& rng, const ForwardOptions& options = {}) {
  ForwardResult result;
  if (blocks.empty()) {
    result.output = input;
    return result;
  }
  if (input.channels != blocks.front().in_channels) {
    throw ShapeError("rescaled_forward: input has " + std::to_string(input.channels) +
                     " channels, first block expects " +
                     std::to_string(blocks.front().in_channels));
  }

  const Rescaler& rescaler = options.rescaler ? options.rescaler : rms_rescaler();
  detail::UnitRunner runner(rng, options.init, options.sampling);
  FeatureMap x = input;
  double log_sum = 0.0;
  std::size_t index = 0;
  int stage = 0;

  for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
    const BlockSpec& b = blocks[bi];
    if (b.stride == 2) {
      ++stage;
    }
    const bool closes_stage = bi + 1 == blocks.size() || blocks[bi + 1].stride == 2;
    const int units = b.type == BlockType::Conv ? b.num_layers
                                                : units_per_layer(b.type) * b.num_layers;
    for (int u = 0; u < units; ++u) {
      const int stride = u == 0 ? b.stride : 1;
      FeatureMap pre;
      switch (b.type) {
        case BlockType::Conv:
          pre = runner.plain(x, b.out_channels, b.kernel, stride);
          break;
        case BlockType::ResBlock:
        case BlockType::Bottleneck:
          pre = runner.bottleneck(x, b.out_channels, b.bottleneck_channels, b.kernel, stride);
          break;
        case BlockType::MobileBlock:
          pre = runner.inverted(x, b.out_channels, b.bottleneck_channels, b.kernel, stride);
          break;
      }
      if (!all_finite(pre)) {
        throw ForwardError(ForwardError::Kind::NonFinite, index, "non-finite activation");
      }
      const bool last_unit = u + 1 == units;
      if (last_unit && bi + 1 == blocks.size()) {
        if (closes_stage && stage > 0) {
          result.stages.push_back({stage, pre, log_sum});
        }
        result.output = std::move(pre);
        result.output_log_gamma_sum = log_sum;
        return result;
      }
      if (last_unit && closes_stage && stage > 0) {
        result.stages.push_back({stage, pre, log_sum});
      }
      relu_inplace(pre);
      const double gamma = rescaler(pre, index);
      if (gamma == 0.0) {
        throw ForwardError(ForwardError::Kind::Degenerate, index, "all-zero activation");
      }
      if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw ForwardError(ForwardError::Kind::NonFinite, index,
                           "rescale factor not positive and finite");
      }
      scale_inplace(pre, 1.0 / gamma);
      if (!all_finite(pre)) {
        throw ForwardError(ForwardError::Kind::NonFinite, index, "non-finite activation");
      }
      if (options.on_rescaled) {
        options.on_rescaled(index, pre);
      }
      result.ledger.gammas.push_back(gamma);
      log_sum += std::log(gamma);
      x = std::move(pre);
      ++index;
    }
  }
  return result;  // unreachable: the last unit returns above
}

/// Validated entry point for complete backbones.
inline ForwardResult rescaled_forward(const ArchitectureSpec& arch, const FeatureMap& input,
                                      SeededRng& rng, const ForwardOptions& options = {}) {
  require_valid(arch);
  return rescaled_forward(std::span<const BlockSpec>(arch.blocks), input, rng, options);
}

}  // namespace entronas
