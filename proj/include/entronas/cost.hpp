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

#include <cstdint>
#include <stdexcept>

#include "entronas/arch.hpp"

namespace entronas {

struct Resolution {
  int height = 0;
  int width = 0;

  static constexpr Resolution square(int side) noexcept { return {side, side}; }

  friend bool operator==(const Resolution&, const Resolution&) = default;
};

/// Analytic cost of a backbone. FLOPs are multiply-accumulates.
struct CostReport {
  std::int64_t flops = 0;
  std::int64_t params = 0;
  int depth = 0;
};

constexpr int downsample(int size, int stride) noexcept {
  return (size + stride - 1) / stride;
}

namespace detail {

struct CostAccumulator {
  std::int64_t flops = 0;
  std::int64_t params = 0;
  int height = 0;
  int width = 0;

  std::int64_t positions() const noexcept {
    return static_cast<std::int64_t>(height) * width;
  }

  void add_layer(std::int64_t weights, std::int64_t out_positions) noexcept {
    params += weights;
    flops += weights * out_positions;
  }
};

// Bottleneck unit: 1x1 reduce (input resolution), strided k x k, 1x1 expand,
// and a strided 1x1 projection whenever the shortcut changes shape.
inline void bottleneck_unit(CostAccumulator& acc, int in, int out, int mid, int kernel,
                            int stride) noexcept {
  const std::int64_t in_pos = acc.positions();
  acc.height = downsample(acc.height, stride);
  acc.width = downsample(acc.width, stride);
  const std::int64_t out_pos = acc.positions();
  acc.add_layer(std::int64_t{in} * mid, in_pos);
  acc.add_layer(std::int64_t{kernel} * kernel * mid * mid, out_pos);
  acc.add_layer(std::int64_t{mid} * out, out_pos);
  if (in != out || stride != 1) {
    acc.add_layer(std::int64_t{in} * out, out_pos);
  }
}

// Inverted bottleneck: no projection shortcut; residual only when shapes match.
inline void mobile_unit(CostAccumulator& acc, int in, int out, int hidden, int kernel,
                        int stride) noexcept {
  const std::int64_t in_pos = acc.positions();
  acc.height = downsample(acc.height, stride);
  acc.width = downsample(acc.width, stride);
  const std::int64_t out_pos = acc.positions();
  acc.add_layer(std::int64_t{in} * hidden, in_pos);
  acc.add_layer(std::int64_t{kernel} * kernel * hidden, out_pos);
  acc.add_layer(std::int64_t{hidden} * out, out_pos);
}

inline void accumulate_block(CostAccumulator& acc, const BlockSpec& b) noexcept {
  if (b.type == BlockType::Conv) {
    for (int layer = 0; layer < b.num_layers; ++layer) {
      const int in = layer == 0 ? b.in_channels : b.out_channels;
      const int stride = layer == 0 ? b.stride : 1;
      acc.height = downsample(acc.height, stride);
      acc.width = downsample(acc.width, stride);
      acc.add_layer(std::int64_t{b.kernel} * b.kernel * in * b.out_channels, acc.positions());
    }
    return;
  }
  const int units = units_per_layer(b.type) * b.num_layers;
  for (int unit = 0; unit < units; ++unit) {
    const int in = unit == 0 ? b.in_channels : b.out_channels;
    const int stride = unit == 0 ? b.stride : 1;
    if (b.type == BlockType::MobileBlock) {
      mobile_unit(acc, in, b.out_channels, b.bottleneck_channels, b.kernel, stride);
    } else {
      bottleneck_unit(acc, in, b.out_channels, b.bottleneck_channels, b.kernel, stride);
    }
  }
}

inline CostAccumulator accumulate(const ArchitectureSpec& arch, Resolution res) {
  require_valid_blocks(arch);
  if (res.height <= 0 || res.width <= 0) {
    throw std::invalid_argument("resolution must be positive");
  }
  CostAccumulator acc;
  acc.height = res.height;
  acc.width = res.width;
  for (const auto& block : arch.blocks) {
    accumulate_block(acc, block);
  }
  return acc;
}

}  // namespace detail

/// Convolution weight count; biases and normalization parameters excluded.
inline std::int64_t count_params(const ArchitectureSpec& arch) {
  // Parameters do not depend on resolution; any positive size will do.
  return detail::accumulate(arch, Resolution::square(32)).params;
}

/// Multiply-accumulates of one forward pass at `res` with "same" padding.
inline std::int64_t count_flops(const ArchitectureSpec& arch, Resolution res) {
  return detail::accumulate(arch, res).flops;
}

inline CostReport analyze(const ArchitectureSpec& arch, Resolution res) {
  const auto acc = detail::accumulate(arch, res);
  return {acc.flops, acc.params, arch.depth()};
}

}  // namespace entronas
