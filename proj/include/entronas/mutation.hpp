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
#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "entronas/arch.hpp"
#include "entronas/rng.hpp"

namespace entronas {

inline constexpr std::array<int, 2> kKernelChoices = {3, 5};
inline constexpr std::array<double, 6> kWidthScales = {1.0 / 1.5, 1.0 / 1.25, 1.0, 1.25, 1.5, 2.0};
inline constexpr std::array<int, 4> kDepthDeltas = {-2, -1, 1, 2};
inline constexpr std::array<int, 3> kExpansionChoices = {1, 3, 6};

/// Coarse mutations edit type, kernel, width and depth; fine ones only
/// kernel and width.
struct MutationFlag {
  bool fine = false;
};

struct MutationOptions {
  std::vector<BlockType> block_types{BlockType::ResBlock};
};

namespace detail {

template <typename T, std::size_t N>
T pick(const std::array<T, N>& choices, SeededRng& rng) {
  return choices[rng.uniform_index(N)];
}

inline void set_type(BlockSpec& b, BlockType type, SeededRng& rng) {
  if (b.type == type) {
    return;
  }
  b.type = type;
  b.expansion = 0;
  switch (type) {
    case BlockType::Conv:
      b.bottleneck_channels = 0;
      break;
    case BlockType::ResBlock:
    case BlockType::Bottleneck:
      b.bottleneck_channels = round_channels(b.out_channels / 4.0);
      break;
    case BlockType::MobileBlock:
      b.expansion = pick(kExpansionChoices, rng);
      b.bottleneck_channels = round_channels(static_cast<double>(b.in_channels) * b.expansion);
      break;
  }
}

// Stride stays with the first half so the stage layout is unchanged.
inline void split_deep_blocks(std::vector<BlockSpec>& blocks) {
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    BlockSpec& b = blocks[i];
    if (b.num_layers <= kMaxLayersPerBlock) {
      continue;
    }
    BlockSpec tail = b;
    const int total = b.num_layers;
    b.num_layers = (total + 1) / 2;
    tail.num_layers = total / 2;
    tail.stride = 1;
    tail.in_channels = b.out_channels;
    if (tail.type == BlockType::MobileBlock) {
      tail.bottleneck_channels = round_channels(static_cast<double>(tail.in_channels) * tail.expansion);
    }
    blocks.insert(blocks.begin() + static_cast<std::ptrdiff_t>(i) + 1, tail);
  }
}

}  // namespace detail

/// Edits one uniformly chosen block, repairs channel continuity and splits
/// any block deeper than kMaxLayersPerBlock. Block 0 is the stem: it keeps
/// its type and depth and only has kernel and width redrawn.
inline ArchitectureSpec mutate(const ArchitectureSpec& arch, SeededRng& rng, MutationFlag flag,
                               const MutationOptions& options = {}) {
  require_valid_blocks(arch);
  if (options.block_types.empty()) {
    throw std::invalid_argument("mutate: empty block-type whitelist");
  }
  ArchitectureSpec out = arch;
  const std::size_t index = rng.uniform_index(out.blocks.size());
  BlockSpec& b = out.blocks[index];
  const bool stem = index == 0;

  if (!flag.fine && !stem) {
    detail::set_type(b, options.block_types[rng.uniform_index(options.block_types.size())], rng);
  }
  b.kernel = detail::pick(kKernelChoices, rng);
  b.out_channels = round_channels(b.out_channels * detail::pick(kWidthScales, rng));
  if (b.type != BlockType::Conv) {
    b.bottleneck_channels =
        round_channels(b.bottleneck_channels * detail::pick(kWidthScales, rng));
  }
  if (!flag.fine && !stem) {
    b.num_layers = std::max(1, b.num_layers + detail::pick(kDepthDeltas, rng));
    if (b.type == BlockType::MobileBlock) {
      b.expansion = detail::pick(kExpansionChoices, rng);
    }
  }

  if (index + 1 < out.blocks.size()) {
    out.blocks[index + 1].in_channels = b.out_channels;
  }
  detail::split_deep_blocks(out.blocks);
  return out;
}

}  // namespace entronas
