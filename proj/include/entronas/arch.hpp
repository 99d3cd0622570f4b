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
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace entronas {

inline constexpr int kNumStages = 5;
inline constexpr int kMaxLayersPerBlock = 10;

/// Block families of the search space.
///
///  - Conv:        plain k x k convolution + ReLU, repeated `num_layers` times.
///  - ResBlock:    each layer is two stacked bottleneck units
///                 (1x1 reduce -> k x k -> 1x1 expand, residual add).
///  - Bottleneck:  each layer is a single bottleneck unit (ResNet convention).
///  - MobileBlock: inverted bottleneck (1x1 expand -> depthwise k x k -> 1x1 project).
enum class BlockType : std::uint8_t { Conv, ResBlock, Bottleneck, MobileBlock };

inline constexpr std::array<BlockType, 4> kAllBlockTypes = {
    BlockType::Conv, BlockType::ResBlock, BlockType::Bottleneck, BlockType::MobileBlock};

constexpr std::string_view to_string(BlockType type) noexcept {
  switch (type) {
    case BlockType::Conv: return "Conv";
    case BlockType::ResBlock: return "ResBlock";
    case BlockType::Bottleneck: return "Bottleneck";
    case BlockType::MobileBlock: return "MobileBlock";
  }
  return "?";
}

inline std::optional<BlockType> block_type_from_string(std::string_view name) noexcept {
  for (BlockType type : kAllBlockTypes) {
    if (to_string(type) == name) {
      return type;
    }
  }
  return std::nullopt;
}

/// Residual units a single layer of `type` expands into (0 for plain convs).
constexpr int units_per_layer(BlockType type) noexcept {
  switch (type) {
    case BlockType::Conv: return 0;
    case BlockType::ResBlock: return 2;
    case BlockType::Bottleneck: return 1;
    case BlockType::MobileBlock: return 1;
  }
  return 0;
}

/// One row of an architecture table; the unit the mutation operator edits.
struct BlockSpec {
  BlockType type = BlockType::Conv;
  int kernel = 3;
  int in_channels = 0;
  int out_channels = 0;
  int bottleneck_channels = 0;  // hidden width; 0 for Conv
  int stride = 1;
  int num_layers = 1;
  int expansion = 0;  // MobileBlock only, one of {1, 3, 6}

  friend bool operator==(const BlockSpec&, const BlockSpec&) = default;

  /// Convolution layers on the main path (projection shortcuts excluded).
  int depth() const noexcept {
    return type == BlockType::Conv ? num_layers : 3 * units_per_layer(type) * num_layers;
  }
};

struct ArchitectureSpec {
  std::vector<BlockSpec> blocks;

  friend bool operator==(const ArchitectureSpec&, const ArchitectureSpec&) = default;

  int depth() const noexcept {
    int total = 0;
    for (const auto& block : blocks) {
      total += block.depth();
    }
    return total;
  }

  int input_channels() const noexcept {
    return blocks.empty() ? 0 : blocks.front().in_channels;
  }
};

/// Stage index (1..5) of every block: the number of stride-2 blocks seen so far,
/// counting the block itself. Blocks ahead of the first downsample get 0.
inline std::vector<int> stage_of_blocks(const ArchitectureSpec& arch) {
  std::vector<int> stages;
  stages.reserve(arch.blocks.size());
  int stage = 0;
  for (const auto& block : arch.blocks) {
    if (block.stride == 2) {
      ++stage;
    }
    stages.push_back(stage);
  }
  return stages;
}

/// Nearest multiple of 8, never below 8.
inline int round_channels(double channels) noexcept {
  const long rounded = std::lround(channels / 8.0) * 8;
  return rounded < 8 ? 8 : static_cast<int>(rounded);
}

struct ValidationResult {
  bool ok = true;
  std::optional<std::size_t> block_index;
  std::string message;

  explicit operator bool() const noexcept { return ok; }

  static ValidationResult success() { return {}; }
  static ValidationResult failure(std::optional<std::size_t> index, std::string msg) {
    return {false, index, std::move(msg)};
  }
};

class InvalidArchitecture : public std::invalid_argument {
 public:
  explicit InvalidArchitecture(const ValidationResult& result)
      : std::invalid_argument(describe(result)), result_(result) {}

  const ValidationResult& result() const noexcept { return result_; }

  static std::string describe(const ValidationResult& result) {
    if (result.block_index) {
      return "block " + std::to_string(*result.block_index) + ": " + result.message;
    }
    return result.message;
  }

 private:
  ValidationResult result_;
};

namespace detail {

inline ValidationResult check_block(const BlockSpec& b, std::size_t index) {
  auto fail = [index](std::string msg) { return ValidationResult::failure(index, std::move(msg)); };
  if (b.kernel != 3 && b.kernel != 5) {
    return fail("kernel not in {3,5} (got " + std::to_string(b.kernel) + ")");
  }
  if (b.stride != 1 && b.stride != 2) {
    return fail("stride not in {1,2} (got " + std::to_string(b.stride) + ")");
  }
  if (b.num_layers < 1) {
    return fail("num_layers must be >= 1");
  }
  if (b.num_layers > kMaxLayersPerBlock) {
    return fail("num_layers exceeds " + std::to_string(kMaxLayersPerBlock));
  }
  if (b.in_channels <= 0 || b.out_channels <= 0) {
    return fail("channel counts must be positive");
  }
  // The network input (e.g. RGB) is the only channel count exempt from the x8 rule.
  if (index > 0 && b.in_channels % 8 != 0) {
    return fail("in channels not a multiple of 8");
  }
  if (b.out_channels % 8 != 0) {
    return fail("out channels not a multiple of 8");
  }
  if (b.type == BlockType::Conv) {
    if (b.bottleneck_channels != 0) {
      return fail("Conv block must have bottleneck 0");
    }
  } else if (b.bottleneck_channels <= 0) {
    // Hidden widths only need to be positive: published tables use e.g. 220.
    // Mutation still rounds them to multiples of 8.
    return fail("bottleneck channels must be positive");
  }
  if (b.type == BlockType::MobileBlock) {
    if (b.expansion != 1 && b.expansion != 3 && b.expansion != 6) {
      return fail("expansion not in {1,3,6}");
    }
  } else if (b.expansion != 0) {
    return fail("expansion is only meaningful for MobileBlock");
  }
  return ValidationResult::success();
}

}  // namespace detail

/// Per-block ranges and channel continuity. Enough for cost counting, which
/// also accepts partial backbones such as a lone stem.
inline ValidationResult validate_blocks(const ArchitectureSpec& arch) {
  if (arch.blocks.empty()) {
    return ValidationResult::failure(std::nullopt, "architecture has no blocks");
  }
  for (std::size_t i = 0; i < arch.blocks.size(); ++i) {
    if (auto r = detail::check_block(arch.blocks[i], i); !r) {
      return r;
    }
    if (i > 0 && arch.blocks[i].in_channels != arch.blocks[i - 1].out_channels) {
      return ValidationResult::failure(
          i, "channel mismatch: in " + std::to_string(arch.blocks[i].in_channels) +
                 " != previous out " + std::to_string(arch.blocks[i - 1].out_channels));
    }
  }
  return ValidationResult::success();
}

/// Full backbone check: validate_blocks plus exactly five stride-2 stages with
/// the first block opening stage C1.
inline ValidationResult validate(const ArchitectureSpec& arch) {
  if (auto r = validate_blocks(arch); !r) {
    return r;
  }
  if (arch.blocks.front().stride != 2) {
    return ValidationResult::failure(0, "first block must downsample (stride 2)");
  }
  int stages = 0;
  for (const auto& block : arch.blocks) {
    stages += block.stride == 2 ? 1 : 0;
  }
  if (stages != kNumStages) {
    return ValidationResult::failure(
        std::nullopt, "stage count != 5 (found " + std::to_string(stages) + ")");
  }
  return ValidationResult::success();
}

inline void require_valid(const ArchitectureSpec& arch) {
  if (auto r = validate(arch); !r) {
    throw InvalidArchitecture(r);
  }
}

inline void require_valid_blocks(const ArchitectureSpec& arch) {
  if (auto r = validate_blocks(arch); !r) {
    throw InvalidArchitecture(r);
  }
}

/// FNV-1a over every structural field. Stable across platforms and runs.
inline std::uint64_t structural_hash(const ArchitectureSpec& arch) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  auto feed = [&h](std::uint64_t value) {
    for (int byte = 0; byte < 8; ++byte) {
      h ^= (value >> (8 * byte)) & 0xFFU;
      h *= 0x100000001B3ULL;
    }
  };
  feed(arch.blocks.size());
  for (const auto& b : arch.blocks) {
    feed(static_cast<std::uint64_t>(b.type));
    feed(static_cast<std::uint64_t>(b.kernel));
    feed(static_cast<std::uint64_t>(b.in_channels));
    feed(static_cast<std::uint64_t>(b.out_channels));
    feed(static_cast<std::uint64_t>(b.bottleneck_channels));
    feed(static_cast<std::uint64_t>(b.stride));
    feed(static_cast<std::uint64_t>(b.num_layers));
    feed(static_cast<std::uint64_t>(b.expansion));
  }
  return h;
}

}  // namespace entronas
