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

// Shared fixtures for the test suites: repository paths, small hand-written
// architectures and a generator of random valid backbones.

#include <filesystem>
#include <string>
#include <vector>

#include "entronas/arch.hpp"
#include "entronas/rng.hpp"

namespace entronas::testing {

inline std::filesystem::path source_path(const std::string& relative) {
  return std::filesystem::path(ENTRONAS_SOURCE_DIR) / relative;
}

inline BlockSpec conv(int in, int out, int stride, int kernel = 3, int layers = 1) {
  return {BlockType::Conv, kernel, in, out, 0, stride, layers, 0};
}

inline BlockSpec res(int in, int out, int mid, int stride, int kernel = 3, int layers = 1) {
  return {BlockType::ResBlock, kernel, in, out, mid, stride, layers, 0};
}

inline BlockSpec bottleneck(int in, int out, int mid, int stride, int kernel = 3, int layers = 1) {
  return {BlockType::Bottleneck, kernel, in, out, mid, stride, layers, 0};
}

inline BlockSpec mobile(int in, int out, int expansion, int stride, int kernel = 3,
                        int layers = 1) {
  return {BlockType::MobileBlock, kernel, in, out, round_channels(in * expansion), stride, layers,
          expansion};
}

/// A 5-stage net small enough to score in a few milliseconds at 32x32.
inline ArchitectureSpec tiny_arch() {
  return {{conv(3, 16, 2), res(16, 32, 8, 2), res(32, 64, 16, 2), res(64, 64, 16, 2),
           res(64, 128, 32, 2)}};
}

struct GeneratorOptions {
  int max_width = 256;
  int max_layers = kMaxLayersPerBlock;
  int max_extra_blocks = 3;
  bool all_types = true;
};

/// Random valid 5-stage backbone: a Conv stem, four stride-2 blocks and a few
/// stride-1 blocks scattered after them. Every block type can appear.
inline ArchitectureSpec random_arch(SeededRng& rng, const GeneratorOptions& opt = {}) {
  auto width = [&] { return 8 * static_cast<int>(1 + rng.uniform_index(opt.max_width / 8)); };
  auto kernel = [&] { return rng.uniform_index(2) == 0 ? 3 : 5; };
  auto layers = [&] { return 1 + static_cast<int>(rng.uniform_index(opt.max_layers)); };

  ArchitectureSpec arch;
  int channels = width();
  arch.blocks.push_back(conv(3, channels, 2, kernel(), 1 + static_cast<int>(rng.uniform_index(2))));
  std::vector<int> strides{2, 2, 2, 2};
  const int extra = static_cast<int>(rng.uniform_index(opt.max_extra_blocks + 1));
  for (int i = 0; i < extra; ++i) {
    strides.insert(strides.begin() + 1 + static_cast<std::ptrdiff_t>(rng.uniform_index(strides.size())),
                   1);
  }
  for (int stride : strides) {
    const int out = width();
    const auto pick = opt.all_types ? rng.uniform_index(4) : 1;
    BlockSpec b;
    switch (pick) {
      case 0: b = conv(channels, out, stride, kernel(), layers()); break;
      case 1: b = res(channels, out, width(), stride, kernel(), layers()); break;
      case 2: b = bottleneck(channels, out, width(), stride, kernel(), layers()); break;
      default: {
        static constexpr int kExp[] = {1, 3, 6};
        b = mobile(channels, out, kExp[rng.uniform_index(3)], stride, kernel(), layers());
        break;
      }
    }
    arch.blocks.push_back(b);
    channels = out;
  }
  return arch;
}

}  // namespace entronas::testing
