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

// Independent reference implementations used as oracles. They share no code
// with the library: the cost oracle expands every block into a flat list of
// convolution layers and tracks spatial size with the explicit padding
// formula floor((n + 2p - k) / s) + 1; the convolution oracle is the textbook
// six-deep loop accumulated in double precision.

#include <cstdint>
#include <vector>

#include "entronas/arch.hpp"
#include "entronas/tensor.hpp"

namespace entronas::oracle {

struct Layer {
  int in = 0;
  int out = 0;
  int kernel = 1;
  int stride = 1;
  bool depthwise = false;
  int in_h = 0;
  int in_w = 0;
};

inline int out_size(int n, int k, int s) { return (n + 2 * (k / 2) - k) / s + 1; }

inline std::vector<Layer> expand(const ArchitectureSpec& arch, int h, int w) {
  std::vector<Layer> layers;
  auto push = [&](int in, int out, int k, int s, bool dw, int ih, int iw) {
    layers.push_back({in, out, k, s, dw, ih, iw});
  };
  for (const auto& b : arch.blocks) {
    int repeats = b.num_layers;
    if (b.type == BlockType::ResBlock) repeats *= 2;
    for (int r = 0; r < repeats; ++r) {
      const int in = r == 0 ? b.in_channels : b.out_channels;
      const int s = r == 0 ? b.stride : 1;
      const int oh = out_size(h, b.kernel, s);
      const int ow = out_size(w, b.kernel, s);
      switch (b.type) {
        case BlockType::Conv:
          push(in, b.out_channels, b.kernel, s, false, h, w);
          break;
        case BlockType::ResBlock:
        case BlockType::Bottleneck: {
          const int mid = b.bottleneck_channels;
          push(in, mid, 1, 1, false, h, w);
          push(mid, mid, b.kernel, s, false, h, w);
          push(mid, b.out_channels, 1, 1, false, oh, ow);
          if (in != b.out_channels || s != 1) push(in, b.out_channels, 1, s, false, h, w);
          break;
        }
        case BlockType::MobileBlock: {
          const int hid = b.bottleneck_channels;
          push(in, hid, 1, 1, false, h, w);
          push(hid, hid, b.kernel, s, true, h, w);
          push(hid, b.out_channels, 1, 1, false, oh, ow);
          break;
        }
      }
      h = oh;
      w = ow;
    }
  }
  return layers;
}

struct Cost {
  std::int64_t params = 0;
  std::int64_t flops = 0;
};

inline Cost cost(const ArchitectureSpec& arch, int h, int w) {
  Cost c;
  for (const auto& l : expand(arch, h, w)) {
    const std::int64_t weights = l.depthwise
                                     ? std::int64_t{l.in} * l.kernel * l.kernel
                                     : std::int64_t{l.in} * l.out * l.kernel * l.kernel;
    // 1x1 layers with stride use the same formula; k/2 = 0 padding.
    const std::int64_t positions =
        std::int64_t{out_size(l.in_h, l.kernel, l.stride)} * out_size(l.in_w, l.kernel, l.stride);
    c.params += weights;
    c.flops += weights * positions;
  }
  return c;
}

/// Zero-padded cross-correlation, pad k/2, accumulated in double.
inline std::vector<double> conv(const FeatureMap& x, const ConvWeights& w, int stride) {
  const int k = w.kernel;
  const int p = k / 2;
  const int oh = out_size(x.height, k, stride);
  const int ow = out_size(x.width, k, stride);
  std::vector<double> y(static_cast<std::size_t>(w.out_channels) * oh * ow, 0.0);
  for (int co = 0; co < w.out_channels; ++co) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double acc = 0.0;
        const int ci_begin = w.depthwise ? co : 0;
        const int ci_end = w.depthwise ? co + 1 : x.channels;
        for (int ci = ci_begin; ci < ci_end; ++ci) {
          for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
              const int iy = oy * stride + ky - p;
              const int ix = ox * stride + kx - p;
              if (iy < 0 || iy >= x.height || ix < 0 || ix >= x.width) continue;
              const std::size_t widx =
                  w.depthwise
                      ? (static_cast<std::size_t>(co) * k + ky) * k + kx
                      : ((static_cast<std::size_t>(co) * w.in_channels + ci) * k + ky) * k + kx;
              acc += static_cast<double>(w.data[widx]) * x.at(ci, iy, ix);
            }
          }
        }
        y[(static_cast<std::size_t>(co) * oh + oy) * ow + ox] = acc;
      }
    }
  }
  return y;
}

}  // namespace entronas::oracle
