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
#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "entronas/rng.hpp"

namespace entronas {

/// Dense single-sample activation tensor, row-major [channel][row][column].
struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;

  FeatureMap() = default;
  FeatureMap(int c, int h, int w, float fill = 0.0F)
      : channels(c), height(h), width(w),
        data(static_cast<std::size_t>(c) * static_cast<std::size_t>(h) * static_cast<std::size_t>(w),
             fill) {}

  std::size_t numel() const noexcept { return data.size(); }
  std::size_t plane() const noexcept {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }

  float& at(int c, int y, int x) noexcept {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  float at(int c, int y, int x) const noexcept {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }

  std::span<const float> channel(int c) const noexcept {
    return {data.data() + static_cast<std::size_t>(c) * plane(), plane()};
  }
};

/// Convolution kernel, row-major [out][in][ky][kx]. Depthwise kernels store
/// one k x k filter per channel ([channel][ky][kx]). No bias term.
struct ConvWeights {
  int out_channels = 0;
  int in_channels = 0;
  int kernel = 1;
  bool depthwise = false;
  std::vector<float> data;

  std::size_t row_size() const noexcept {
    return depthwise ? static_cast<std::size_t>(kernel) * kernel
                     : static_cast<std::size_t>(in_channels) * kernel * kernel;
  }

  static ConvWeights zeros(int out, int in, int k) {
    return {out, in, k, false, std::vector<float>(static_cast<std::size_t>(out) * in * k * k, 0.0F)};
  }

  static ConvWeights depthwise_zeros(int channels, int k) {
    return {channels, channels, k, true,
            std::vector<float>(static_cast<std::size_t>(channels) * k * k, 0.0F)};
  }

  /// i.i.d. N(0, 1) entries drawn in storage order.
  static ConvWeights gaussian(int out, int in, int k, SeededRng& rng) {
    auto w = zeros(out, in, k);
    rng.fill_normal(w.data);
    return w;
  }

  static ConvWeights depthwise_gaussian(int channels, int k, SeededRng& rng) {
    auto w = depthwise_zeros(channels, k);
    rng.fill_normal(w.data);
    return w;
  }
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Output extent of a "same"-padded convolution: ceil(in / stride).
constexpr int conv_output_size(int in, int stride) noexcept {
  return (in + stride - 1) / stride;
}

namespace detail {

// Reduction order for every dot product: element i accumulates into lane
// i % 4 in increasing i, then lanes combine as (l0 + l2) + (l1 + l3). The
// order depends only on the row length, never on how outputs are tiled.
#if defined(__GNUC__)
using f32x4 = float __attribute__((vector_size(16)));

inline f32x4 load4(const float* p) noexcept {
  f32x4 v;
  std::memcpy(&v, p, sizeof(v));
  return v;
}

inline float reduce_lanes(f32x4 a) noexcept { return (a[0] + a[2]) + (a[1] + a[3]); }

// out[r * out_stride + q] = dot(w + r * row, c + q * row) for an R x Q tile.
template <int R, int Q>
inline void dot_tile(const float* w, const float* c, std::size_t row, float* out,
                     std::size_t out_stride) noexcept {
  f32x4 acc[R][Q] = {};
  std::size_t i = 0;
  for (; i + 4 <= row; i += 4) {
    f32x4 cv[Q];
    for (int q = 0; q < Q; ++q) {
      cv[q] = load4(c + q * row + i);
    }
    for (int r = 0; r < R; ++r) {
      const f32x4 wv = load4(w + r * row + i);
      for (int q = 0; q < Q; ++q) {
        acc[r][q] += wv * cv[q];
      }
    }
  }
  for (std::size_t j = 0; i + j < row; ++j) {
    for (int r = 0; r < R; ++r) {
      for (int q = 0; q < Q; ++q) {
        acc[r][q][j] += w[r * row + i + j] * c[q * row + i + j];
      }
    }
  }
  for (int r = 0; r < R; ++r) {
    for (int q = 0; q < Q; ++q) {
      out[r * out_stride + q] = reduce_lanes(acc[r][q]);
    }
  }
}
#else
template <int R, int Q>
inline void dot_tile(const float* w, const float* c, std::size_t row, float* out,
                     std::size_t out_stride) noexcept {
  for (int r = 0; r < R; ++r) {
    for (int q = 0; q < Q; ++q) {
      float lanes[4] = {};
      for (std::size_t i = 0; i < row; ++i) {
        lanes[i % 4] += w[r * row + i] * c[q * row + i];
      }
      out[r * out_stride + q] = (lanes[0] + lanes[2]) + (lanes[1] + lanes[3]);
    }
  }
}
#endif

inline constexpr std::size_t kPositionTile = 64;

// Receptive fields of output positions [p0, p0 + count), laid out
// [position][ci][ky][kx] with zeros outside the image.
inline void gather_columns(const FeatureMap& x, int k, int stride, int ow, std::size_t p0,
                           std::size_t count, float* dst) {
  const int pad = k / 2;
  for (std::size_t t = 0; t < count; ++t) {
    const int oy = static_cast<int>((p0 + t) / ow);
    const int ox = static_cast<int>((p0 + t) % ow);
    for (int ci = 0; ci < x.channels; ++ci) {
      for (int ky = 0; ky < k; ++ky) {
        const int iy = oy * stride + ky - pad;
        for (int kx = 0; kx < k; ++kx) {
          const int ix = ox * stride + kx - pad;
          const bool inside = iy >= 0 && iy < x.height && ix >= 0 && ix < x.width;
          *dst++ = inside ? x.at(ci, iy, ix) : 0.0F;
        }
      }
    }
  }
}

}  // namespace detail

/// Dense 2-D cross-correlation, zero "same" padding of kernel/2 on each side,
/// output extent ceil(in / stride). Columns are gathered in tiles of 64 output
/// positions; each output is one fixed-order dot product (see reduce_lanes).
inline FeatureMap conv2d(const FeatureMap& x, const ConvWeights& w, int stride) {
  if (w.depthwise) {
    throw ShapeError("conv2d: depthwise weights passed to dense convolution");
  }
  if (x.channels != w.in_channels) {
    throw ShapeError("conv2d: input has " + std::to_string(x.channels) +
                     " channels, weights expect " + std::to_string(w.in_channels));
  }
  if (w.kernel % 2 == 0 || w.kernel < 1) {
    throw ShapeError("conv2d: kernel must be odd");
  }
  if (stride < 1) {
    throw ShapeError("conv2d: stride must be positive");
  }
  const int k = w.kernel;
  const int oh = conv_output_size(x.height, stride);
  const int ow = conv_output_size(x.width, stride);
  FeatureMap out(w.out_channels, oh, ow);

  const std::size_t row = w.row_size();
  const std::size_t positions = static_cast<std::size_t>(oh) * ow;
  thread_local std::vector<float> col;
  col.resize(detail::kPositionTile * row);

  for (std::size_t p0 = 0; p0 < positions; p0 += detail::kPositionTile) {
    const std::size_t tile = std::min(detail::kPositionTile, positions - p0);
    detail::gather_columns(x, k, stride, ow, p0, tile, col.data());
    float* base = out.data.data() + p0;
    int co = 0;
    for (; co + 4 <= w.out_channels; co += 4) {
      const float* wr = w.data.data() + static_cast<std::size_t>(co) * row;
      float* dst = base + static_cast<std::size_t>(co) * positions;
      std::size_t t = 0;
      for (; t + 2 <= tile; t += 2) {
        detail::dot_tile<4, 2>(wr, col.data() + t * row, row, dst + t, positions);
      }
      for (; t < tile; ++t) {
        detail::dot_tile<4, 1>(wr, col.data() + t * row, row, dst + t, positions);
      }
    }
    for (; co < w.out_channels; ++co) {
      const float* wr = w.data.data() + static_cast<std::size_t>(co) * row;
      float* dst = base + static_cast<std::size_t>(co) * positions;
      for (std::size_t t = 0; t < tile; ++t) {
        detail::dot_tile<1, 1>(wr, col.data() + t * row, row, dst + t, positions);
      }
    }
  }
  return out;
}

/// Per-channel k x k convolution with the same padding rule as conv2d.
inline FeatureMap depthwise_conv2d(const FeatureMap& x, const ConvWeights& w, int stride) {
  if (!w.depthwise) {
    throw ShapeError("depthwise_conv2d: dense weights passed");
  }
  if (x.channels != w.in_channels) {
    throw ShapeError("depthwise_conv2d: channel mismatch");
  }
  const int k = w.kernel;
  const int pad = k / 2;
  const int oh = conv_output_size(x.height, stride);
  const int ow = conv_output_size(x.width, stride);
  FeatureMap out(x.channels, oh, ow);
  for (int c = 0; c < x.channels; ++c) {
    const float* filter = w.data.data() + static_cast<std::size_t>(c) * k * k;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        float acc = 0.0F;
        for (int ky = 0; ky < k; ++ky) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= x.height) {
            continue;
          }
          for (int kx = 0; kx < k; ++kx) {
            const int ix = ox * stride + kx - pad;
            if (ix >= 0 && ix < x.width) {
              acc += filter[ky * k + kx] * x.at(c, iy, ix);
            }
          }
        }
        out.at(c, oy, ox) = acc;
      }
    }
  }
  return out;
}

inline void relu_inplace(FeatureMap& x) noexcept {
  for (auto& v : x.data) {
    v = v > 0.0F ? v : 0.0F;
  }
}

inline FeatureMap relu(FeatureMap x) noexcept {
  relu_inplace(x);
  return x;
}

inline void add_inplace(FeatureMap& acc, const FeatureMap& other) {
  if (acc.channels != other.channels || acc.height != other.height || acc.width != other.width) {
    throw ShapeError("add: shape mismatch");
  }
  for (std::size_t i = 0; i < acc.data.size(); ++i) {
    acc.data[i] += other.data[i];
  }
}

inline void scale_inplace(FeatureMap& x, double factor) noexcept {
  const auto f = static_cast<float>(factor);
  for (auto& v : x.data) {
    v *= f;
  }
}

inline bool all_finite(const FeatureMap& x) noexcept {
  return std::all_of(x.data.begin(), x.data.end(), [](float v) { return std::isfinite(v); });
}

inline double mean(const FeatureMap& x) noexcept {
  double sum = 0.0;
  for (float v : x.data) {
    sum += v;
  }
  return x.data.empty() ? 0.0 : sum / static_cast<double>(x.data.size());
}

/// Biased (population) variance over every element, two-pass in double.
inline double variance(const FeatureMap& x) noexcept {
  if (x.data.empty()) {
    return 0.0;
  }
  const double mu = mean(x);
  double ss = 0.0;
  for (float v : x.data) {
    const double d = v - mu;
    ss += d * d;
  }
  return ss / static_cast<double>(x.data.size());
}

inline double l2_norm(const FeatureMap& x) noexcept {
  double ss = 0.0;
  for (float v : x.data) {
    ss += static_cast<double>(v) * v;
  }
  return std::sqrt(ss);
}

inline double rms(const FeatureMap& x) noexcept {
  return x.data.empty() ? 0.0 : l2_norm(x) / std::sqrt(static_cast<double>(x.data.size()));
}

}  // namespace entronas
