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

// Sampling the output of a Gaussian-initialized convolution without drawing
// its weights.
//
// With W of shape [out][row] filled with i.i.d. N(0, 1) entries and C the
// [P][row] matrix of receptive fields, each output channel h = C w is an
// independent N(0, G) vector with G = C C^T. Drawing z ~ N(0, I_P) per
// channel and setting h = L z, L L^T = G, produces exactly that law while
// touching P instead of row random numbers per channel. When P is small next
// to row (deep, low-resolution stages) this is far cheaper than conv2d.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "entronas/rng.hpp"
#include "entronas/tensor.hpp"

namespace entronas {

/// Dense k x k convolution sampling policy for Gaussian weights.
enum class ConvSampling : std::uint8_t {
  Auto,      // marginal whenever its estimated cost is lower
  Explicit,  // always draw the weight tensor and run conv2d
  Marginal,  // always sample outputs through the Gram factor
};

namespace detail {

inline constexpr std::size_t kMaxMarginalPositions = 1024;
// A normal draw costs roughly this many multiply-accumulates.
inline constexpr double kNormalCostInMacs = 16.0;

/// Lower Cholesky factor of a PSD matrix (row-major, n x n). Pivots at or
/// below `rel_tol * max diagonal` are treated as exact zeros, which is correct
/// for the rank-deficient Gram matrices that zero padding and ReLU produce.
inline std::vector<double> psd_cholesky(const std::vector<double>& g, std::size_t n,
                                        double rel_tol = 1e-10) {
  std::vector<double> l(n * n, 0.0);
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    max_diag = std::max(max_diag, g[i * n + i]);
  }
  const double tol = rel_tol * max_diag;
  for (std::size_t j = 0; j < n; ++j) {
    double d = g[j * n + j];
    for (std::size_t m = 0; m < j; ++m) {
      d -= l[j * n + m] * l[j * n + m];
    }
    if (!(d > tol)) {
      continue;  // column stays zero
    }
    const double root = std::sqrt(d);
    l[j * n + j] = root;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = g[i * n + j];
      for (std::size_t m = 0; m < j; ++m) {
        v -= l[i * n + m] * l[j * n + m];
      }
      l[i * n + j] = v / root;
    }
  }
  return l;
}

// Four-lane double accumulation; lane i % 4, combined (l0 + l2) + (l1 + l3).
inline double dot_double(const float* a, const float* b, std::size_t n) noexcept {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (std::size_t q = 0; q < 4; ++q) {
      lane[q] += static_cast<double>(a[i + q]) * static_cast<double>(b[i + q]);
    }
  }
  for (std::size_t q = 0; i < n; ++i, ++q) {
    lane[q] += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return (lane[0] + lane[2]) + (lane[1] + lane[3]);
}

}  // namespace detail

/// Estimated cost ratio decision used by ConvSampling::Auto.
inline bool prefer_marginal(std::size_t positions, std::size_t row, std::size_t out) {
  if (positions > detail::kMaxMarginalPositions) {
    return false;
  }
  const double p = static_cast<double>(positions);
  const double r = static_cast<double>(row);
  const double o = static_cast<double>(out);
  const double direct = o * r * p + detail::kNormalCostInMacs * o * r;
  const double marginal =
      p * p * r + p * p * p / 3.0 + o * p * p / 2.0 + detail::kNormalCostInMacs * o * p;
  return marginal < direct;
}

/// Same law as conv2d(x, W, stride) with W ~ i.i.d. N(0, 1) of shape
/// [out_channels][x.channels][k][k]. Draws out_channels * P normals.
inline FeatureMap sample_gaussian_conv2d(const FeatureMap& x, int out_channels, int k, int stride,
                                         SeededRng& rng) {
  if (k % 2 == 0 || k < 1 || stride < 1 || out_channels < 1) {
    throw ShapeError("sample_gaussian_conv2d: bad kernel, stride or width");
  }
  const int oh = conv_output_size(x.height, stride);
  const int ow = conv_output_size(x.width, stride);
  const auto n = static_cast<std::size_t>(oh) * ow;
  const std::size_t row = static_cast<std::size_t>(x.channels) * k * k;

  std::vector<float> cols(n * row);
  detail::gather_columns(x, k, stride, ow, 0, n, cols.data());

  // Gram matrix in double (lower triangle, mirrored). Products of floats are
  // exact in double, so only the fixed-order sums round.
  std::vector<double> gram(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double dot = detail::dot_double(cols.data() + i * row, cols.data() + j * row, row);
      gram[i * n + j] = dot;
      gram[j * n + i] = dot;
    }
  }
  const double tol = 4.0 * static_cast<double>(row) * std::numeric_limits<double>::epsilon();
  const std::vector<double> l = detail::psd_cholesky(gram, n, tol);

  FeatureMap out(out_channels, oh, ow);
  std::vector<float> z(static_cast<std::size_t>(out_channels) * n);
  rng.fill_normal(z);
  for (int co = 0; co < out_channels; ++co) {
    const float* zc = z.data() + static_cast<std::size_t>(co) * n;
    float* h = out.data.data() + static_cast<std::size_t>(co) * n;
    for (std::size_t p = 0; p < n; ++p) {
      double acc = 0.0;
      for (std::size_t j = 0; j <= p; ++j) {
        acc += l[p * n + j] * zc[j];
      }
      h[p] = static_cast<float>(acc);
    }
  }
  return out;
}

}  // namespace entronas
