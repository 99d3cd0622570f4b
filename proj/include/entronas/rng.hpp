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
#include <limits>
#include <span>

namespace entronas {

/// SplitMix64 finalizer. Used to expand (seed, stream) pairs into generator state.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t mix64(std::uint64_t value) noexcept {
  return splitmix64(value);
}

namespace detail {

// Marsaglia-Tsang ziggurat tables, 128 layers, 32-bit magnitudes.
struct ZigguratTables {
  std::array<std::uint32_t, 128> kn{};
  std::array<double, 128> wn{};
  std::array<double, 128> fn{};

  ZigguratTables() {
    constexpr double m1 = 2147483648.0;
    double dn = 3.442619855899;
    double tn = dn;
    constexpr double vn = 9.91256303526217e-3;
    const double q = vn / std::exp(-0.5 * dn * dn);
    kn[0] = static_cast<std::uint32_t>((dn / q) * m1);
    kn[1] = 0;
    wn[0] = q / m1;
    wn[127] = dn / m1;
    fn[0] = 1.0;
    fn[127] = std::exp(-0.5 * dn * dn);
    for (int i = 126; i >= 1; --i) {
      dn = std::sqrt(-2.0 * std::log(vn / dn + std::exp(-0.5 * dn * dn)));
      kn[i + 1] = static_cast<std::uint32_t>((dn / tn) * m1);
      tn = dn;
      fn[i] = std::exp(-0.5 * dn * dn);
      wn[i] = dn / m1;
    }
  }
};

inline const ZigguratTables& ziggurat_tables() {
  static const ZigguratTables tables;
  return tables;
}

}  // namespace detail

/// Counter-free xoshiro256** generator keyed by a (seed, stream) pair.
///
/// Every draw is produced with integer arithmetic and a fixed sequence of
/// IEEE-754 operations, so a given (seed, stream) yields the same sequence
/// on any platform with the same libm. Distinct streams under one seed are
/// used to give each scored candidate its own reproducible randomness.
class SeededRng {
 public:
  using result_type = std::uint64_t;

  explicit SeededRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : seed_(seed), stream_(stream) {
    std::uint64_t mixer = mix64(seed) ^ mix64(stream ^ 0xD1B54A32D192ED03ULL);
    for (auto& word : state_) {
      word = splitmix64(mixer);
    }
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept { return next_u64(); }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 bits of resolution.
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n). Rejection sampling keeps it unbiased.
  std::uint64_t uniform_index(std::uint64_t n) noexcept {
    if (n <= 1) {
      return 0;
    }
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t draw = next_u64();
    while (draw >= limit) {
      draw = next_u64();
    }
    return draw % n;
  }

  /// Standard normal draw (ziggurat). The upper 32 bits of one draw give the
  /// signed magnitude; its low 7 bits select the layer.
  double normal() noexcept {
    const auto& tab = detail::ziggurat_tables();
    const auto hz = static_cast<std::int32_t>(static_cast<std::uint32_t>(next_u64() >> 32));
    const auto iz = static_cast<std::size_t>(hz & 127);
    if (magnitude(hz) < tab.kn[iz]) {
      return hz * tab.wn[iz];
    }
    return normal_tail(hz, iz);
  }

  /// Fills `out` with standard normals. Each 64-bit draw feeds two samples,
  /// upper half first, so the sequence differs from repeated normal().
  void fill_normal(std::span<float> out) noexcept {
    const auto& tab = detail::ziggurat_tables();
    const std::uint32_t* kn = tab.kn.data();
    const double* wn = tab.wn.data();
    float* dst = out.data();
    const std::size_t n = out.size();
    std::uint64_t s0 = state_[0], s1 = state_[1], s2 = state_[2], s3 = state_[3];
    std::size_t i = 0;
    while (i < n) {
      const std::uint64_t bits = rotl(s1 * 5, 7) * 9;
      const std::uint64_t t = s1 << 17;
      s2 ^= s0;
      s3 ^= s1;
      s1 ^= s2;
      s0 ^= s3;
      s2 ^= t;
      s3 = rotl(s3, 45);
      const auto hi = static_cast<std::int32_t>(static_cast<std::uint32_t>(bits >> 32));
      const auto lo = static_cast<std::int32_t>(static_cast<std::uint32_t>(bits));
      const std::size_t ihi = static_cast<std::uint32_t>(hi) & 127U;
      const std::size_t ilo = static_cast<std::uint32_t>(lo) & 127U;
      const bool fast_hi = magnitude(hi) < kn[ihi];
      const bool fast_lo = magnitude(lo) < kn[ilo];
      if (fast_hi && fast_lo && i + 1 < n) [[likely]] {
        dst[i] = static_cast<float>(hi * wn[ihi]);
        dst[i + 1] = static_cast<float>(lo * wn[ilo]);
        i += 2;
        continue;
      }
      // Rare path: either sample needs the tail, or only one slot is left.
      state_ = {s0, s1, s2, s3};
      dst[i] = static_cast<float>(fast_hi ? hi * wn[ihi] : normal_tail(hi, ihi));
      if (i + 1 < n) {
        dst[i + 1] = static_cast<float>(fast_lo ? lo * wn[ilo] : normal_tail(lo, ilo));
      }
      i += 2;
      s0 = state_[0], s1 = state_[1], s2 = state_[2], s3 = state_[3];
    }
    state_ = {s0, s1, s2, s3};
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  static std::uint32_t magnitude(std::int32_t v) noexcept {
    const auto wide = static_cast<std::int64_t>(v);
    return static_cast<std::uint32_t>(wide < 0 ? -wide : wide);
  }

  // Uniform in (0, 1), never zero, for log().
  double open_uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  [[gnu::noinline]] double normal_tail(std::int32_t hz, std::size_t iz) noexcept {
    const auto& tab = detail::ziggurat_tables();
    constexpr double r = 3.442620;
    for (;;) {
      double x = hz * tab.wn[iz];
      if (iz == 0) {
        double y = 0.0;
        do {
          x = -std::log(open_uniform()) / r;
          y = -std::log(open_uniform());
        } while (y + y < x * x);
        return hz > 0 ? r + x : -r - x;
      }
      if (tab.fn[iz] + open_uniform() * (tab.fn[iz - 1] - tab.fn[iz]) <
          std::exp(-0.5 * x * x)) {
        return x;
      }
      hz = static_cast<std::int32_t>(static_cast<std::uint32_t>(next_u64() >> 32));
      iz = static_cast<std::size_t>(hz & 127);
      if (magnitude(hz) < tab.kn[iz]) {
        return hz * tab.wn[iz];
      }
    }
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::array<std::uint64_t, 4> state_{};
};

}  // namespace entronas
