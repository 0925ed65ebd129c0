// Copyright 2026 The DriveBench Authors. All Rights Reserved.
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

// Counter-based random numbers. Every draw is a pure function of
// (key, counter, lane), so results never depend on evaluation order,
// thread count or the standard library's engine implementations.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace drivebench {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) noexcept {
  return mix64(a ^ (mix64(b) + 0x632be59bd9b4e019ULL + (a << 6) + (a >> 2)));
}

/// 64-bit FNV-1a; used for string keys and corpus fingerprints.
constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class CounterRng {
 public:
  constexpr explicit CounterRng(std::uint64_t key) noexcept : key_(mix64(key)) {}

  constexpr std::uint64_t key() const noexcept { return key_; }

  /// Child generator for an independent stream.
  constexpr CounterRng derive(std::uint64_t tag) const noexcept {
    return CounterRng(hash_combine(key_, tag));
  }
  constexpr CounterRng derive(std::string_view tag) const noexcept {
    return derive(fnv1a64(tag));
  }

  constexpr std::uint64_t bits(std::uint64_t counter, std::uint64_t lane = 0) const noexcept {
    return mix64(hash_combine(key_, counter) ^ (lane * 0xd6e8feb86659fd93ULL));
  }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform(std::uint64_t counter, std::uint64_t lane = 0) const noexcept {
    return static_cast<double>(bits(counter, lane) >> 11) * 0x1.0p-53;
  }

  /// Uniform integer on [0, n). n must be positive.
  std::uint64_t below(std::uint64_t counter, std::uint64_t lane, std::uint64_t n) const noexcept {
    const unsigned __int128 wide = static_cast<unsigned __int128>(bits(counter, lane)) * n;
    return static_cast<std::uint64_t>(wide >> 64);
  }

  /// Standard normal via Box-Muller; consumes lanes 2*lane and 2*lane+1.
  double gaussian(std::uint64_t counter, std::uint64_t lane = 0) const noexcept {
    const double u1 = (static_cast<double>(bits(counter, 2 * lane) >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = uniform(counter, 2 * lane + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t key_;
};

/// Sequential view over a CounterRng for algorithms that draw a variable
/// number of values.
class RngStream {
 public:
  explicit RngStream(CounterRng rng) noexcept : rng_(rng) {}

  std::uint64_t next_bits() noexcept { return rng_.bits(counter_++); }
  double next_uniform() noexcept { return rng_.uniform(counter_++); }
  std::uint64_t next_below(std::uint64_t n) noexcept { return rng_.below(counter_++, 0, n); }
  std::uint64_t draws() const noexcept { return counter_; }

 private:
  CounterRng rng_;
  std::uint64_t counter_ = 0;
};

}  // namespace drivebench
