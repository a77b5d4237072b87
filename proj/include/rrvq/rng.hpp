// Copyright 2026 The rrvq Authors
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
#include <initializer_list>
#include <random>
#include <string_view>

namespace rrvq {

/// Seedable generator with keyed stream derivation.
///
/// A stream is identified by (seed, key...). The key words are folded into a
/// single 64-bit state with SplitMix64 finalizers, which then seeds a
/// std::mt19937_64 engine. Bounded integers use Lemire's multiply-shift with
/// rejection and normals use the Marsaglia polar method, so every draw is
/// fully specified by this file and independent of the standard library's
/// distribution implementations.
class Rng {
 public:
  static constexpr std::string_view kAlgorithm =
      "mt19937_64+splitmix64-keyed-streams/lemire-bounded/polar-normal";

  explicit Rng(std::uint64_t seed);
  Rng(std::uint64_t seed, std::initializer_list<std::uint64_t> key);

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_below(std::uint64_t n);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double normal();

  static std::uint64_t derive(std::uint64_t seed,
                              std::initializer_list<std::uint64_t> key);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stream tags. Every consumer of randomness owns one so that adding a new
// consumer never perturbs existing streams.
namespace stream {
inline constexpr std::uint64_t kBigCodebook = 0x10;
inline constexpr std::uint64_t kTrainableInit = 0x11;
inline constexpr std::uint64_t kProjection = 0x12;
inline constexpr std::uint64_t kFrameSampling = 0x20;
inline constexpr std::uint64_t kBatchSampling = 0x21;
inline constexpr std::uint64_t kFixedSampling = 0x22;
inline constexpr std::uint64_t kFitInit = 0x30;
inline constexpr std::uint64_t kFitShuffle = 0x31;
inline constexpr std::uint64_t kGainSampling = 0x32;
inline constexpr std::uint64_t kGainSubset = 0x33;
inline constexpr std::uint64_t kTrainData = 0x40;
inline constexpr std::uint64_t kEvalData = 0x41;
inline constexpr std::uint64_t kNoise = 0x42;
inline constexpr std::uint64_t kLabels = 0x43;
inline constexpr std::uint64_t kDirection = 0x44;
}  // namespace stream

}  // namespace rrvq
