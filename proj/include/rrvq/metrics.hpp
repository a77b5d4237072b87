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

#include "rrvq/linalg.hpp"
#include "rrvq/quantizer.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace rrvq {

/// Exponentiated Shannon entropy of the empirical distribution n_i / sum n,
/// with 0 ln 0 = 0. Equals N for uniform usage and 1 for a single used code.
double perplexity(std::span<const std::uint64_t> counts);

struct UsageReport {
  std::vector<std::uint64_t> counts;
  double perplexity = 0.0;
  double ratio_to_max = 0.0;  // perplexity / codebook size
};

UsageReport usage_histogram(std::span<const std::uint32_t> tokens, std::size_t codebook_size);

/// Usage of one stage over a quantization result. Trainable stages count
/// codebook rows. Random stages count either positions inside the
/// sub-codebook (size s) or absolute big-codebook rows (size N_big).
enum class TokenConvention { kPosition, kAbsolute };

UsageReport stage_usage(const QuantizationResult& result, std::size_t stage,
                        std::size_t codebook_size, TokenConvention convention);

/// Absolute big-codebook usage pooled over every random stage.
UsageReport big_codebook_usage(const QuantizationResult& result, const QuantizerStack& stack);

/// Scale-invariant SDR in dB. +infinity when the error energy is below
/// 1e-24; -infinity when the estimate carries no energy at all.
double si_sdr(std::span<const double> estimate, std::span<const double> reference);

struct DistortionProfile {
  // energies[0] is the input energy; energies[k] the mean |residual|^2 after stage k.
  std::vector<double> energies;
  double final_mse = 0.0;  // energies.back() / D
  double si_sdr_db = 0.0;  // mean over frames of per-frame SI-SDR of the reconstruction
};

DistortionProfile distortion_profile(const Matrix& frames, const QuantizationResult& result);

}  // namespace rrvq
