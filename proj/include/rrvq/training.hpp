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

#include "rrvq/codebook.hpp"
#include "rrvq/linalg.hpp"
#include "rrvq/quantizer.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rrvq {

/// Exponential-moving-average k-means state for one codebook.
struct EmaState {
  Vector counts;  // EMA cluster sizes, one per codeword
  Matrix sums;    // EMA sums of assigned vectors, N x D
  double decay = 0.99;
  double epsilon = 1e-5;
};

/// Prior consistent with the current codewords: counts = 1, sums = codewords.
EmaState ema_init(const Codebook& cb, double decay = 0.99, double epsilon = 1e-5);

struct EmaStep {
  EmaState state;
  Codebook codebook;
};

/// counts <- decay * counts + (1 - decay) * batch_counts
/// sums   <- decay * sums   + (1 - decay) * batch_sums
/// codeword_i = sums_i / smoothed_i with Laplace smoothing
///   smoothed_i = (counts_i + eps) / (sum(counts) + N eps) * sum(counts).
/// Codes with no assignment keep decaying toward their prior value.
EmaStep ema_update(const EmaState& state, const Codebook& cb, const Matrix& batch,
                   std::span<const std::uint32_t> assignments);

struct FitOptions {
  std::size_t passes = 25;
  double decay = 0.99;
  double epsilon = 1e-5;
  std::size_t batch_size = 1024;
  // Re-seed each trainable codebook from its own residuals (k-means++)
  // before the EMA passes instead of keeping the Gaussian initialization.
  bool reinit = true;
  // Frames used to fit random-stage output gains, and alternation rounds
  // between selection and gain when selection depends on the gain.
  std::size_t gain_frames = 8192;
  std::size_t gain_iterations = 3;
};

struct FitReport {
  std::vector<std::string> warnings;
  // Mean squared residual norm on the training data after each trainable stage.
  std::vector<double> stage_energies;
  std::vector<double> gains;
};

/// Residual k-means over the cascade. Trainable stage i is fitted on the
/// residuals left by stages < i with `passes` epochs of mini-batch
/// assign-then-EMA-update, then frozen. Random stages keep their
/// sub-codebook sampling untouched; only their output gain is fitted by
/// least squares on the residuals they receive. The big codebook is shared,
/// never modified.
QuantizerStack fit_codebooks(const QuantizerStack& stack, const Matrix& data,
                             const FitOptions& options = {}, FitReport* report = nullptr);

struct StageLosses {
  std::vector<double> per_stage;  // mean over frames of |stage input - emitted|^2
  double commitment = 0.0;        // sum over stages
  double codebook = 0.0;          // same value: no gradient stopping exists here
};

StageLosses commitment_codebook_losses(const Matrix& frames, const QuantizationResult& result);

}  // namespace rrvq
