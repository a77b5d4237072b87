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

#include "rrvq/quantizer.hpp"

#include <span>

namespace rrvq::detail {

struct StageOutput {
  std::uint32_t position = 0;
  std::uint32_t absolute = 0;
  Vector emitted;  // in R^D
};

// Quantizes one residual with one stage. `subcodebook` is ignored for
// trainable stages.
inline StageOutput run_stage(const QuantizerStage& stage, const BigCodebook* big,
                             std::span<const std::uint32_t> subcodebook,
                             const Eigen::Ref<const Vector>& residual) {
  const Vector z = stage.projection ? Vector(stage.projection->down * residual) : Vector(residual);
  const CodebookView view = stage.is_random() ? CodebookView(big->codebook(), subcodebook)
                                              : CodebookView(*stage.codebook);
  NearestResult nn = nearest_neighbour(z, view, stage.normalize, stage.output_gain);
  StageOutput out;
  out.position = nn.position;
  out.absolute = nn.absolute;
  out.emitted = stage.projection ? Vector(stage.projection->up * nn.codeword) : std::move(nn.codeword);
  out.emitted *= stage.output_gain;
  return out;
}

}  // namespace rrvq::detail
