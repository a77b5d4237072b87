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
#include "rrvq/training.hpp"

#include <filesystem>

namespace rrvq {

struct StoredStack {
  QuantizerStack stack;
  FitOptions training;
};

/// Writes `dir/manifest.json`, one codebook file per trainable stage and
/// `dir/big.cb`. Projections are stored by seed and rebuilt on load.
void save_stack(const std::filesystem::path& dir, const QuantizerStack& stack,
                const FitOptions& training = {});

StoredStack load_stack(const std::filesystem::path& dir);

}  // namespace rrvq
