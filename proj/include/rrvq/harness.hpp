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

#include "json.hpp"
#include "rrvq/features.hpp"
#include "rrvq/metrics.hpp"
#include "rrvq/quantizer.hpp"
#include "rrvq/training.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rrvq {

struct DataSpec {
  std::string kind = "gaussian";  // gaussian | gmm | file
  std::size_t frames = 0;         // 0 with kind=file: every frame in the file
  std::size_t clusters = 2;
  double separation = 0.0;
  std::string path;
};

struct Mitigants {
  bool normalize = true;
  std::optional<std::size_t> projection;  // d_proj
};

/// One column of the variant grid. JSON keys: name, D, n_t, N_t, n_r, N_big,
/// s, mitigants {normalize, projection}, resample_mode, disjoint, train,
/// eval, seeds, passes, decay, epsilon, batch_size, gain_frames.
struct ExperimentConfig {
  std::string name = "experiment";
  std::size_t dim = 8;
  std::size_t n_trainable = 5;
  std::size_t trainable_size = 256;
  std::size_t n_random = 4;
  std::size_t big_size = 4096;
  std::size_t sample_size = 512;
  Mitigants mitigants{true, 4};
  ResampleMode resample_mode = ResampleMode::kPerFrame;
  bool disjoint = true;
  DataSpec train{"gaussian", 100000, 2, 0.0, {}};
  DataSpec eval{"gaussian", 20000, 2, 0.0, {}};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  FitOptions fit;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

/// Throws kInvalidArgument naming the violated constraint.
void validate_config(const ExperimentConfig& cfg);

/// Untrained stack for one seed: Gaussian trainable codebooks, Gaussian big
/// codebook, seeded projections when the projection mitigant is on.
QuantizerStack build_stack(const ExperimentConfig& cfg, std::uint64_t seed);

/// Train / eval frames for one seed.
FeatureSet make_data(const DataSpec& spec, std::size_t dim, std::uint64_t seed, std::uint64_t stream_tag);

struct StageUsage {
  std::size_t stage = 0;
  bool random = false;
  UsageReport usage;                    // trainable: rows; random: positions in the sub-codebook
  std::optional<UsageReport> absolute;  // random stages: big-codebook rows
};

struct Evaluation {
  DistortionProfile profile;
  StageLosses losses;
  std::vector<StageUsage> stages;
  std::optional<UsageReport> big;
};

Evaluation evaluate(const QuantizerStack& stack, const Matrix& frames, const QuantizationResult& result);
nlohmann::json evaluation_to_json(const Evaluation& eval);

struct SeedResult {
  std::uint64_t seed = 0;
  Evaluation eval;
  std::vector<double> gains;
  double wall_time_s = 0.0;
};

struct Aggregate {
  double mean = 0.0;
  std::optional<double> std;  // sample std; absent for a single seed
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<SeedResult> seeds;
  double wall_time_s = 0.0;
};

ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// Mean and sample standard deviation.
Aggregate aggregate(const std::vector<double>& values);

/// Every wall-time field is named "wall_time_s".
nlohmann::json report_to_json(const ExperimentReport& report);
std::string report_to_csv(const ExperimentReport& report);

/// One column per config, rows in the layout of a perplexity table:
/// "value (ratio)" per stage, random stages by big-codebook row.
struct GridTable {
  std::vector<std::string> columns;
  std::vector<std::pair<std::string, std::vector<std::string>>> rows;
};

GridTable grid_table(const std::vector<ExperimentReport>& reports);
GridTable run_grid(const std::vector<ExperimentConfig>& cfgs);
std::string grid_to_csv(const GridTable& table);

struct TruncationSide {
  double final_energy = 0.0;
  double final_mse = 0.0;
  double si_sdr_db = 0.0;
};

struct TruncationSeed {
  std::uint64_t seed = 0;
  TruncationSide truncated;
  TruncationSide full;
};

struct TruncationReport {
  std::size_t k = 0;
  std::size_t total_stages = 0;
  std::vector<TruncationSeed> seeds;
};

/// Trains the full stack once per seed and evaluates it both truncated to k
/// stages and complete on the same eval frames.
TruncationReport compare_truncation(const ExperimentConfig& cfg, std::size_t k);
nlohmann::json truncation_to_json(const TruncationReport& report);

}  // namespace rrvq
