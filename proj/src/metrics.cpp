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

#include "rrvq/metrics.hpp"

#include "rrvq/error.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace rrvq {
namespace {

constexpr double kPerfectError = 1e-24;

}  // namespace

double perplexity(std::span<const std::uint64_t> counts) {
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0,
                                       [](double acc, std::uint64_t c) { return acc + static_cast<double>(c); });
  require(total > 0.0, "perplexity: at least one positive count required");
  double entropy = 0.0;
  for (std::uint64_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    entropy -= p * std::log(p);
  }
  return std::exp(entropy);
}

UsageReport usage_histogram(std::span<const std::uint32_t> tokens, std::size_t codebook_size) {
  require(!tokens.empty(), "usage_histogram: empty token stream");
  require(codebook_size >= 1, "usage_histogram: codebook size must be positive");
  UsageReport r;
  r.counts.assign(codebook_size, 0);
  for (std::uint32_t tok : tokens) {
    require(tok < codebook_size, "usage_histogram: token " + std::to_string(tok) +
                                     " out of range for codebook of size " +
                                     std::to_string(codebook_size));
    ++r.counts[tok];
  }
  r.perplexity = perplexity(r.counts);
  r.ratio_to_max = r.perplexity / static_cast<double>(codebook_size);
  return r;
}

UsageReport stage_usage(const QuantizationResult& result, std::size_t stage,
                        std::size_t codebook_size, TokenConvention convention) {
  require(stage < result.n_stages, "stage_usage: stage out of range");
  std::vector<std::uint32_t> tokens;
  tokens.reserve(result.frames.size());
  for (const auto& fq : result.frames) {
    const StageToken& tok = fq.tokens[stage];
    tokens.push_back(convention == TokenConvention::kPosition ? tok.position : tok.absolute);
  }
  return usage_histogram(tokens, codebook_size);
}

UsageReport big_codebook_usage(const QuantizationResult& result, const QuantizerStack& stack) {
  require(stack.n_random() > 0 && stack.big() != nullptr, "big_codebook_usage: stack has no random stages");
  std::vector<std::uint32_t> tokens;
  tokens.reserve(result.frames.size() * stack.n_random());
  for (const auto& fq : result.frames) {
    for (std::size_t k = stack.n_trainable(); k < fq.tokens.size(); ++k) {
      tokens.push_back(fq.tokens[k].absolute);
    }
  }
  return usage_histogram(tokens, stack.big()->size());
}

double si_sdr(std::span<const double> estimate, std::span<const double> reference) {
  require(estimate.size() == reference.size(), "si_sdr: signals differ in length");
  double ref_energy = 0.0;
  double cross = 0.0;
  double est_energy = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    ref_energy += reference[i] * reference[i];
    cross += estimate[i] * reference[i];
    est_energy += estimate[i] * estimate[i];
  }
  require(ref_energy > 0.0, "si_sdr: zero reference");
  if (est_energy == 0.0) return -std::numeric_limits<double>::infinity();

  const double alpha = cross / ref_energy;
  double target = 0.0;
  double error = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double t = alpha * reference[i];
    target += t * t;
    error += (t - estimate[i]) * (t - estimate[i]);
  }
  if (error < kPerfectError) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(target / error);
}

DistortionProfile distortion_profile(const Matrix& frames, const QuantizationResult& result) {
  require(static_cast<std::size_t>(frames.rows()) == result.frames.size() && frames.rows() >= 1,
          "distortion_profile: frame count does not match quantization result");
  const auto t_count = static_cast<double>(frames.rows());
  DistortionProfile p;
  p.energies.assign(result.n_stages + 1, 0.0);
  double sdr_sum = 0.0;
  std::size_t sdr_frames = 0;
  for (std::size_t t = 0; t < result.frames.size(); ++t) {
    const FrameQuantization& fq = result.frames[t];
    const auto x = frames.row(static_cast<Eigen::Index>(t));
    p.energies[0] += x.squaredNorm();
    for (std::size_t k = 0; k < result.n_stages; ++k) {
      p.energies[k + 1] += fq.residuals.row(static_cast<Eigen::Index>(k)).squaredNorm();
    }
    const Vector ref = x.transpose();
    if (ref.squaredNorm() == 0.0) continue;  // SI-SDR undefined for a silent frame
    ++sdr_frames;
    sdr_sum += si_sdr(std::span<const double>(fq.reconstruction.data(), static_cast<std::size_t>(fq.reconstruction.size())),
                      std::span<const double>(ref.data(), static_cast<std::size_t>(ref.size())));
  }
  for (double& e : p.energies) e /= t_count;
  p.final_mse = p.energies.back() / static_cast<double>(frames.cols());
  p.si_sdr_db = sdr_frames > 0 ? sdr_sum / static_cast<double>(sdr_frames)
                               : std::numeric_limits<double>::quiet_NaN();
  return p;
}

}  // namespace rrvq
