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

#include "rrvq/training.hpp"
#include "stacks.hpp"
#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

using namespace rrvq;
using namespace rrvq::testing;

namespace {

double pp(std::vector<std::uint64_t> counts) { return perplexity(counts); }

double sdr(const std::vector<double>& est, const std::vector<double>& ref) { return si_sdr(est, ref); }

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("perplexity hand values") {
  CHECK(std::abs(pp({10, 10, 10, 10}) - 4.0) < 1e-9);
  CHECK(pp({40, 0, 0, 0}) == 1.0);
  CHECK(std::abs(pp({2, 1, 1, 0}) - std::exp(1.5 * std::log(2.0))) < 1e-12);
  CHECK(std::abs(pp({2, 1, 1, 0}) - 2.8284) < 1e-4);
}

TEST_CASE("perplexity of uniform counts equals the support size") {
  for (std::size_t n : {2u, 4u, 1024u}) {
    CHECK(std::abs(pp(std::vector<std::uint64_t>(n, 7)) - static_cast<double>(n)) < 1e-9);
  }
}

TEST_CASE("perplexity bounds and invariances") {
  std::mt19937 gen(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::uint64_t> c(1 + gen() % 50);
    for (auto& v : c) v = gen() % 4 == 0 ? 0 : gen() % 100;
    c[0] += 1;
    const double value = pp(c);
    const auto nonzero = static_cast<double>(std::count_if(c.begin(), c.end(), [](auto v) { return v > 0; }));
    CHECK(value >= 1.0 - 1e-12);
    CHECK(value <= nonzero + 1e-9);

    std::vector<std::uint64_t> shuffled = c;
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    CHECK(std::abs(pp(shuffled) - value) < 1e-9 * value);

    std::vector<std::uint64_t> scaled = c;
    for (auto& v : scaled) v *= 3;
    CHECK(std::abs(pp(scaled) - value) < 1e-9 * value);
  }
}

TEST_CASE("perplexity rejects empty usage") {
  CHECK(error_code_of([] { pp({0, 0, 0}); }) == ErrorCode::kInvalidArgument);
  CHECK(error_code_of([] { pp({}); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("usage histogram") {
  const std::vector<std::uint32_t> tokens{0, 0, 1};
  const UsageReport r = usage_histogram(tokens, 2);
  CHECK(r.counts == std::vector<std::uint64_t>{2, 1});
  const double expected = std::exp(-(2.0 / 3 * std::log(2.0 / 3) + 1.0 / 3 * std::log(1.0 / 3)));
  CHECK(std::abs(r.perplexity - expected) < 1e-12);
  CHECK(std::abs(r.perplexity - 1.8899) < 1e-4);
  CHECK(std::abs(r.ratio_to_max - expected / 2) < 1e-12);

  const std::vector<std::uint32_t> empty;
  CHECK(error_code_of([&] { usage_histogram(empty, 2); }) == ErrorCode::kInvalidArgument);
  const std::vector<std::uint32_t> out_of_range{0, 2};
  CHECK(error_code_of([&] { usage_histogram(out_of_range, 2); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("per-frame sampling spreads usage over the big codebook") {
  StackSpec spec;
  spec.n_t = 0;
  spec.n_r = 1;
  spec.n_big = 512;
  spec.s = 64;
  spec.normalize = true;
  const QuantizerStack stack = make_stack(spec);
  const Matrix xs = gaussian_frames(100000, 8, 21);
  const QuantizationResult r = quantize_sequence(xs, stack);
  const UsageReport big = big_codebook_usage(r, stack);
  CHECK(big.ratio_to_max >= 0.9);
  const UsageReport absolute = stage_usage(r, 0, 512, TokenConvention::kAbsolute);
  CHECK(absolute.counts == big.counts);
  const UsageReport positions = stage_usage(r, 0, 64, TokenConvention::kPosition);
  CHECK(positions.ratio_to_max > 0.99);
}

TEST_CASE("pooled big-codebook usage counts every random token") {
  StackSpec spec;
  spec.n_t = 1;
  spec.n_r = 3;
  spec.s = 32;
  const QuantizerStack stack = make_stack(spec);
  const QuantizationResult r = quantize_sequence(gaussian_frames(300, 8, 22), stack);
  const UsageReport big = big_codebook_usage(r, stack);
  CHECK(std::accumulate(big.counts.begin(), big.counts.end(), std::uint64_t{0}) == 900);
  CHECK(error_code_of([&] { big_codebook_usage(r, stack.truncated(1)); }) == ErrorCode::kInvalidArgument);
  CHECK(error_code_of([&] { stage_usage(r, 4, 10, TokenConvention::kPosition); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("SI-SDR hand values") {
  CHECK(std::abs(sdr({1, 1}, {1, 0})) < 1e-9);
  CHECK(sdr({1, 2, 3}, {1, 2, 3}) == std::numeric_limits<double>::infinity());
  CHECK(sdr({2, 4, 6}, {1, 2, 3}) == std::numeric_limits<double>::infinity());
  // alpha = 1/2, target (1, 0), error (0, 1).
  CHECK(std::abs(sdr({1, 1}, {2, 0})) < 1e-9);
  // alpha = 1, target (1, 0), error (0, 2): 10 log10(1 / 4).
  CHECK(std::abs(sdr({1, 2}, {1, 0}) - 10.0 * std::log10(0.25)) < 1e-9);
}

TEST_CASE("SI-SDR invariances") {
  std::mt19937 gen(23);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> scale(-100.0, 100.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> ref(64), est(64);
    for (std::size_t i = 0; i < 64; ++i) {
      ref[i] = normal(gen);
      est[i] = ref[i] + 0.5 * normal(gen);
    }
    const double base = sdr(est, ref);
    double lambda = scale(gen);
    if (std::abs(lambda) < 1e-3) lambda = 1.0;
    std::vector<double> scaled = est;
    for (double& v : scaled) v *= lambda;
    CHECK(std::abs(sdr(scaled, ref) - base) < 1e-6);

    std::vector<std::size_t> perm(64);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    std::vector<double> pr(64), pe(64);
    for (std::size_t i = 0; i < 64; ++i) {
      pr[i] = ref[perm[i]];
      pe[i] = est[perm[i]];
    }
    CHECK(std::abs(sdr(pe, pr) - base) < 1e-9);
  }
}

TEST_CASE("SI-SDR edge cases") {
  CHECK(error_code_of([] { sdr({1, 1}, {0, 0}); }) == ErrorCode::kInvalidArgument);
  CHECK(error_code_of([] { sdr({1, 1, 1}, {1, 0}); }) == ErrorCode::kInvalidArgument);
  CHECK(sdr({0, 0}, {1, 0}) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("distortion profile of an exact cover") {
  std::vector<QuantizerStage> stages;
  stages.push_back(trainable(from_rows({{1, 0}})));
  stages.push_back(trainable(from_rows({{0, 1}})));
  const QuantizerStack cover(2, std::move(stages), nullptr, {});
  Matrix ones(4, 2);
  ones.setOnes();
  const DistortionProfile p = distortion_profile(ones, quantize_sequence(ones, cover));
  REQUIRE(p.energies.size() == 3);
  CHECK(p.energies[0] == 2.0);
  CHECK(p.energies[1] == 1.0);
  CHECK(p.energies[2] == 0.0);
  CHECK(p.final_mse == 0.0);
  CHECK(p.si_sdr_db == std::numeric_limits<double>::infinity());
}

TEST_CASE("distortion profile of an empty stack") {
  const QuantizerStack empty = make_stack({}).truncated(0);
  const Matrix xs = gaussian_frames(50, 8, 24);
  const DistortionProfile p = distortion_profile(xs, quantize_sequence(xs, empty));
  REQUIRE(p.energies.size() == 1);
  const double energy = xs.rowwise().squaredNorm().mean();
  CHECK(std::abs(p.energies[0] - energy) < 1e-12);
  CHECK(std::abs(p.final_mse - energy / 8.0) < 1e-12);
}

TEST_CASE("distortion profile matches per-stage residual energies") {
  StackSpec spec;
  spec.n_t = 2;
  spec.n_r = 2;
  const QuantizerStack stack = make_stack(spec);
  const Matrix xs = gaussian_frames(300, 8, 25);
  const QuantizationResult r = quantize_sequence(xs, stack);
  const DistortionProfile p = distortion_profile(xs, r);
  for (std::size_t k = 0; k < stack.size(); ++k) {
    double e = 0;
    for (const auto& fq : r.frames) e += fq.residuals.row(static_cast<Eigen::Index>(k)).squaredNorm();
    CHECK(std::abs(p.energies[k + 1] - e / 300.0) < 1e-9);
  }
  double sdr_mean = 0;
  for (Eigen::Index t = 0; t < xs.rows(); ++t) {
    const Vector x = xs.row(t).transpose();
    const Vector& rec = r.frames[static_cast<std::size_t>(t)].reconstruction;
    sdr_mean += si_sdr(std::span<const double>(rec.data(), 8), std::span<const double>(x.data(), 8));
  }
  CHECK(std::abs(p.si_sdr_db - sdr_mean / 300.0) < 1e-9);
}

TEST_CASE("random stages reduce the final energy of a trained stack") {
  StackSpec spec;
  spec.n_t = 5;
  spec.n_codes = 32;
  spec.n_r = 4;
  spec.n_big = 1024;
  spec.s = 128;
  spec.normalize = true;
  spec.d_proj = 4;
  FitOptions fit;
  fit.passes = 5;
  const QuantizerStack stack = fit_codebooks(make_stack(spec), gaussian_frames(20000, 8, 26), fit);
  const Matrix xs = gaussian_frames(5000, 8, 27);
  const DistortionProfile full = distortion_profile(xs, quantize_sequence(xs, stack));
  const DistortionProfile part = distortion_profile(xs, quantize_sequence(xs, stack.truncated(5)));
  CHECK(full.energies.back() < part.energies.back());
  CHECK(full.si_sdr_db > part.si_sdr_db);
}

}  // TEST_SUITE
