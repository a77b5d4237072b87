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

#include "rrvq/training.hpp"

#include "rrvq/error.hpp"
#include "rrvq/parallel.hpp"
#include "stage_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

namespace rrvq {
namespace {

constexpr std::size_t kInitSamplesPerCode = 16;

Matrix project_rows(const Matrix& rows, const QuantizerStage& stage) {
  if (!stage.projection) return rows;
  return rows * stage.projection->down.transpose();
}

Matrix unit_rows_or_copy(const Matrix& m, bool normalize) {
  return normalize ? l2_normalize_rows(m).rows : m;
}

// Partial Fisher-Yates: the first k entries of a uniform random permutation of [0, n).
std::vector<std::size_t> random_subset(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.uniform_below(n - i)]);
  idx.resize(k);
  return idx;
}

// k-means++ seeding on a subsample, in the geometry the stage assigns in.
Matrix kmeanspp_init(const Matrix& z, std::size_t n_codes, bool normalize, Rng& rng) {
  const std::size_t t = static_cast<std::size_t>(z.rows());
  const std::size_t m = std::min(t, kInitSamplesPerCode * n_codes);
  const std::vector<std::size_t> pick = random_subset(t, m, rng);
  Matrix sample(static_cast<Eigen::Index>(m), z.cols());
  for (std::size_t i = 0; i < m; ++i) sample.row(static_cast<Eigen::Index>(i)) = z.row(static_cast<Eigen::Index>(pick[i]));
  const Matrix geom = unit_rows_or_copy(sample, normalize);

  Matrix centres(static_cast<Eigen::Index>(n_codes), z.cols());
  std::vector<double> d2(m, std::numeric_limits<double>::infinity());
  std::size_t chosen = rng.uniform_below(m);
  for (std::size_t c = 0; c < n_codes; ++c) {
    centres.row(static_cast<Eigen::Index>(c)) = sample.row(static_cast<Eigen::Index>(chosen));
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double d = (geom.row(static_cast<Eigen::Index>(i)) - geom.row(static_cast<Eigen::Index>(chosen))).squaredNorm();
      d2[i] = std::min(d2[i], d);
      total += d2[i];
    }
    if (c + 1 == n_codes) break;
    if (total <= 0.0) {
      chosen = rng.uniform_below(m);
      continue;
    }
    double target = rng.uniform01() * total;
    chosen = m - 1;
    for (std::size_t i = 0; i < m; ++i) {
      target -= d2[i];
      if (target < 0.0) {
        chosen = i;
        break;
      }
    }
  }
  return centres;
}

// Batched assignment for the training loop: arg-min of |c|^2 - 2 z.c (or of
// -z.c on the unit sphere), ties to the lowest index.
void assign_batch(const Matrix& batch, const Codebook& cb, bool normalize,
                  std::vector<std::uint32_t>& out) {
  const Matrix& codes = normalize ? cb.unit_codewords() : cb.codewords();
  const Matrix queries = unit_rows_or_copy(batch, normalize);
  const Matrix dots = queries * codes.transpose();
  const Vector norms = normalize ? Vector::Zero(codes.rows()) : Vector(codes.rowwise().squaredNorm());
  out.resize(static_cast<std::size_t>(batch.rows()));
  for (Eigen::Index i = 0; i < batch.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index best_j = 0;
    for (Eigen::Index j = 0; j < codes.rows(); ++j) {
      const double score = norms[j] - 2.0 * dots(i, j);
      if (score < best) {
        best = score;
        best_j = j;
      }
    }
    out[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(best_j);
  }
}

Codebook fit_trainable(const QuantizerStage& stage, std::size_t stage_index, const Matrix& z,
                       std::uint64_t master_seed, const FitOptions& options, FitReport* report) {
  const Codebook& initial = *stage.codebook;
  const std::size_t n_codes = initial.size();
  const std::size_t t = static_cast<std::size_t>(z.rows());
  if (t < n_codes && report) {
    report->warnings.push_back("stage " + std::to_string(stage_index) + ": " + std::to_string(t) +
                               " training frames for " + std::to_string(n_codes) + " codewords");
  }

  Codebook cb = initial;
  if (options.reinit) {
    Rng rng(master_seed, {stream::kFitInit, stage_index});
    cb = Codebook(kmeanspp_init(z, n_codes, stage.normalize, rng), initial.id(), true, initial.seed());
  }
  EmaState state = ema_init(cb, options.decay, options.epsilon);

  Rng shuffle(master_seed, {stream::kFitShuffle, stage_index});
  const std::size_t batch_size = std::max<std::size_t>(1, options.batch_size);
  std::vector<std::size_t> order(t);
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::uint32_t> assignments;
  Matrix batch;
  for (std::size_t pass = 0; pass < options.passes; ++pass) {
    for (std::size_t i = t; i > 1; --i) std::swap(order[i - 1], order[shuffle.uniform_below(i)]);
    for (std::size_t begin = 0; begin < t; begin += batch_size) {
      const std::size_t end = std::min(t, begin + batch_size);
      batch.resize(static_cast<Eigen::Index>(end - begin), z.cols());
      for (std::size_t i = begin; i < end; ++i) {
        batch.row(static_cast<Eigen::Index>(i - begin)) = z.row(static_cast<Eigen::Index>(order[i]));
      }
      assign_batch(batch, cb, stage.normalize, assignments);
      EmaStep step = ema_update(state, cb, batch, assignments);
      state = std::move(step.state);
      cb = std::move(step.codebook);
    }
  }
  return cb;
}

// Draw source for gain fitting, mirroring the stack's resample mode.
class GainDraws {
 public:
  explicit GainDraws(const QuantizerStack& stack) : stack_(stack) {
    if (stack.resample_mode() == ResampleMode::kPerBatch) {
      Rng rng(stack.master_seed(), {stream::kGainSampling, 0});
      shared_ = stack.draw(rng);
    } else if (stack.resample_mode() == ResampleMode::kFixedPerRun) {
      shared_ = stack.fixed_draw();
    }
  }

  // Sub-codebook of random stage `random_index` for gain frame `frame`.
  SubCodebook get(std::size_t frame, std::size_t random_index) const {
    if (shared_) return (*shared_)[random_index];
    Rng rng(stack_.master_seed(), {stream::kGainSampling, frame});
    return stack_.draw(rng, random_index + 1)[random_index];
  }

 private:
  const QuantizerStack& stack_;
  std::optional<SubcodebookDraw> shared_;
};

double fit_gain(QuantizerStage& stage, std::size_t random_index, Matrix& residuals,
                const QuantizerStack& stack, const FitOptions& options) {
  const Codebook& big = stack.big()->codebook();
  const GainDraws draws(stack);
  const std::size_t g_frames = static_cast<std::size_t>(residuals.rows());

  // Scale-matching start: RMS of the stage input over RMS of a big codeword.
  const Matrix z_all = project_rows(residuals, stage);
  const double z_energy = z_all.rowwise().squaredNorm().mean();
  const double c_energy = big.codewords().rowwise().squaredNorm().mean();
  double gain = (z_energy > 0.0 && c_energy > 0.0) ? std::sqrt(z_energy / c_energy) : 1.0;

  std::vector<SubCodebook> subs(g_frames);
  for (std::size_t i = 0; i < g_frames; ++i) subs[i] = draws.get(i, random_index);

  const std::size_t rounds = stage.normalize ? 1 : std::max<std::size_t>(1, options.gain_iterations);
  for (std::size_t round = 0; round < rounds; ++round) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < g_frames; ++i) {
      const CodebookView view(big, subs[i].indices);
      const Vector z = z_all.row(static_cast<Eigen::Index>(i)).transpose();
      const NearestResult nn = nearest_neighbour(z, view, stage.normalize, gain);
      num += z.dot(nn.codeword);
      den += nn.codeword.squaredNorm();
    }
    if (!(den > 0.0) || !(num > 0.0)) break;
    gain = num / den;
  }
  stage.output_gain = gain;

  for (std::size_t i = 0; i < g_frames; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const detail::StageOutput out = detail::run_stage(stage, stack.big(), subs[i].indices,
                                                      residuals.row(row).transpose());
    residuals.row(row) -= out.emitted.transpose();
  }
  return gain;
}

}  // namespace

EmaState ema_init(const Codebook& cb, double decay, double epsilon) {
  require(decay > 0.0 && decay < 1.0, "EMA decay must lie in (0, 1)");
  require(epsilon > 0.0, "EMA epsilon must be positive");
  EmaState s;
  s.counts = Vector::Ones(static_cast<Eigen::Index>(cb.size()));
  s.sums = cb.codewords();
  s.decay = decay;
  s.epsilon = epsilon;
  return s;
}

EmaStep ema_update(const EmaState& state, const Codebook& cb, const Matrix& batch,
                   std::span<const std::uint32_t> assignments) {
  const auto n = static_cast<Eigen::Index>(cb.size());
  require(state.counts.size() == n && state.sums.rows() == n &&
              static_cast<std::size_t>(state.sums.cols()) == cb.dim(),
          "ema_update: state does not match codebook shape");
  require(state.decay > 0.0 && state.decay < 1.0, "ema_update: decay must lie in (0, 1)");
  require(state.epsilon > 0.0, "ema_update: epsilon must be positive");
  require(static_cast<std::size_t>(batch.rows()) == assignments.size(),
          "ema_update: one assignment per batch row required");
  require(batch.rows() == 0 || static_cast<std::size_t>(batch.cols()) == cb.dim(),
          "ema_update: batch dimension does not match codebook");

  Vector batch_counts = Vector::Zero(n);
  Matrix batch_sums = Matrix::Zero(n, state.sums.cols());
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    const std::uint32_t a = assignments[i];
    require(a < static_cast<std::uint32_t>(n),
            "ema_update: assignment " + std::to_string(a) + " out of range");
    batch_counts[a] += 1.0;
    batch_sums.row(a) += batch.row(static_cast<Eigen::Index>(i));
  }

  const double g = state.decay;
  EmaState next = state;
  next.counts = g * state.counts + (1.0 - g) * batch_counts;
  next.sums = g * state.sums + (1.0 - g) * batch_sums;

  const double total = next.counts.sum();
  Matrix codewords = cb.codewords();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double smoothed =
        (next.counts[i] + state.epsilon) / (total + static_cast<double>(n) * state.epsilon) * total;
    if (smoothed > 0.0) codewords.row(i) = next.sums.row(i) / smoothed;
  }
  return {std::move(next), Codebook(std::move(codewords), cb.id(), cb.trainable(), cb.seed())};
}

QuantizerStack fit_codebooks(const QuantizerStack& stack, const Matrix& data,
                             const FitOptions& options, FitReport* report) {
  require(data.rows() >= 1, "fit_codebooks: no training frames");
  require(static_cast<std::size_t>(data.cols()) == stack.dim(),
          "fit_codebooks: data dimension does not match stack");
  require(data.allFinite(), "fit_codebooks: non-finite training data");

  std::vector<QuantizerStage> stages = stack.stages();
  Matrix residuals = data;

  for (std::size_t k = 0; k < stack.n_trainable(); ++k) {
    QuantizerStage& st = stages[k];
    const Matrix z = project_rows(residuals, st);
    st.codebook = fit_trainable(st, k, z, stack.master_seed(), options, report);

    parallel_for(static_cast<std::size_t>(residuals.rows()), [&](std::size_t begin, std::size_t end) {
      for (std::size_t t = begin; t < end; ++t) {
        const auto row = static_cast<Eigen::Index>(t);
        const detail::StageOutput out = detail::run_stage(st, nullptr, {}, residuals.row(row).transpose());
        residuals.row(row) -= out.emitted.transpose();
      }
    });
    if (report) report->stage_energies.push_back(residuals.rowwise().squaredNorm().mean());
  }

  if (stack.n_random() > 0) {
    const std::size_t t = static_cast<std::size_t>(residuals.rows());
    const std::size_t g_frames = std::min(t, std::max<std::size_t>(1, options.gain_frames));
    Rng rng(stack.master_seed(), {stream::kGainSubset});
    const std::vector<std::size_t> pick = random_subset(t, g_frames, rng);
    Matrix subset(static_cast<Eigen::Index>(g_frames), residuals.cols());
    for (std::size_t i = 0; i < g_frames; ++i) {
      subset.row(static_cast<Eigen::Index>(i)) = residuals.row(static_cast<Eigen::Index>(pick[i]));
    }
    std::size_t random_index = 0;
    for (std::size_t k = stack.n_trainable(); k < stages.size(); ++k, ++random_index) {
      const double gain = fit_gain(stages[k], random_index, subset, stack, options);
      if (report) report->gains.push_back(gain);
    }
  }
  QuantizerStack fitted = stack.with_stages(std::move(stages));
  if (report) {
    for (auto& w : stack_warnings(fitted)) report->warnings.push_back(std::move(w));
  }
  return fitted;
}

StageLosses commitment_codebook_losses(const Matrix& frames, const QuantizationResult& result) {
  require(static_cast<std::size_t>(frames.rows()) == result.frames.size(),
          "losses: frame count does not match quantization result");
  StageLosses out;
  out.per_stage.assign(result.n_stages, 0.0);
  if (result.frames.empty()) return out;
  for (std::size_t t = 0; t < result.frames.size(); ++t) {
    const FrameQuantization& fq = result.frames[t];
    require(fq.input.size() == frames.cols(), "losses: frame dimension mismatch");
    Vector input = frames.row(static_cast<Eigen::Index>(t)).transpose();
    for (std::size_t k = 0; k < result.n_stages; ++k) {
      const auto row = static_cast<Eigen::Index>(k);
      out.per_stage[k] += (input - fq.codewords.row(row).transpose()).squaredNorm();
      input = fq.residuals.row(row).transpose();
    }
  }
  for (double& v : out.per_stage) {
    v /= static_cast<double>(result.frames.size());
    out.commitment += v;
  }
  out.codebook = out.commitment;
  return out;
}

}  // namespace rrvq
