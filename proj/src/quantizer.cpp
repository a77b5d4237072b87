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

#include "rrvq/quantizer.hpp"

#include "binary_io.hpp"
#include "rrvq/error.hpp"
#include "rrvq/parallel.hpp"
#include "stage_kernel.hpp"

#include <cmath>
#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

namespace rrvq {
namespace {

constexpr std::string_view kTokenMagic{"RRVQTK1\0", 8};
constexpr double kDegenerateNorm = 1e-12;

}  // namespace

std::string_view to_string(ResampleMode mode) {
  switch (mode) {
    case ResampleMode::kPerFrame: return "per-frame";
    case ResampleMode::kPerBatch: return "per-batch";
    case ResampleMode::kFixedPerRun: return "fixed-per-run";
  }
  return "unknown";
}

ResampleMode parse_resample_mode(std::string_view text) {
  if (text == "per-frame") return ResampleMode::kPerFrame;
  if (text == "per-batch") return ResampleMode::kPerBatch;
  if (text == "fixed-per-run") return ResampleMode::kFixedPerRun;
  fail(ErrorCode::kInvalidArgument,
       "unknown resample_mode '" + std::string(text) +
           "' (expected per-frame, per-batch or fixed-per-run)");
}

QuantizerStack::QuantizerStack(std::size_t dim, std::vector<QuantizerStage> stages,
                               std::shared_ptr<const BigCodebook> big, StackOptions options)
    : dim_(dim), stages_(std::move(stages)), big_(std::move(big)), options_(options) {
  validate(false);
}

QuantizerStack::QuantizerStack(AllowEmpty, std::size_t dim, std::vector<QuantizerStage> stages,
                               std::shared_ptr<const BigCodebook> big, StackOptions options)
    : dim_(dim), stages_(std::move(stages)), big_(std::move(big)), options_(options) {
  validate(true);
}

void QuantizerStack::validate(bool allow_empty) {
  require(dim_ >= 1, "stack dimension must be positive");
  require(allow_empty || !stages_.empty(), "stack needs at least one stage");

  n_trainable_ = 0;
  bool seen_random = false;
  std::size_t random_dim = 0;
  std::size_t total_draw = 0;
  for (std::size_t k = 0; k < stages_.size(); ++k) {
    const QuantizerStage& st = stages_[k];
    const std::string where = "stage " + std::to_string(k) + ": ";
    if (st.projection) {
      require(st.projection->dim() == dim_, where + "projection input dimension mismatch");
    }
    require(std::isfinite(st.output_gain) && st.output_gain > 0.0,
            where + "output gain must be positive and finite");
    const std::size_t wd = st.working_dim(dim_);
    if (st.is_random()) {
      seen_random = true;
      require(!st.codebook, where + "random stages do not own codewords");
      require(big_ != nullptr, where + "random stage without a big codebook");
      require(st.sample_size >= 1, where + "sample size must be positive");
      if (st.sample_size > big_->size()) {
        fail(ErrorCode::kCapacityExceeded, where + "sample size " + std::to_string(st.sample_size) +
                                               " exceeds big codebook size " + std::to_string(big_->size()));
      }
      require(big_->dim() == wd, where + "big codebook dimension " + std::to_string(big_->dim()) +
                                     " does not match working dimension " + std::to_string(wd));
      if (random_dim == 0) random_dim = wd;
      total_draw += st.sample_size;
    } else {
      require(!seen_random, where + "trainable stages must precede random stages");
      require(st.codebook.has_value(), where + "trainable stage without a codebook");
      require(st.codebook->dim() == wd, where + "codebook dimension " +
                                            std::to_string(st.codebook->dim()) +
                                            " does not match working dimension " +
                                            std::to_string(wd));
      ++n_trainable_;
    }
  }
  if (options_.disjoint && big_ && total_draw > big_->size()) {
    fail(ErrorCode::kCapacityExceeded,
         "disjoint sampling needs the sum of sample sizes (" + std::to_string(total_draw) +
             ") to be at most the big codebook size (" + std::to_string(big_->size()) + ")");
  }

  fixed_draw_.reset();
  if (options_.resample_mode == ResampleMode::kFixedPerRun && n_random() > 0) {
    Rng rng(options_.master_seed, {stream::kFixedSampling});
    fixed_draw_ = draw(rng);
  }
}

std::vector<std::size_t> QuantizerStack::sample_sizes() const {
  std::vector<std::size_t> out;
  for (const auto& st : stages_) {
    if (st.is_random()) out.push_back(st.sample_size);
  }
  return out;
}

SubcodebookDraw QuantizerStack::draw(Rng& rng, std::size_t limit) const {
  SubcodebookDraw out;
  out.reserve(std::min(limit, n_random()));
  std::vector<std::uint32_t> used;
  for (const auto& st : stages_) {
    if (!st.is_random()) continue;
    if (out.size() >= limit) break;
    out.push_back(sample_subcodebook(*big_, st.sample_size, rng,
                                     options_.disjoint ? std::span<const std::uint32_t>(used)
                                                       : std::span<const std::uint32_t>()));
    if (options_.disjoint) {
      used.insert(used.end(), out.back().indices.begin(), out.back().indices.end());
    }
  }
  return out;
}

Rng QuantizerStack::frame_rng(std::uint64_t frame_index) const {
  return Rng(options_.master_seed, {stream::kFrameSampling, frame_index});
}

Rng QuantizerStack::batch_rng(std::uint64_t batch_index) const {
  return Rng(options_.master_seed, {stream::kBatchSampling, batch_index});
}

const SubcodebookDraw& QuantizerStack::fixed_draw() const {
  if (!fixed_draw_) {
    fail(ErrorCode::kInvalidArgument, "fixed_draw: stack is not in fixed-per-run mode");
  }
  return *fixed_draw_;
}

QuantizerStack QuantizerStack::truncated(std::size_t k) const {
  require(k <= stages_.size(), "truncation to " + std::to_string(k) + " stages exceeds stack size " +
                                   std::to_string(stages_.size()));
  std::vector<QuantizerStage> prefix(stages_.begin(), stages_.begin() + static_cast<std::ptrdiff_t>(k));
  return QuantizerStack(AllowEmpty{}, dim_, std::move(prefix), big_, options_);
}

QuantizerStack QuantizerStack::with_stages(std::vector<QuantizerStage> stages) const {
  return QuantizerStack(dim_, std::move(stages), big_, options_);
}

NearestResult nearest_neighbour(const Eigen::Ref<const Vector>& x, const CodebookView& cb,
                                bool normalize, double scale) {
  require(cb.size() > 0, "nearest_neighbour: empty codebook");
  if (static_cast<std::size_t>(x.size()) != cb.dim()) {
    fail(ErrorCode::kInvalidArgument, "nearest_neighbour: vector dimension " + std::to_string(x.size()) +
                                          " does not match codebook dimension " + std::to_string(cb.dim()));
  }

  const std::size_t d = cb.dim();
  Vector q = x;
  double w = scale;
  if (normalize) {
    const double n = q.norm();
    if (n >= kDegenerateNorm) q /= n;
    w = 1.0;
  }
  const double* rows = normalize ? cb.codebook().unit_codewords().data() : cb.codebook().codewords().data();
  const double* qp = q.data();

  double best = std::numeric_limits<double>::infinity();
  std::size_t best_pos = 0;
  for (std::size_t i = 0; i < cb.size(); ++i) {
    const double* c = rows + static_cast<std::size_t>(cb.absolute(i)) * d;
    double dist = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = w * c[j] - qp[j];
      dist += diff * diff;
    }
    if (dist < best) {
      best = dist;
      best_pos = i;
    }
  }
  require(std::isfinite(best), "nearest_neighbour: non-finite input");

  NearestResult out;
  out.position = static_cast<std::uint32_t>(best_pos);
  out.absolute = cb.absolute(best_pos);
  out.squared_distance = best;
  out.codeword = cb.row(best_pos).transpose();
  return out;
}

FrameQuantization quantize_frame(const Eigen::Ref<const Vector>& x, const QuantizerStack& stack,
                                 const SubcodebookDraw& draw, bool keep_subcodebooks) {
  const auto dim = static_cast<Eigen::Index>(stack.dim());
  if (x.size() != dim) {
    fail(ErrorCode::kInvalidArgument, "quantize_frame: frame dimension " + std::to_string(x.size()) +
                                          " does not match stack dimension " + std::to_string(dim));
  }
  require(x.allFinite(), "quantize_frame: non-finite frame");
  require(draw.size() == stack.n_random(), "quantize_frame: draw does not cover the random stages");

  const auto n = static_cast<Eigen::Index>(stack.size());
  FrameQuantization fq;
  fq.input = x;
  fq.codewords.resize(n, dim);
  fq.residuals.resize(n, dim);
  fq.tokens.reserve(stack.size());

  Vector residual = x;
  std::size_t random_index = 0;
  for (std::size_t k = 0; k < stack.size(); ++k) {
    const QuantizerStage& st = stack.stage(k);
    std::span<const std::uint32_t> sub;
    if (st.is_random()) sub = draw[random_index++].indices;

    detail::StageOutput out = detail::run_stage(st, stack.big(), sub, residual);
    residual -= out.emitted;

    const auto row = static_cast<Eigen::Index>(k);
    fq.codewords.row(row) = out.emitted.transpose();
    fq.residuals.row(row) = residual.transpose();

    StageToken token;
    token.stage = static_cast<std::uint32_t>(k);
    token.position = out.position;
    token.absolute = out.absolute;
    if (st.is_random() && keep_subcodebooks) token.subcodebook.assign(sub.begin(), sub.end());
    fq.tokens.push_back(std::move(token));
  }
  fq.reconstruction = dequantize(fq);
  return fq;
}

FrameQuantization quantize_frame(const Eigen::Ref<const Vector>& x, const QuantizerStack& stack,
                                 Rng& rng, bool keep_subcodebooks) {
  if (stack.resample_mode() == ResampleMode::kFixedPerRun && stack.n_random() > 0) {
    return quantize_frame(x, stack, stack.fixed_draw(), keep_subcodebooks);
  }
  return quantize_frame(x, stack, stack.draw(rng), keep_subcodebooks);
}

QuantizationResult quantize_sequence(const Matrix& frames, const QuantizerStack& stack,
                                     const SequenceOptions& options) {
  require(frames.rows() >= 1, "quantize_sequence: no frames");
  require(static_cast<std::size_t>(frames.cols()) == stack.dim(),
          "quantize_sequence: frame dimension " + std::to_string(frames.cols()) +
              " does not match stack dimension " + std::to_string(stack.dim()));

  QuantizationResult result;
  result.resample_mode = stack.resample_mode();
  result.master_seed = stack.master_seed();
  result.sample_sizes = stack.sample_sizes();
  result.n_stages = stack.size();
  result.frames.resize(static_cast<std::size_t>(frames.rows()));

  std::optional<SubcodebookDraw> shared;
  if (stack.n_random() == 0) {
    shared.emplace();
  } else if (stack.resample_mode() == ResampleMode::kPerBatch) {
    Rng rng = stack.batch_rng(options.stream_offset);
    shared = stack.draw(rng);
  } else if (stack.resample_mode() == ResampleMode::kFixedPerRun) {
    shared = stack.fixed_draw();
  }

  parallel_for(result.frames.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      const auto row = frames.row(static_cast<Eigen::Index>(t)).transpose();
      if (shared) {
        result.frames[t] = quantize_frame(row, stack, *shared, options.keep_subcodebooks);
      } else {
        Rng rng = stack.frame_rng(options.stream_offset + t);
        result.frames[t] = quantize_frame(row, stack, stack.draw(rng), options.keep_subcodebooks);
      }
    }
  });
  return result;
}

Vector dequantize(const FrameQuantization& fq) {
  return fq.codewords.colwise().sum().transpose();
}

std::vector<std::string> stack_warnings(const QuantizerStack& stack) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < stack.size(); ++k) {
    const QuantizerStage& st = stack.stage(k);
    if (!st.normalize) continue;
    const Codebook& cb = st.is_random() ? stack.big()->codebook() : *st.codebook;
    if (!cb.degenerate_rows().empty()) {
      out.push_back("stage " + std::to_string(k) + ": " + std::to_string(cb.degenerate_rows().size()) +
                    " zero-norm codeword(s) compared unnormalized");
    }
  }
  return out;
}

std::vector<std::uint32_t> token_positions(const QuantizationResult& result) {
  std::vector<std::uint32_t> out;
  out.reserve(result.frames.size() * result.n_stages);
  for (const auto& fq : result.frames) {
    for (const auto& tok : fq.tokens) out.push_back(tok.position);
  }
  return out;
}

void write_token_file(const std::filesystem::path& path, const QuantizationResult& result) {
  detail::ByteWriter w;
  w.bytes(kTokenMagic);
  w.le(static_cast<std::uint32_t>(result.frames.size()));
  w.le(static_cast<std::uint32_t>(result.n_stages));
  for (std::size_t s : result.sample_sizes) w.le(static_cast<std::uint32_t>(s));
  w.le(result.master_seed);
  w.le(static_cast<std::uint8_t>(result.resample_mode));
  for (std::uint32_t tok : token_positions(result)) w.le(tok);
  detail::write_file(path, w.data());
}

TokenFile read_token_file(const std::filesystem::path& path) {
  const std::string data = detail::read_file(path);
  detail::ByteReader r(data, path.string());
  if (r.bytes(kTokenMagic.size()) != kTokenMagic) {
    fail(ErrorCode::kParseError, path.string() + ": not a token file (bad magic)");
  }
  TokenFile tf;
  tf.frames = r.le<std::uint32_t>();
  tf.n_stages = r.le<std::uint32_t>();
  const std::uint64_t payload = std::uint64_t{tf.frames} * tf.n_stages * 4;
  const std::uint64_t fixed_tail = 8 + 1;
  if (r.remaining() < payload + fixed_tail || (r.remaining() - payload - fixed_tail) % 4 != 0) {
    fail(ErrorCode::kParseError, path.string() + ": size does not match header");
  }
  const std::uint64_t n_random = (r.remaining() - payload - fixed_tail) / 4;
  if (n_random > tf.n_stages) {
    fail(ErrorCode::kParseError, path.string() + ": more sample sizes than stages");
  }
  for (std::uint64_t i = 0; i < n_random; ++i) tf.sample_sizes.push_back(r.le<std::uint32_t>());
  tf.master_seed = r.le<std::uint64_t>();
  const auto mode = r.le<std::uint8_t>();
  if (mode > 2) fail(ErrorCode::kParseError, path.string() + ": unknown resample mode");
  tf.resample_mode = static_cast<ResampleMode>(mode);
  tf.tokens.resize(payload / 4);
  for (auto& tok : tf.tokens) tok = r.le<std::uint32_t>();
  return tf;
}

}  // namespace rrvq
