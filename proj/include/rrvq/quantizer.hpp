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
#include "rrvq/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rrvq {

enum class StageKind : std::uint8_t { kTrainable, kRandom };

/// When random stages redraw their sub-codebooks.
enum class ResampleMode : std::uint8_t {
  kPerFrame = 0,     // fresh draw for every frame
  kPerBatch = 1,     // one draw per quantize_sequence call
  kFixedPerRun = 2,  // one draw made when the stack is built
};

std::string_view to_string(ResampleMode mode);
ResampleMode parse_resample_mode(std::string_view text);

/// One quantizer of the cascade.
///
/// A trainable stage owns its codebook. A random stage owns nothing but a
/// sample size; its codewords come from the stack's BigCodebook. With a
/// projection the stage works in d_proj dimensions: it quantizes
/// down * residual and emits output_gain * up * code. output_gain rescales
/// the unit-variance big codebook to the residual it sees; it is 1 for
/// trainable stages, whose codewords are already fitted in scale.
struct QuantizerStage {
  StageKind kind = StageKind::kTrainable;
  std::optional<Codebook> codebook;
  std::size_t sample_size = 0;
  std::optional<ProjectionPair> projection;
  bool normalize = false;
  double output_gain = 1.0;

  bool is_random() const { return kind == StageKind::kRandom; }
  std::size_t working_dim(std::size_t dim) const {
    return projection ? projection->d_proj() : dim;
  }
};

/// Sub-codebooks for the random stages of one quantization event, in stage order.
using SubcodebookDraw = std::vector<SubCodebook>;

struct StackOptions {
  ResampleMode resample_mode = ResampleMode::kPerFrame;
  std::uint64_t master_seed = 0;
  // Random stages of one frame draw pairwise disjoint sub-codebooks.
  bool disjoint = true;
};

/// Ordered cascade: trainable stages first, then random stages sharing one
/// BigCodebook. Read-only during quantization.
class QuantizerStack {
 public:
  QuantizerStack(std::size_t dim, std::vector<QuantizerStage> stages,
                 std::shared_ptr<const BigCodebook> big, StackOptions options);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return stages_.size(); }
  std::size_t n_trainable() const { return n_trainable_; }
  std::size_t n_random() const { return stages_.size() - n_trainable_; }
  const std::vector<QuantizerStage>& stages() const { return stages_; }
  const QuantizerStage& stage(std::size_t i) const { return stages_.at(i); }

  const BigCodebook* big() const { return big_.get(); }
  const std::shared_ptr<const BigCodebook>& big_ptr() const { return big_; }

  const StackOptions& options() const { return options_; }
  ResampleMode resample_mode() const { return options_.resample_mode; }
  std::uint64_t master_seed() const { return options_.master_seed; }

  /// Sample sizes of the random stages, in order.
  std::vector<std::size_t> sample_sizes() const;

  /// Draws one sub-codebook per random stage, stage by stage, excluding
  /// earlier stages' rows when the stack is disjoint. With `limit`, only the
  /// first `limit` random stages are drawn; the result is a prefix of the
  /// full draw from the same rng state.
  SubcodebookDraw draw(Rng& rng, std::size_t limit = static_cast<std::size_t>(-1)) const;

  Rng frame_rng(std::uint64_t frame_index) const;
  Rng batch_rng(std::uint64_t batch_index) const;
  /// The draw cached at construction; only valid in kFixedPerRun mode.
  const SubcodebookDraw& fixed_draw() const;

  /// First k stages with the same big codebook, options and cached draw
  /// prefix. k = 0 yields the empty quantizer.
  QuantizerStack truncated(std::size_t k) const;

  /// Same configuration with replacement stages (used by training).
  QuantizerStack with_stages(std::vector<QuantizerStage> stages) const;

 private:
  struct AllowEmpty {};
  QuantizerStack(AllowEmpty, std::size_t dim, std::vector<QuantizerStage> stages,
                 std::shared_ptr<const BigCodebook> big, StackOptions options);
  void validate(bool allow_empty);

  std::size_t dim_;
  std::vector<QuantizerStage> stages_;
  std::shared_ptr<const BigCodebook> big_;
  StackOptions options_;
  std::size_t n_trainable_ = 0;
  std::optional<SubcodebookDraw> fixed_draw_;
};

struct NearestResult {
  std::uint32_t position = 0;  // within the view
  std::uint32_t absolute = 0;  // row in the underlying codebook
  double squared_distance = 0.0;
  Vector codeword;             // unnormalized, unscaled row
};

/// Exhaustive arg-min of squared Euclidean distance, ties to the lowest
/// position. With normalize, x and codewords are compared on the unit sphere
/// (scale is then irrelevant); otherwise candidates are scale * codeword.
NearestResult nearest_neighbour(const Eigen::Ref<const Vector>& x, const CodebookView& cb,
                                bool normalize, double scale = 1.0);

struct StageToken {
  std::uint32_t stage = 0;
  std::uint32_t position = 0;  // transmitted token: index within the (sub-)codebook
  std::uint32_t absolute = 0;  // codebook row; big-codebook row for random stages
  std::vector<std::uint32_t> subcodebook;  // random stages, when kept
};

struct FrameQuantization {
  Vector input;
  std::vector<StageToken> tokens;
  Matrix codewords;  // n_stages x D, emitted contribution of each stage
  Matrix residuals;  // n_stages x D, residual after each stage
  Vector reconstruction;

  Vector final_residual() const {
    return residuals.rows() == 0 ? input : Vector(residuals.row(residuals.rows() - 1).transpose());
  }
};

/// One pass of the cascade: trainable stages search their codebook, random
/// stages search their sub-codebook from `draw`, the residual is updated
/// after every stage.
FrameQuantization quantize_frame(const Eigen::Ref<const Vector>& x, const QuantizerStack& stack,
                                 const SubcodebookDraw& draw, bool keep_subcodebooks = true);

/// Draws sub-codebooks from rng (or uses the cached draw in kFixedPerRun
/// mode) and quantizes x.
FrameQuantization quantize_frame(const Eigen::Ref<const Vector>& x, const QuantizerStack& stack,
                                 Rng& rng, bool keep_subcodebooks = true);

struct SequenceOptions {
  // Per-frame streams are keyed by stream_offset + frame index; per-batch
  // draws are keyed by stream_offset.
  std::uint64_t stream_offset = 0;
  bool keep_subcodebooks = false;
};

struct QuantizationResult {
  std::vector<FrameQuantization> frames;
  ResampleMode resample_mode = ResampleMode::kPerFrame;
  std::uint64_t master_seed = 0;
  std::vector<std::size_t> sample_sizes;
  std::size_t n_stages = 0;
};

QuantizationResult quantize_sequence(const Matrix& frames, const QuantizerStack& stack,
                                     const SequenceOptions& options = {});

/// Sum of emitted codewords.
Vector dequantize(const FrameQuantization& fq);

/// Zero-norm codewords in stages that normalize, one message per stage.
std::vector<std::string> stack_warnings(const QuantizerStack& stack);

/// Transmitted tokens, frame-major: tokens[t * n_stages + k].
std::vector<std::uint32_t> token_positions(const QuantizationResult& result);

struct TokenFile {
  std::uint32_t frames = 0;
  std::uint32_t n_stages = 0;
  std::vector<std::uint32_t> sample_sizes;
  std::uint64_t master_seed = 0;
  ResampleMode resample_mode = ResampleMode::kPerFrame;
  std::vector<std::uint32_t> tokens;
};

// "RRVQTK1\0", u32 T, u32 n_stages, u32 s per random stage, u64 master_seed,
// u8 resample_mode, T * n_stages u32 tokens (LE). The header does not carry
// the number of random stages; the reader recovers it from the file size.
void write_token_file(const std::filesystem::path& path, const QuantizationResult& result);
TokenFile read_token_file(const std::filesystem::path& path);

}  // namespace rrvq
