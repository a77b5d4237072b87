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
#include "rrvq/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace rrvq {

/// N codewords in R^D, held at f32 precision. Immutable once built; training
/// produces a new Codebook rather than editing one in place.
class Codebook {
 public:
  Codebook(Matrix codewords, std::string id = {}, bool trainable = false,
           std::uint64_t seed = 0);

  std::size_t size() const { return static_cast<std::size_t>(codewords_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(codewords_.cols()); }

  const Matrix& codewords() const { return codewords_; }
  // Row-wise L2-normalized copy used by the normalization mitigant.
  const Matrix& unit_codewords() const { return unit_codewords_; }
  // Rows too short to normalize; unit_codewords() passes them through.
  const std::vector<std::size_t>& degenerate_rows() const { return degenerate_rows_; }

  const std::string& id() const { return id_; }
  bool trainable() const { return trainable_; }
  std::uint64_t seed() const { return seed_; }

  bool operator==(const Codebook& other) const {
    return codewords_ == other.codewords_;
  }

 private:
  Matrix codewords_;
  Matrix unit_codewords_;
  std::vector<std::size_t> degenerate_rows_;
  std::string id_;
  bool trainable_;
  std::uint64_t seed_;
};

/// n codewords drawn i.i.d. from N(0, I_dim). Bit-reproducible given seed.
Codebook init_gaussian(std::size_t n, std::size_t dim, std::uint64_t seed,
                       std::string id = {}, bool trainable = true);

/// The large fixed codebook random stages draw from. Never trained.
class BigCodebook {
 public:
  explicit BigCodebook(Codebook codebook) : codebook_(std::move(codebook)) {}

  static BigCodebook gaussian(std::size_t n, std::size_t dim, std::uint64_t seed) {
    return BigCodebook(init_gaussian(n, dim, seed, "big", false));
  }

  const Codebook& codebook() const { return codebook_; }
  std::size_t size() const { return codebook_.size(); }
  std::size_t dim() const { return codebook_.dim(); }
  std::uint64_t seed() const { return codebook_.seed(); }

 private:
  Codebook codebook_;
};

/// s distinct rows of a BigCodebook, in draw order. Position p within the
/// sub-codebook is what a codec transmits; indices[p] is the absolute row.
struct SubCodebook {
  std::vector<std::uint32_t> indices;
};

/// Draws s distinct indices uniformly without replacement from
/// [0, N_big) minus `exclude`. Throws kCapacityExceeded when
/// s + |exclude| > N_big. `exclude` must hold distinct in-range indices.
SubCodebook sample_subcodebook(const BigCodebook& big, std::size_t s, Rng& rng,
                               std::span<const std::uint32_t> exclude = {});

/// Read-only window onto a codebook: either every row, or a subset of rows
/// addressed through an index list (a sub-codebook).
class CodebookView {
 public:
  explicit CodebookView(const Codebook& cb) : cb_(&cb) {}
  CodebookView(const Codebook& cb, std::span<const std::uint32_t> rows)
      : cb_(&cb), rows_(rows), subset_(true) {}

  std::size_t size() const { return subset_ ? rows_.size() : cb_->size(); }
  std::size_t dim() const { return cb_->dim(); }

  std::uint32_t absolute(std::size_t position) const {
    return subset_ ? rows_[position] : static_cast<std::uint32_t>(position);
  }
  auto row(std::size_t position) const {
    return cb_->codewords().row(absolute(position));
  }
  auto unit_row(std::size_t position) const {
    return cb_->unit_codewords().row(absolute(position));
  }
  const Codebook& codebook() const { return *cb_; }

 private:
  const Codebook* cb_;
  std::span<const std::uint32_t> rows_;
  bool subset_ = false;
};

/// Fixed orthonormal dimension reduction. down is d_proj x dim with
/// orthonormal rows and up = down^T, so up * down is an orthogonal projector.
struct ProjectionPair {
  Matrix down;
  Matrix up;
  std::uint64_t seed = 0;

  std::size_t d_proj() const { return static_cast<std::size_t>(down.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(down.cols()); }
};

ProjectionPair make_projection(std::size_t dim, std::size_t d_proj, std::uint64_t seed);

struct NormalizedRows {
  Matrix rows;
  // Rows with norm below 1e-12, passed through unchanged.
  std::vector<std::size_t> degenerate;
};

NormalizedRows l2_normalize_rows(const Matrix& m);

// Binary codebook file: "RRVQCB1\0", u32 N, u32 D, u64 seed, N*D f32 (LE).
void write_codebook(const std::filesystem::path& path, const Codebook& cb);
Codebook read_codebook(const std::filesystem::path& path, std::string id = {},
                       bool trainable = false);

}  // namespace rrvq
