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

#include "rrvq/codebook.hpp"

#include "binary_io.hpp"
#include "rrvq/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rrvq {
namespace {

constexpr double kDegenerateNorm = 1e-12;
constexpr std::string_view kCodebookMagic{"RRVQCB1\0", 8};

}  // namespace

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kCapacityExceeded: return "capacity-exceeded";
    case ErrorCode::kParseError: return "parse-error";
    case ErrorCode::kUnsupportedFormat: return "unsupported-format";
    case ErrorCode::kIoError: return "io-error";
  }
  return "unknown";
}

Codebook::Codebook(Matrix codewords, std::string id, bool trainable, std::uint64_t seed)
    : codewords_(std::move(codewords)),
      id_(std::move(id)),
      trainable_(trainable),
      seed_(seed) {
  require(codewords_.rows() >= 1 && codewords_.cols() >= 1,
          "codebook needs at least one codeword of dimension >= 1");
  require(all_finite(codewords_), "codebook entries must be finite");
  round_to_f32(codewords_);
  NormalizedRows unit = l2_normalize_rows(codewords_);
  unit_codewords_ = std::move(unit.rows);
  degenerate_rows_ = std::move(unit.degenerate);
}

Codebook init_gaussian(std::size_t n, std::size_t dim, std::uint64_t seed,
                       std::string id, bool trainable) {
  require(n >= 1 && dim >= 1, "init_gaussian: n and dim must be positive");
  Rng rng(seed);
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return Codebook(std::move(m), std::move(id), trainable, seed);
}

SubCodebook sample_subcodebook(const BigCodebook& big, std::size_t s, Rng& rng,
                               std::span<const std::uint32_t> exclude) {
  const std::size_t n = big.size();
  if (s + exclude.size() > n) {
    fail(ErrorCode::kCapacityExceeded,
         "sub-codebook of size " + std::to_string(s) + " with " +
             std::to_string(exclude.size()) + " excluded rows exceeds big codebook size " +
             std::to_string(n));
  }
  std::vector<std::uint8_t> taken(n, 0);
  for (std::uint32_t e : exclude) {
    require(e < n && !taken[e], "sample_subcodebook: exclude set must be distinct and in range");
    taken[e] = 1;
  }

  SubCodebook out;
  out.indices.reserve(s);
  const std::size_t pool = n - exclude.size();
  if (2 * s <= pool) {
    // Sparse draw: rejection against the taken mask.
    while (out.indices.size() < s) {
      const auto u = static_cast<std::uint32_t>(rng.uniform_below(n));
      if (taken[u]) continue;
      taken[u] = 1;
      out.indices.push_back(u);
    }
  } else {
    // Dense draw: partial Fisher-Yates over the remaining pool.
    std::vector<std::uint32_t> candidates;
    candidates.reserve(pool);
    for (std::uint32_t i = 0; i < n; ++i) {
      if (!taken[i]) candidates.push_back(i);
    }
    for (std::size_t i = 0; i < s; ++i) {
      const std::size_t j = i + rng.uniform_below(pool - i);
      std::swap(candidates[i], candidates[j]);
      out.indices.push_back(candidates[i]);
    }
  }
  return out;
}

ProjectionPair make_projection(std::size_t dim, std::size_t d_proj, std::uint64_t seed) {
  require(d_proj >= 1 && d_proj < dim, "make_projection: need 1 <= d_proj < dim");
  Rng rng(seed);
  Matrix g(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(d_proj));
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = rng.normal();

  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(g.rows(), g.cols());

  ProjectionPair p;
  p.up = q;
  p.down = q.transpose();
  p.seed = seed;
  return p;
}

NormalizedRows l2_normalize_rows(const Matrix& m) {
  NormalizedRows out{m, {}};
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double norm = m.row(i).norm();
    if (norm < kDegenerateNorm) {
      out.degenerate.push_back(static_cast<std::size_t>(i));
      continue;
    }
    out.rows.row(i) /= norm;
  }
  return out;
}

void write_codebook(const std::filesystem::path& path, const Codebook& cb) {
  detail::ByteWriter w;
  w.bytes(kCodebookMagic);
  w.le(static_cast<std::uint32_t>(cb.size()));
  w.le(static_cast<std::uint32_t>(cb.dim()));
  w.le(static_cast<std::uint64_t>(cb.seed()));
  const Matrix& m = cb.codewords();
  for (Eigen::Index i = 0; i < m.size(); ++i) w.f32(static_cast<float>(m.data()[i]));
  detail::write_file(path, w.data());
}

Codebook read_codebook(const std::filesystem::path& path, std::string id, bool trainable) {
  const std::string data = detail::read_file(path);
  detail::ByteReader r(data, path.string());
  if (r.bytes(kCodebookMagic.size()) != kCodebookMagic) {
    fail(ErrorCode::kParseError, path.string() + ": not a codebook file (bad magic)");
  }
  const auto n = r.le<std::uint32_t>();
  const auto d = r.le<std::uint32_t>();
  const auto seed = r.le<std::uint64_t>();
  if (n == 0 || d == 0) fail(ErrorCode::kParseError, path.string() + ": empty codebook");
  if (r.remaining() != std::size_t{n} * d * 4) {
    fail(ErrorCode::kParseError, path.string() + ": payload size does not match header");
  }
  Matrix m(n, d);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = r.f32();
  if (!all_finite(m)) fail(ErrorCode::kParseError, path.string() + ": non-finite codeword");
  return Codebook(std::move(m), std::move(id), trainable, seed);
}

}  // namespace rrvq
