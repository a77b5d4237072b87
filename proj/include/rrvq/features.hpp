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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace rrvq {

enum class FeatureSource : std::uint8_t { kSynthetic, kAudio };

/// T x D feature frames (held at f32 precision) plus provenance.
struct FeatureSet {
  Matrix frames;
  std::uint32_t sample_rate_hz = 0;  // 0 for synthetic data
  FeatureSource source = FeatureSource::kSynthetic;
  std::string metadata_json = "{}";  // generator or front-end parameters

  std::size_t size() const { return static_cast<std::size_t>(frames.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(frames.cols()); }
};

/// Validates (T >= 1, D >= 1, finite) and rounds frames to f32.
FeatureSet make_feature_set(Matrix frames, std::uint32_t sample_rate_hz, FeatureSource source,
                            std::string metadata_json);

FeatureSet synth_gaussian(std::size_t frames, std::size_t dim, std::uint64_t seed);

/// Equal-weight mixture of k unit-covariance Gaussians whose means sit on a
/// line through the origin along a seeded random direction, adjacent means
/// `separation` apart. Uses the same noise stream as synth_gaussian, so
/// k = 1 reproduces it exactly.
FeatureSet synth_gmm(std::size_t frames, std::size_t dim, std::size_t clusters,
                     double separation, std::uint64_t seed);

/// Means used by synth_gmm, one row per cluster.
Matrix gmm_means(std::size_t dim, std::size_t clusters, double separation, std::uint64_t seed);

struct WavAudio {
  std::vector<double> samples;  // mono, in [-1, 1]
  std::uint32_t sample_rate_hz = 0;
  std::uint16_t channels = 0;   // channel count in the file before downmix
};

enum class WavEncoding { kPcm16, kFloat32 };

/// 16-bit PCM or 32-bit float WAV; multichannel input is averaged to mono.
WavAudio read_wav(const std::filesystem::path& path);

/// Interleaved samples, clipped to [-1, 1] for PCM16.
void write_wav(const std::filesystem::path& path, const std::vector<double>& interleaved,
               std::uint16_t channels, std::uint32_t sample_rate_hz, WavEncoding encoding);

/// |STFT| with a periodic Hann window, no padding:
/// T = floor((L - n_fft) / hop) + 1 frames of n_fft / 2 + 1 bins.
Matrix stft_magnitude(const std::vector<double>& signal, std::size_t n_fft, std::size_t hop);

/// Slaney-style mel filterbank (area-normalized triangles, 0 .. sr/2),
/// n_mels x (n_fft / 2 + 1).
Matrix mel_filterbank(std::uint32_t sample_rate_hz, std::size_t n_fft, std::size_t n_mels);

/// Centre frequency in Hz of each mel band of mel_filterbank.
std::vector<double> mel_band_centres(std::uint32_t sample_rate_hz, std::size_t n_mels);

struct MelOptions {
  std::size_t n_fft = 1024;
  std::size_t hop = 256;
  std::size_t n_mels = 32;
};

/// ln(1e-5 + mel(|STFT|)) frames.
FeatureSet log_mel_frames(const std::vector<double>& signal, std::uint32_t sample_rate_hz,
                          const MelOptions& options = {});

// "RRVQF1\0\0", u32 T, u32 D, u32 sample_rate, u32 metadata length,
// metadata JSON, T * D f32 (LE, row-major).
void write_features(const std::filesystem::path& path, const FeatureSet& features);
FeatureSet read_features(const std::filesystem::path& path);

}  // namespace rrvq
