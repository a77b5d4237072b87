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

#include "rrvq/features.hpp"

#include "binary_io.hpp"
#include "json.hpp"
#include "rrvq/error.hpp"
#include "rrvq/rng.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

namespace rrvq {
namespace {

constexpr std::string_view kFeatureMagic{"RRVQF1\0\0", 8};
constexpr double kLogFloor = 1e-5;

constexpr std::uint16_t kWavPcm = 1;
constexpr std::uint16_t kWavFloat = 3;
constexpr std::uint16_t kWavExtensible = 0xFFFE;

// Slaney mel scale: linear below 1 kHz, logarithmic above.
constexpr double kMelLinearStep = 200.0 / 3.0;
constexpr double kMelLogStartHz = 1000.0;
constexpr double kMelLogStart = kMelLogStartHz / kMelLinearStep;

double mel_log_step() { return std::log(6.4) / 27.0; }

double hz_to_mel(double hz) {
  if (hz < kMelLogStartHz) return hz / kMelLinearStep;
  return kMelLogStart + std::log(hz / kMelLogStartHz) / mel_log_step();
}

double mel_to_hz(double mel) {
  if (mel < kMelLogStart) return mel * kMelLinearStep;
  return kMelLogStartHz * std::exp(mel_log_step() * (mel - kMelLogStart));
}

std::vector<double> mel_edges(std::uint32_t sample_rate_hz, std::size_t n_mels) {
  const double lo = hz_to_mel(0.0);
  const double hi = hz_to_mel(sample_rate_hz / 2.0);
  std::vector<double> hz(n_mels + 2);
  for (std::size_t i = 0; i < hz.size(); ++i) {
    hz[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_mels + 1));
  }
  return hz;
}

bool is_power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

struct FftwPlanDeleter {
  void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};
struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

}  // namespace

FeatureSet make_feature_set(Matrix frames, std::uint32_t sample_rate_hz, FeatureSource source,
                            std::string metadata_json) {
  require(frames.rows() >= 1 && frames.cols() >= 1, "feature set needs T >= 1 and D >= 1");
  require(frames.allFinite(), "feature frames must be finite");
  round_to_f32(frames);
  return FeatureSet{std::move(frames), sample_rate_hz, source, std::move(metadata_json)};
}

FeatureSet synth_gaussian(std::size_t frames, std::size_t dim, std::uint64_t seed) {
  require(frames >= 1 && dim >= 1, "synth_gaussian: T and D must be positive");
  Rng noise(seed, {stream::kNoise});
  Matrix m(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = noise.normal();
  nlohmann::json meta = {{"generator", "gaussian"}, {"frames", frames}, {"dim", dim}, {"seed", seed}};
  return make_feature_set(std::move(m), 0, FeatureSource::kSynthetic, meta.dump());
}

Matrix gmm_means(std::size_t dim, std::size_t clusters, double separation, std::uint64_t seed) {
  require(clusters >= 1, "synth_gmm: need at least one cluster");
  require(separation >= 0.0 && std::isfinite(separation), "synth_gmm: separation must be >= 0");
  Rng rng(seed, {stream::kDirection});
  Vector dir(static_cast<Eigen::Index>(dim));
  do {
    for (Eigen::Index i = 0; i < dir.size(); ++i) dir[i] = rng.normal();
  } while (dir.norm() == 0.0);
  dir.normalize();
  Matrix means(static_cast<Eigen::Index>(clusters), static_cast<Eigen::Index>(dim));
  const double centre = (static_cast<double>(clusters) - 1.0) / 2.0;
  for (std::size_t j = 0; j < clusters; ++j) {
    means.row(static_cast<Eigen::Index>(j)) = separation * (static_cast<double>(j) - centre) * dir.transpose();
  }
  return means;
}

FeatureSet synth_gmm(std::size_t frames, std::size_t dim, std::size_t clusters, double separation,
                     std::uint64_t seed) {
  require(frames >= 1 && dim >= 1, "synth_gmm: T and D must be positive");
  const Matrix means = gmm_means(dim, clusters, separation, seed);
  Rng noise(seed, {stream::kNoise});
  Rng labels(seed, {stream::kLabels});
  Matrix m(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = noise.normal();
  for (Eigen::Index t = 0; t < m.rows(); ++t) {
    m.row(t) += means.row(static_cast<Eigen::Index>(labels.uniform_below(clusters)));
  }
  nlohmann::json meta = {{"generator", "gmm"}, {"frames", frames},      {"dim", dim},
                         {"clusters", clusters}, {"separation", separation}, {"seed", seed}};
  return make_feature_set(std::move(m), 0, FeatureSource::kSynthetic, meta.dump());
}

WavAudio read_wav(const std::filesystem::path& path) {
  const std::string data = detail::read_file(path);
  const std::string what = path.string();
  detail::ByteReader r(data, what);
  if (data.size() < 12 || r.bytes(4) != "RIFF") fail(ErrorCode::kParseError, what + ": not a RIFF file");
  r.le<std::uint32_t>();
  if (r.bytes(4) != "WAVE") fail(ErrorCode::kParseError, what + ": not a WAVE file");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  std::string_view payload;
  bool have_data = false;
  while (r.remaining() >= 8 && !have_data) {
    const std::string_view id = r.bytes(4);
    const auto size = r.le<std::uint32_t>();
    if (size > r.remaining()) fail(ErrorCode::kParseError, what + ": chunk overruns file");
    const std::string_view body = r.bytes(size);
    if (size % 2 == 1 && r.remaining() > 0) r.bytes(1);
    if (id == "fmt ") {
      if (size < 16) fail(ErrorCode::kParseError, what + ": short fmt chunk");
      detail::ByteReader f(body, what);
      format = f.le<std::uint16_t>();
      channels = f.le<std::uint16_t>();
      rate = f.le<std::uint32_t>();
      f.le<std::uint32_t>();
      block_align = f.le<std::uint16_t>();
      bits = f.le<std::uint16_t>();
      if (format == kWavExtensible) {
        if (size < 40) fail(ErrorCode::kParseError, what + ": short extensible fmt chunk");
        f.bytes(8);
        format = f.le<std::uint16_t>();
      }
      have_fmt = true;
    } else if (id == "data") {
      payload = body;
      have_data = true;
    }
  }
  if (!have_fmt) fail(ErrorCode::kParseError, what + ": missing fmt chunk");
  if (!have_data) fail(ErrorCode::kParseError, what + ": missing data chunk");
  if (channels == 0 || rate == 0) fail(ErrorCode::kParseError, what + ": zero channels or sample rate");

  const bool pcm16 = format == kWavPcm && bits == 16;
  const bool float32 = format == kWavFloat && bits == 32;
  if (!pcm16 && !float32) {
    fail(ErrorCode::kUnsupportedFormat, what + ": only 16-bit PCM and 32-bit float WAV are supported (format " +
                                            std::to_string(format) + ", " + std::to_string(bits) + " bits)");
  }
  const std::size_t bytes_per_sample = bits / 8;
  if (block_align != bytes_per_sample * channels) fail(ErrorCode::kParseError, what + ": inconsistent block align");
  const std::size_t n_frames = payload.size() / block_align;
  if (n_frames == 0) fail(ErrorCode::kParseError, what + ": empty data chunk");

  WavAudio out;
  out.sample_rate_hz = rate;
  out.channels = channels;
  out.samples.resize(n_frames);
  detail::ByteReader p(payload, what);
  for (std::size_t t = 0; t < n_frames; ++t) {
    double acc = 0.0;
    for (std::uint16_t c = 0; c < channels; ++c) {
      acc += pcm16 ? static_cast<double>(p.le<std::int16_t>()) / 32768.0 : static_cast<double>(p.f32());
    }
    out.samples[t] = acc / channels;
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const std::vector<double>& interleaved,
               std::uint16_t channels, std::uint32_t sample_rate_hz, WavEncoding encoding) {
  require(channels >= 1 && sample_rate_hz >= 1, "write_wav: channels and sample rate must be positive");
  require(interleaved.size() % channels == 0, "write_wav: sample count not a multiple of channels");
  const std::uint16_t bits = encoding == WavEncoding::kPcm16 ? 16 : 32;
  const std::uint16_t block = static_cast<std::uint16_t>(channels * bits / 8);
  const auto data_bytes = static_cast<std::uint32_t>(interleaved.size() * bits / 8);

  detail::ByteWriter w;
  w.bytes("RIFF");
  w.le<std::uint32_t>(36 + data_bytes);
  w.bytes("WAVE");
  w.bytes("fmt ");
  w.le<std::uint32_t>(16);
  w.le<std::uint16_t>(encoding == WavEncoding::kPcm16 ? kWavPcm : kWavFloat);
  w.le<std::uint16_t>(channels);
  w.le<std::uint32_t>(sample_rate_hz);
  w.le<std::uint32_t>(sample_rate_hz * block);
  w.le<std::uint16_t>(block);
  w.le<std::uint16_t>(bits);
  w.bytes("data");
  w.le<std::uint32_t>(data_bytes);
  for (double v : interleaved) {
    if (encoding == WavEncoding::kPcm16) {
      const double clipped = std::clamp(v, -1.0, 1.0);
      w.le<std::int16_t>(static_cast<std::int16_t>(std::lround(std::min(clipped * 32768.0, 32767.0))));
    } else {
      w.f32(static_cast<float>(v));
    }
  }
  detail::write_file(path, w.data());
}

Matrix stft_magnitude(const std::vector<double>& signal, std::size_t n_fft, std::size_t hop) {
  require(is_power_of_two(n_fft), "stft: n_fft must be a power of two");
  require(hop >= 1 && hop <= n_fft, "stft: need 1 <= hop <= n_fft");
  require(signal.size() >= n_fft, "stft: signal shorter than n_fft");

  const std::size_t frames = (signal.size() - n_fft) / hop + 1;
  const std::size_t bins = n_fft / 2 + 1;
  std::vector<double> window(n_fft);
  for (std::size_t i = 0; i < n_fft; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n_fft));
  }

  std::unique_ptr<double, FftwFree> in(static_cast<double*>(fftw_malloc(sizeof(double) * n_fft)));
  std::unique_ptr<fftw_complex, FftwFree> out(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins)));
  std::unique_ptr<fftw_plan_s, FftwPlanDeleter> plan(
      fftw_plan_dft_r2c_1d(static_cast<int>(n_fft), in.get(), out.get(), FFTW_ESTIMATE));

  Matrix mag(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(bins));
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t i = 0; i < n_fft; ++i) in.get()[i] = signal[t * hop + i] * window[i];
    fftw_execute(plan.get());
    for (std::size_t k = 0; k < bins; ++k) {
      mag(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) = std::hypot(out.get()[k][0], out.get()[k][1]);
    }
  }
  return mag;
}

Matrix mel_filterbank(std::uint32_t sample_rate_hz, std::size_t n_fft, std::size_t n_mels) {
  require(sample_rate_hz > 0, "mel_filterbank: sample rate must be positive");
  require(n_mels >= 1 && n_mels <= n_fft / 2, "mel_filterbank: need 1 <= n_mels <= n_fft / 2");
  const std::size_t bins = n_fft / 2 + 1;
  const std::vector<double> edges = mel_edges(sample_rate_hz, n_mels);
  Matrix fb = Matrix::Zero(static_cast<Eigen::Index>(n_mels), static_cast<Eigen::Index>(bins));
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    const double area_norm = 2.0 / (hi - lo);
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate_hz / static_cast<double>(n_fft);
      const double rise = (f - lo) / (mid - lo);
      const double fall = (hi - f) / (hi - mid);
      fb(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) =
          area_norm * std::max(0.0, std::min(rise, fall));
    }
  }
  return fb;
}

std::vector<double> mel_band_centres(std::uint32_t sample_rate_hz, std::size_t n_mels) {
  const std::vector<double> edges = mel_edges(sample_rate_hz, n_mels);
  return {edges.begin() + 1, edges.end() - 1};
}

FeatureSet log_mel_frames(const std::vector<double>& signal, std::uint32_t sample_rate_hz,
                          const MelOptions& options) {
  require(signal.size() >= options.n_fft, "log_mel_frames: signal shorter than n_fft");
  const Matrix mag = stft_magnitude(signal, options.n_fft, options.hop);
  const Matrix fb = mel_filterbank(sample_rate_hz, options.n_fft, options.n_mels);
  Matrix mel = mag * fb.transpose();
  mel = (mel.array() + kLogFloor).log().matrix();
  nlohmann::json meta = {{"front_end", "log-mel"},
                         {"n_fft", options.n_fft},
                         {"hop", options.hop},
                         {"n_mels", options.n_mels},
                         {"window", "hann-periodic"},
                         {"mel_scale", "slaney"},
                         {"compression", "ln(1e-5 + x)"},
                         {"sample_rate", sample_rate_hz}};
  return make_feature_set(std::move(mel), sample_rate_hz, FeatureSource::kAudio, meta.dump());
}

void write_features(const std::filesystem::path& path, const FeatureSet& features) {
  detail::ByteWriter w;
  w.bytes(kFeatureMagic);
  w.le(static_cast<std::uint32_t>(features.size()));
  w.le(static_cast<std::uint32_t>(features.dim()));
  w.le(features.sample_rate_hz);
  nlohmann::json meta = nlohmann::json::parse(features.metadata_json.empty() ? "{}" : features.metadata_json);
  meta["source"] = features.source == FeatureSource::kAudio ? "audio" : "synthetic";
  const std::string meta_text = meta.dump();
  w.le(static_cast<std::uint32_t>(meta_text.size()));
  w.bytes(meta_text);
  const Matrix& m = features.frames;
  for (Eigen::Index i = 0; i < m.size(); ++i) w.f32(static_cast<float>(m.data()[i]));
  detail::write_file(path, w.data());
}

FeatureSet read_features(const std::filesystem::path& path) {
  const std::string data = detail::read_file(path);
  const std::string what = path.string();
  detail::ByteReader r(data, what);
  if (r.bytes(kFeatureMagic.size()) != kFeatureMagic) {
    fail(ErrorCode::kParseError, what + ": not a feature file (bad magic)");
  }
  const auto t = r.le<std::uint32_t>();
  const auto d = r.le<std::uint32_t>();
  const auto rate = r.le<std::uint32_t>();
  const auto meta_len = r.le<std::uint32_t>();
  const std::string meta_text(r.bytes(meta_len));
  if (t == 0 || d == 0) fail(ErrorCode::kInvalidArgument, what + ": feature file holds no frames");
  if (r.remaining() < std::size_t{t} * d * 4) fail(ErrorCode::kParseError, what + ": truncated file");
  if (r.remaining() > std::size_t{t} * d * 4) fail(ErrorCode::kParseError, what + ": trailing bytes");

  nlohmann::json meta = nlohmann::json::parse(meta_text, nullptr, false);
  if (meta.is_discarded() || !meta.is_object()) fail(ErrorCode::kParseError, what + ": bad metadata JSON");
  const bool audio = meta.value("source", std::string("synthetic")) == "audio";

  Matrix m(t, d);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = r.f32();
  if (!m.allFinite()) fail(ErrorCode::kParseError, what + ": non-finite frame value");
  return FeatureSet{std::move(m), rate, audio ? FeatureSource::kAudio : FeatureSource::kSynthetic,
                    meta.dump()};
}

}  // namespace rrvq
