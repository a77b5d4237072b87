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

#include "json.hpp"
#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

using namespace rrvq;
using rrvq::testing::error_code_of;
using rrvq::testing::TempDir;

namespace {

// Minimal RIFF writer kept separate from the library's encoder.
struct WavBytes {
  std::string bytes;
  template <typename T>
  void put(T v) {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    bytes.append(b, sizeof(T));
  }
  void tag(const char* t) { bytes.append(t, 4); }
};

std::string pcm16_wav(const std::vector<std::int16_t>& samples, std::uint16_t channels, std::uint32_t rate,
                      std::uint16_t format = 1, std::uint16_t bits = 16) {
  WavBytes w;
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  w.tag("RIFF");
  w.put<std::uint32_t>(36 + data_bytes);
  w.tag("WAVE");
  w.tag("fmt ");
  w.put<std::uint32_t>(16);
  w.put<std::uint16_t>(format);
  w.put<std::uint16_t>(channels);
  w.put<std::uint32_t>(rate);
  w.put<std::uint32_t>(rate * channels * bits / 8);
  w.put<std::uint16_t>(static_cast<std::uint16_t>(channels * bits / 8));
  w.put<std::uint16_t>(bits);
  w.tag("data");
  w.put<std::uint32_t>(data_bytes);
  for (std::int16_t s : samples) w.put(s);
  return w.bytes;
}

void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary) << bytes;
}

std::vector<double> sine(double hz, double amplitude, std::uint32_t rate, std::size_t n) {
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = amplitude * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / rate);
  }
  return s;
}

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j]) ++i; else ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("gaussian frames") {
  const FeatureSet f = synth_gaussian(10000, 8, 1);
  CHECK(f.size() == 10000);
  CHECK(f.dim() == 8);
  CHECK(f.source == FeatureSource::kSynthetic);
  CHECK(f.sample_rate_hz == 0);
  const Vector mean = f.frames.colwise().mean().transpose();
  CHECK(mean.cwiseAbs().maxCoeff() < 0.05);
  CHECK(synth_gaussian(10000, 8, 1).frames == f.frames);
  CHECK_FALSE(synth_gaussian(10000, 8, 2).frames == f.frames);
  const FeatureSet tiny = synth_gaussian(1, 1, 5);
  CHECK(std::isfinite(tiny.frames(0, 0)));
  CHECK(error_code_of([] { synth_gaussian(0, 4, 1); }) == ErrorCode::kInvalidArgument);
  CHECK(error_code_of([] { synth_gaussian(4, 0, 1); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("single-cluster mixture is the gaussian generator") {
  CHECK(synth_gmm(500, 4, 1, 7.5, 3).frames == synth_gaussian(500, 4, 3).frames);
}

TEST_CASE("zero separation mixture passes a two-sample test") {
  const FeatureSet a = synth_gmm(4000, 3, 4, 0.0, 5);
  const FeatureSet b = synth_gaussian(4000, 3, 6);
  // 0.1% critical value of the two-sample KS statistic.
  const double critical = 1.95 * std::sqrt(2.0 / 4000.0);
  for (Eigen::Index c = 0; c < 3; ++c) {
    std::vector<double> xa(4000), xb(4000);
    for (Eigen::Index t = 0; t < 4000; ++t) {
      xa[static_cast<std::size_t>(t)] = a.frames(t, c);
      xb[static_cast<std::size_t>(t)] = b.frames(t, c);
    }
    CHECK(ks_statistic(xa, xb) < critical);
  }
}

TEST_CASE("separated mixture means are recoverable by k-means") {
  const std::uint64_t seed = 7;
  const FeatureSet f = synth_gmm(4000, 2, 2, 20.0, seed);
  // Lloyd iterations seeded with a point and the point farthest from it.
  Matrix c(2, 2);
  c.row(0) = f.frames.row(0);
  Eigen::Index far = 0;
  (f.frames.rowwise() - f.frames.row(0)).rowwise().squaredNorm().maxCoeff(&far);
  c.row(1) = f.frames.row(far);
  for (int it = 0; it < 50; ++it) {
    Matrix sum = Matrix::Zero(2, 2);
    Vector n = Vector::Zero(2);
    for (Eigen::Index t = 0; t < f.frames.rows(); ++t) {
      const int k = (f.frames.row(t) - c.row(0)).squaredNorm() <= (f.frames.row(t) - c.row(1)).squaredNorm() ? 0 : 1;
      sum.row(k) += f.frames.row(t);
      n[k] += 1;
    }
    for (int k = 0; k < 2; ++k) c.row(k) = sum.row(k) / n[k];
  }
  const Matrix means = gmm_means(2, 2, 20.0, seed);
  CHECK(std::abs((means.row(0) - means.row(1)).norm() - 20.0) < 1e-9);
  const double straight = std::max((c.row(0) - means.row(0)).norm(), (c.row(1) - means.row(1)).norm());
  const double swapped = std::max((c.row(0) - means.row(1)).norm(), (c.row(1) - means.row(0)).norm());
  CHECK(std::min(straight, swapped) < 0.5);
}

TEST_CASE("mixture argument checks") {
  CHECK(error_code_of([] { synth_gmm(10, 2, 0, 1.0, 1); }) == ErrorCode::kInvalidArgument);
  CHECK(error_code_of([] { synth_gmm(10, 2, 2, -1.0, 1); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("wav: 16-bit sine") {
  TempDir dir;
  const std::vector<double> s = sine(440.0, 0.5, 44100, 44100);
  std::vector<std::int16_t> pcm(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) pcm[i] = static_cast<std::int16_t>(std::lround(s[i] * 32768.0));
  write_bytes(dir / "sine.wav", pcm16_wav(pcm, 1, 44100));
  const WavAudio a = read_wav(dir / "sine.wav");
  CHECK(a.samples.size() == 44100);
  CHECK(a.sample_rate_hz == 44100);
  CHECK(a.channels == 1);
  const double peak = *std::max_element(a.samples.begin(), a.samples.end());
  CHECK(std::abs(peak - 0.5) < 1e-4);
}

TEST_CASE("wav: stereo with identical channels equals mono") {
  TempDir dir;
  const std::vector<double> s = sine(1000.0, 0.3, 22050, 5000);
  std::vector<double> stereo;
  for (double v : s) {
    stereo.push_back(v);
    stereo.push_back(v);
  }
  for (const WavEncoding enc : {WavEncoding::kPcm16, WavEncoding::kFloat32}) {
    write_wav(dir / "mono.wav", s, 1, 22050, enc);
    write_wav(dir / "stereo.wav", stereo, 2, 22050, enc);
    const WavAudio m = read_wav(dir / "mono.wav");
    const WavAudio st = read_wav(dir / "stereo.wav");
    CHECK(st.channels == 2);
    REQUIRE(m.samples.size() == st.samples.size());
    double worst = 0;
    for (std::size_t i = 0; i < m.samples.size(); ++i) worst = std::max(worst, std::abs(m.samples[i] - st.samples[i]));
    CHECK(worst <= 1e-7);
  }
}

TEST_CASE("wav: float round trip") {
  TempDir dir;
  const std::vector<double> s = sine(300.0, 0.9, 16000, 1000);
  write_wav(dir / "f.wav", s, 1, 16000, WavEncoding::kFloat32);
  const WavAudio a = read_wav(dir / "f.wav");
  REQUIRE(a.samples.size() == s.size());
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(a.samples[i] == static_cast<double>(static_cast<float>(s[i])));
}

TEST_CASE("wav: malformed and unsupported files") {
  TempDir dir;
  write_bytes(dir / "empty.wav", pcm16_wav({}, 1, 44100));
  CHECK(error_code_of([&] { read_wav(dir / "empty.wav"); }) == ErrorCode::kParseError);

  write_bytes(dir / "junk.wav", "this is not a wav file at all");
  CHECK(error_code_of([&] { read_wav(dir / "junk.wav"); }) == ErrorCode::kParseError);

  std::string truncated = pcm16_wav(std::vector<std::int16_t>(100, 1), 1, 8000);
  truncated.resize(truncated.size() - 50);
  write_bytes(dir / "short.wav", truncated);
  CHECK(error_code_of([&] { read_wav(dir / "short.wav"); }) == ErrorCode::kParseError);

  // 8-bit PCM: valid header, unsupported encoding.
  std::string eight = pcm16_wav(std::vector<std::int16_t>(10, 0), 1, 8000, 1, 8);
  write_bytes(dir / "u8.wav", eight);
  CHECK(error_code_of([&] { read_wav(dir / "u8.wav"); }) == ErrorCode::kUnsupportedFormat);

  // A-law format tag.
  write_bytes(dir / "alaw.wav", pcm16_wav(std::vector<std::int16_t>(10, 0), 1, 8000, 6, 16));
  CHECK(error_code_of([&] { read_wav(dir / "alaw.wav"); }) == ErrorCode::kUnsupportedFormat);

  CHECK(error_code_of([&] { read_wav(dir / "missing.wav"); }) == ErrorCode::kIoError);
}

TEST_CASE("stft satisfies Parseval per frame") {
  std::mt19937 gen(31);
  std::normal_distribution<double> normal;
  std::vector<double> noise(16384);
  for (double& v : noise) v = normal(gen);
  const std::size_t n_fft = 1024, hop = 256;
  const Matrix mag = stft_magnitude(noise, n_fft, hop);
  CHECK(static_cast<std::size_t>(mag.rows()) == (noise.size() - n_fft) / hop + 1);
  CHECK(static_cast<std::size_t>(mag.cols()) == n_fft / 2 + 1);

  double spectral = 0, windowed = 0, raw = 0;
  for (Eigen::Index t = 0; t < mag.rows(); ++t) {
    double e = mag(t, 0) * mag(t, 0) + mag(t, n_fft / 2) * mag(t, n_fft / 2);
    for (std::size_t k = 1; k < n_fft / 2; ++k) e += 2.0 * mag(t, static_cast<Eigen::Index>(k)) * mag(t, static_cast<Eigen::Index>(k));
    e /= static_cast<double>(n_fft);
    double w_energy = 0;
    for (std::size_t i = 0; i < n_fft; ++i) {
      const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / n_fft);
      const double x = noise[static_cast<std::size_t>(t) * hop + i];
      w_energy += (w * x) * (w * x);
      raw += x * x;
    }
    CHECK(std::abs(e - w_energy) < 1e-9 * w_energy);
    spectral += e;
    windowed += w_energy;
  }
  CHECK(std::abs(spectral - windowed) < 0.01 * windowed);
  // The Hann window keeps 3/8 of the energy of white noise.
  CHECK(std::abs(spectral / (0.375 * raw) - 1.0) < 0.01);
}

TEST_CASE("mel filterbank shape") {
  const Matrix fb = mel_filterbank(44100, 1024, 32);
  CHECK(fb.rows() == 32);
  CHECK(fb.cols() == 513);
  CHECK(fb.minCoeff() >= 0.0);
  for (Eigen::Index m = 0; m < fb.rows(); ++m) CHECK(fb.row(m).maxCoeff() > 0.0);
  const std::vector<double> c = mel_band_centres(44100, 32);
  CHECK(c.size() == 32);
  CHECK(std::is_sorted(c.begin(), c.end()));
  CHECK(c.back() < 22050.0);
  // Below 1 kHz the scale is linear.
  CHECK(std::abs((c[2] - c[1]) - (c[1] - c[0])) < 1e-9);
  CHECK(error_code_of([] { mel_filterbank(44100, 64, 33); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("a tone at a band centre peaks in that band") {
  const std::uint32_t rate = 44100;
  const std::vector<double> centres = mel_band_centres(rate, 32);
  for (std::size_t band : {4u, 10u, 16u, 24u, 30u}) {
    const FeatureSet f = log_mel_frames(sine(centres[band], 0.5, rate, 8192), rate);
    for (Eigen::Index t = 0; t < f.frames.rows(); ++t) {
      Eigen::Index arg = 0;
      f.frames.row(t).maxCoeff(&arg);
      CHECK(static_cast<std::size_t>(arg) == band);
    }
  }
}

TEST_CASE("silence maps to the log floor") {
  const FeatureSet f = log_mel_frames(std::vector<double>(4096, 0.0), 44100);
  CHECK(f.frames.rows() == (4096 - 1024) / 256 + 1);
  CHECK(f.frames.cols() == 32);
  CHECK((f.frames.array() == static_cast<double>(static_cast<float>(std::log(1e-5)))).all());
  CHECK(f.source == FeatureSource::kAudio);
  CHECK(f.sample_rate_hz == 44100);
  const auto meta = nlohmann::json::parse(f.metadata_json);
  CHECK(meta["n_fft"] == 1024);
  CHECK(meta["n_mels"] == 32);
}

TEST_CASE("log-mel frames shift with the signal") {
  std::mt19937 gen(32);
  std::normal_distribution<double> normal;
  std::vector<double> s(8192);
  for (double& v : s) v = 0.1 * normal(gen);
  std::vector<double> delayed(256, 0.0);
  delayed.insert(delayed.end(), s.begin(), s.end());
  const FeatureSet a = log_mel_frames(s, 44100);
  const FeatureSet b = log_mel_frames(delayed, 44100);
  REQUIRE(b.frames.rows() == a.frames.rows() + 1);
  CHECK((b.frames.bottomRows(a.frames.rows()) - a.frames).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(log_mel_frames(s, 44100).frames == a.frames);
}

TEST_CASE("front-end argument checks") {
  CHECK(error_code_of([] { log_mel_frames(std::vector<double>(1000, 0.0), 44100); }) == ErrorCode::kInvalidArgument);
  CHECK(error_code_of([] { log_mel_frames(std::vector<double>(4096, 0.0), 44100, {1000, 256, 32}); }) ==
        ErrorCode::kInvalidArgument);
  CHECK(error_code_of([] { log_mel_frames(std::vector<double>(4096, 0.0), 44100, {1024, 2048, 32}); }) ==
        ErrorCode::kInvalidArgument);
  CHECK(error_code_of([] { log_mel_frames(std::vector<double>(4096, 0.0), 44100, {1024, 256, 600}); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("feature file round trip") {
  TempDir dir;
  const FeatureSet f = synth_gmm(123, 7, 3, 2.0, 9);
  write_features(dir / "f.rrf", f);
  const FeatureSet back = read_features(dir / "f.rrf");
  CHECK(back.frames == f.frames);
  CHECK(back.source == FeatureSource::kSynthetic);
  const auto meta = nlohmann::json::parse(back.metadata_json);
  CHECK(meta["generator"] == "gmm");
  CHECK(meta["source"] == "synthetic");

  const FeatureSet audio = log_mel_frames(sine(440, 0.5, 16000, 4096), 16000, {512, 128, 16});
  write_features(dir / "a.rrf", audio);
  const FeatureSet audio_back = read_features(dir / "a.rrf");
  CHECK(audio_back.frames == audio.frames);
  CHECK(audio_back.sample_rate_hz == 16000);
  CHECK(audio_back.source == FeatureSource::kAudio);
}

TEST_CASE("feature file layout and errors") {
  TempDir dir;
  Matrix m(1, 2);
  m << 1.5, -2.0;
  write_features(dir / "f.rrf", make_feature_set(m, 0, FeatureSource::kSynthetic, "{}"));
  std::ifstream in(dir / "f.rrf", std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(bytes.substr(0, 8) == std::string("RRVQF1\0\0", 8));
  std::uint32_t header[4];
  std::memcpy(header, bytes.data() + 8, 16);
  CHECK(header[0] == 1);
  CHECK(header[1] == 2);
  CHECK(header[2] == 0);
  CHECK(bytes.size() == 24 + header[3] + 8);

  std::string truncated = bytes.substr(0, bytes.size() - 3);
  write_bytes(dir / "t.rrf", truncated);
  CHECK(error_code_of([&] { read_features(dir / "t.rrf"); }) == ErrorCode::kParseError);

  std::string bad = bytes;
  bad[0] = 'X';
  write_bytes(dir / "bad.rrf", bad);
  CHECK(error_code_of([&] { read_features(dir / "bad.rrf"); }) == ErrorCode::kParseError);

  WavBytes empty;
  empty.bytes = std::string("RRVQF1\0\0", 8);
  empty.put<std::uint32_t>(0);
  empty.put<std::uint32_t>(4);
  empty.put<std::uint32_t>(0);
  empty.put<std::uint32_t>(2);
  empty.bytes += "{}";
  write_bytes(dir / "empty.rrf", empty.bytes);
  CHECK(error_code_of([&] { read_features(dir / "empty.rrf"); }) == ErrorCode::kInvalidArgument);

  CHECK(error_code_of([&] { read_features(dir / "missing.rrf"); }) == ErrorCode::kIoError);
}

}  // TEST_SUITE
