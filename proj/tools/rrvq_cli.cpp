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

// Command-line front end. Talks to the library through the C API only.

#include "CLI11.hpp"
#include "json.hpp"
#include "rrvq/rrvq.h"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitIo = 3;

struct CliError {
  int exit_code;
  std::string message;
};

int exit_code_for(rrvq_status s) {
  switch (s) {
    case RRVQ_OK: return kExitOk;
    case RRVQ_ERR_INVALID_ARGUMENT:
    case RRVQ_ERR_CAPACITY_EXCEEDED: return kExitInvalid;
    case RRVQ_ERR_PARSE:
    case RRVQ_ERR_UNSUPPORTED_FORMAT:
    case RRVQ_ERR_IO: return kExitIo;
    default: return kExitInternal;
  }
}

void check(rrvq_status s) {
  if (s != RRVQ_OK) throw CliError{exit_code_for(s), std::string(rrvq_status_name(s)) + ": " + rrvq_last_error()};
}

struct FreeString {
  void operator()(char* s) const { rrvq_string_free(s); }
};
using OwnedString = std::unique_ptr<char, FreeString>;

struct FreeFeatures {
  void operator()(rrvq_features* f) const { rrvq_features_free(f); }
};
struct FreeStack {
  void operator()(rrvq_stack* s) const { rrvq_stack_free(s); }
};
struct FreeResult {
  void operator()(rrvq_result* r) const { rrvq_result_free(r); }
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError{kExitIo, "cannot open " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw CliError{kExitIo, "cannot write " + path};
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw CliError{kExitIo, path + ": " + e.what()};
  }
}

struct FeaturesArgs {
  std::string wav;
  std::string synth;
  std::size_t frames = 20000;
  std::size_t dim = 8;
  std::size_t clusters = 2;
  double separation = 0.0;
  std::uint64_t seed = 1;
  std::size_t n_fft = 1024;
  std::size_t hop = 256;
  std::size_t n_mels = 32;
  std::string out;
};

void run_features(const FeaturesArgs& a) {
  rrvq_features* raw = nullptr;
  if (!a.wav.empty()) {
    check(rrvq_features_from_wav(a.wav.c_str(), a.n_fft, a.hop, a.n_mels, &raw));
  } else if (a.synth == "gaussian") {
    check(rrvq_features_synth_gaussian(a.frames, a.dim, a.seed, &raw));
  } else if (a.synth == "gmm") {
    check(rrvq_features_synth_gmm(a.frames, a.dim, a.clusters, a.separation, a.seed, &raw));
  } else {
    throw CliError{kExitInvalid, "features: give --wav PATH or --synth gaussian|gmm"};
  }
  std::unique_ptr<rrvq_features, FreeFeatures> f(raw);
  check(rrvq_features_write(f.get(), a.out.c_str()));
  std::cerr << "wrote " << rrvq_features_frames(f.get()) << " frames of dimension " << rrvq_features_dim(f.get())
            << " to " << a.out << '\n';
}

struct TrainArgs {
  std::string features;
  std::string config;
  std::string out;
  std::string report;
  std::optional<std::uint64_t> seed;
};

void run_train(const TrainArgs& a) {
  rrvq_features* f_raw = nullptr;
  check(rrvq_features_read(a.features.c_str(), &f_raw));
  std::unique_ptr<rrvq_features, FreeFeatures> f(f_raw);

  nlohmann::json cfg = read_json(a.config);
  if (!cfg.is_object()) throw CliError{kExitInvalid, a.config + ": config must be a JSON object"};
  if (!cfg.contains("D")) cfg["D"] = rrvq_features_dim(f.get());
  std::uint64_t seed = 1;
  if (a.seed) {
    seed = *a.seed;
  } else if (cfg.contains("seeds") && cfg["seeds"].is_array() && !cfg["seeds"].empty()) {
    seed = cfg["seeds"][0].get<std::uint64_t>();
  }

  rrvq_stack* s_raw = nullptr;
  check(rrvq_stack_from_config(cfg.dump().c_str(), seed, &s_raw));
  std::unique_ptr<rrvq_stack, FreeStack> stack(s_raw);
  char* report = nullptr;
  check(rrvq_stack_fit(stack.get(), f.get(), &report));
  OwnedString owned(report);
  check(rrvq_stack_save(stack.get(), a.out.c_str()));
  if (!a.report.empty()) write_text(a.report, owned.get());
  for (const auto& w : nlohmann::json::parse(owned.get())["warnings"]) {
    std::cerr << "warning: " << w.get<std::string>() << '\n';
  }
  std::cerr << "trained " << rrvq_stack_stages(stack.get()) << "-stage stack, saved to " << a.out << '\n';
}

struct QuantizeArgs {
  std::string stack;
  std::string features;
  std::string tokens;
  std::string metrics = "-";
};

void run_quantize(const QuantizeArgs& a) {
  rrvq_stack* s_raw = nullptr;
  check(rrvq_stack_load(a.stack.c_str(), &s_raw));
  std::unique_ptr<rrvq_stack, FreeStack> stack(s_raw);
  rrvq_features* f_raw = nullptr;
  check(rrvq_features_read(a.features.c_str(), &f_raw));
  std::unique_ptr<rrvq_features, FreeFeatures> f(f_raw);

  rrvq_result* r_raw = nullptr;
  check(rrvq_quantize(stack.get(), f.get(), &r_raw));
  std::unique_ptr<rrvq_result, FreeResult> result(r_raw);
  if (!a.tokens.empty()) check(rrvq_result_write_tokens(result.get(), a.tokens.c_str()));
  char* metrics = nullptr;
  check(rrvq_result_metrics_json(result.get(), &metrics));
  OwnedString owned(metrics);
  write_text(a.metrics, owned.get());
}

struct ExperimentArgs {
  std::string config;
  std::string json_out = "-";
  std::string csv_out;
  std::optional<std::size_t> truncate;
};

void run_experiment(const ExperimentArgs& a) {
  const std::string cfg = read_json(a.config).dump();
  if (a.truncate) {
    char* report = nullptr;
    check(rrvq_truncation_run(cfg.c_str(), *a.truncate, &report));
    OwnedString owned(report);
    write_text(a.json_out, owned.get());
    return;
  }
  char* json_text = nullptr;
  char* csv_text = nullptr;
  check(rrvq_experiment_run(cfg.c_str(), &json_text, a.csv_out.empty() ? nullptr : &csv_text));
  OwnedString owned_json(json_text);
  OwnedString owned_csv(csv_text);
  write_text(a.json_out, owned_json.get());
  if (!a.csv_out.empty()) write_text(a.csv_out, owned_csv.get());
}

struct GridArgs {
  std::vector<std::string> configs;
  std::string out = "-";
};

void run_grid(const GridArgs& a) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& path : a.configs) {
    nlohmann::json j = read_json(path);
    if (j.is_array()) {
      for (auto& item : j) list.push_back(std::move(item));
    } else {
      list.push_back(std::move(j));
    }
  }
  char* csv = nullptr;
  check(rrvq_grid_run(list.dump().c_str(), &csv));
  OwnedString owned(csv);
  write_text(a.out, owned.get());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Residual vector quantization with randomized stages"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("rrvq 0.1.0 (rng ") + rrvq_rng_algorithm() + ")");

  FeaturesArgs fa;
  auto* features = app.add_subcommand("features", "Extract log-mel frames from a WAV file or synthesize frames");
  auto* wav_opt = features->add_option("--wav", fa.wav, "Input WAV file (PCM16 or float32)")->check(CLI::ExistingFile);
  features->add_option("--synth", fa.synth, "Synthetic source")->check(CLI::IsMember({"gaussian", "gmm"}))->excludes(wav_opt);
  features->add_option("--frames", fa.frames, "Synthetic frame count");
  features->add_option("--dim", fa.dim, "Synthetic dimension");
  features->add_option("--clusters", fa.clusters, "Mixture components");
  features->add_option("--separation", fa.separation, "Mixture mean spacing");
  features->add_option("--seed", fa.seed, "Generator seed");
  features->add_option("--n-fft", fa.n_fft, "STFT size");
  features->add_option("--hop", fa.hop, "STFT hop");
  features->add_option("--n-mels", fa.n_mels, "Mel bands");
  features->add_option("-o,--out", fa.out, "Output feature file")->required();

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train a stack on a feature file");
  train->add_option("--features", ta.features, "Training feature file")->required();
  train->add_option("--config", ta.config, "Experiment config JSON")->required();
  train->add_option("--seed", ta.seed, "Master seed (default: first config seed)");
  train->add_option("-o,--out", ta.out, "Output stack directory")->required();
  train->add_option("--report", ta.report, "Write the fit report JSON here");

  QuantizeArgs qa;
  auto* quantize = app.add_subcommand("quantize", "Quantize a feature file with a saved stack");
  quantize->add_option("--stack", qa.stack, "Stack directory")->required();
  quantize->add_option("--features", qa.features, "Feature file")->required();
  quantize->add_option("--tokens", qa.tokens, "Output token file");
  quantize->add_option("--metrics", qa.metrics, "Metrics JSON output ('-' for stdout)");

  ExperimentArgs ea;
  auto* experiment = app.add_subcommand("experiment", "Run a multi-seed experiment from a config");
  experiment->add_option("--config", ea.config, "Experiment config JSON")->required();
  experiment->add_option("--json", ea.json_out, "Report JSON output ('-' for stdout)");
  experiment->add_option("--csv", ea.csv_out, "Per-seed CSV output");
  experiment->add_option("--truncate", ea.truncate, "Compare the first K stages against the full stack");

  GridArgs ga;
  auto* grid = app.add_subcommand("grid", "Run several configs and merge them into one table");
  grid->add_option("configs", ga.configs, "Config files (objects or arrays of objects)")->required();
  grid->add_option("-o,--out", ga.out, "CSV output ('-' for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*features) run_features(fa);
    if (*train) run_train(ta);
    if (*quantize) run_quantize(qa);
    if (*experiment) run_experiment(ea);
    if (*grid) run_grid(ga);
  } catch (const CliError& e) {
    std::cerr << "rrvq: " << e.message << '\n';
    return e.exit_code;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "rrvq: invalid config: " << e.what() << '\n';
    return kExitInvalid;
  }
  return kExitOk;
}
