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

#include "rrvq/rrvq.h"

#include "json.hpp"
#include "rrvq/error.hpp"
#include "rrvq/features.hpp"
#include "rrvq/harness.hpp"
#include "rrvq/metrics.hpp"
#include "rrvq/stack_io.hpp"
#include "rrvq/training.hpp"

#include <cstring>
#include <memory>
#include <new>
#include <string>

struct rrvq_features {
  rrvq::FeatureSet set;
};

struct rrvq_stack {
  rrvq::QuantizerStack stack;
  rrvq::FitOptions fit;
};

struct rrvq_result {
  rrvq::QuantizerStack stack;
  rrvq::Matrix frames;
  rrvq::QuantizationResult result;
};

namespace {

thread_local std::string last_error;

rrvq_status status_of(rrvq::ErrorCode code) {
  switch (code) {
    case rrvq::ErrorCode::kInvalidArgument: return RRVQ_ERR_INVALID_ARGUMENT;
    case rrvq::ErrorCode::kCapacityExceeded: return RRVQ_ERR_CAPACITY_EXCEEDED;
    case rrvq::ErrorCode::kParseError: return RRVQ_ERR_PARSE;
    case rrvq::ErrorCode::kUnsupportedFormat: return RRVQ_ERR_UNSUPPORTED_FORMAT;
    case rrvq::ErrorCode::kIoError: return RRVQ_ERR_IO;
  }
  return RRVQ_ERR_INTERNAL;
}

template <typename F>
rrvq_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return RRVQ_OK;
  } catch (const rrvq::Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const nlohmann::json::parse_error& e) {
    last_error = std::string("JSON parse error: ") + e.what();
    return RRVQ_ERR_PARSE;
  } catch (const nlohmann::json::exception& e) {
    last_error = std::string("invalid JSON value: ") + e.what();
    return RRVQ_ERR_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return RRVQ_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return RRVQ_ERR_INTERNAL;
  }
}

void need(const void* p, const char* name) {
  if (!p) rrvq::fail(rrvq::ErrorCode::kInvalidArgument, std::string(name) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

rrvq::ExperimentConfig parse_config(const char* text) {
  need(text, "config_json");
  return rrvq::config_from_json(nlohmann::json::parse(text));
}

}  // namespace

extern "C" {

const char* rrvq_last_error(void) { return last_error.c_str(); }

const char* rrvq_status_name(rrvq_status status) {
  switch (status) {
    case RRVQ_OK: return "ok";
    case RRVQ_ERR_INVALID_ARGUMENT: return "invalid-argument";
    case RRVQ_ERR_CAPACITY_EXCEEDED: return "capacity-exceeded";
    case RRVQ_ERR_PARSE: return "parse-error";
    case RRVQ_ERR_UNSUPPORTED_FORMAT: return "unsupported-format";
    case RRVQ_ERR_IO: return "io-error";
    case RRVQ_ERR_INTERNAL: return "internal-error";
  }
  return "unknown";
}

const char* rrvq_rng_algorithm(void) { return rrvq::Rng::kAlgorithm.data(); }

void rrvq_string_free(char* s) { std::free(s); }

rrvq_status rrvq_features_synth_gaussian(size_t frames, size_t dim, uint64_t seed, rrvq_features** out) {
  return guarded([&] {
    need(out, "out");
    *out = new rrvq_features{rrvq::synth_gaussian(frames, dim, seed)};
  });
}

rrvq_status rrvq_features_synth_gmm(size_t frames, size_t dim, size_t clusters, double separation,
                                    uint64_t seed, rrvq_features** out) {
  return guarded([&] {
    need(out, "out");
    *out = new rrvq_features{rrvq::synth_gmm(frames, dim, clusters, separation, seed)};
  });
}

rrvq_status rrvq_features_from_wav(const char* path, size_t n_fft, size_t hop, size_t n_mels,
                                   rrvq_features** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    const rrvq::WavAudio audio = rrvq::read_wav(path);
    *out = new rrvq_features{rrvq::log_mel_frames(audio.samples, audio.sample_rate_hz, {n_fft, hop, n_mels})};
  });
}

rrvq_status rrvq_features_from_array(const double* data, size_t frames, size_t dim, rrvq_features** out) {
  return guarded([&] {
    need(data, "data");
    need(out, "out");
    rrvq::require(frames >= 1 && dim >= 1, "rrvq_features_from_array: empty shape");
    rrvq::Matrix m = Eigen::Map<const rrvq::Matrix>(data, static_cast<Eigen::Index>(frames),
                                                    static_cast<Eigen::Index>(dim));
    *out = new rrvq_features{rrvq::make_feature_set(std::move(m), 0, rrvq::FeatureSource::kSynthetic, "{}")};
  });
}

rrvq_status rrvq_features_read(const char* path, rrvq_features** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new rrvq_features{rrvq::read_features(path)};
  });
}

rrvq_status rrvq_features_write(const rrvq_features* f, const char* path) {
  return guarded([&] {
    need(f, "features");
    need(path, "path");
    rrvq::write_features(path, f->set);
  });
}

size_t rrvq_features_frames(const rrvq_features* f) { return f ? f->set.size() : 0; }
size_t rrvq_features_dim(const rrvq_features* f) { return f ? f->set.dim() : 0; }

rrvq_status rrvq_features_copy(const rrvq_features* f, double* out) {
  return guarded([&] {
    need(f, "features");
    need(out, "out");
    std::memcpy(out, f->set.frames.data(), sizeof(double) * static_cast<std::size_t>(f->set.frames.size()));
  });
}

void rrvq_features_free(rrvq_features* f) { delete f; }

rrvq_status rrvq_config_validate(const char* config_json) {
  return guarded([&] { rrvq::validate_config(parse_config(config_json)); });
}

rrvq_status rrvq_stack_from_config(const char* config_json, uint64_t seed, rrvq_stack** out) {
  return guarded([&] {
    need(out, "out");
    const rrvq::ExperimentConfig cfg = parse_config(config_json);
    *out = new rrvq_stack{rrvq::build_stack(cfg, seed), cfg.fit};
  });
}

rrvq_status rrvq_stack_fit(rrvq_stack* stack, const rrvq_features* train, char** report_json) {
  return guarded([&] {
    need(stack, "stack");
    need(train, "train");
    rrvq::FitReport report;
    rrvq::QuantizerStack fitted = rrvq::fit_codebooks(stack->stack, train->set.frames, stack->fit, &report);
    std::string text;
    if (report_json) {
      text = nlohmann::json{{"warnings", report.warnings},
                            {"trainable_stage_energies", report.stage_energies},
                            {"random_stage_gains", report.gains}}
                 .dump(2);
    }
    stack->stack = std::move(fitted);
    if (report_json) *report_json = dup_string(text);
  });
}

rrvq_status rrvq_stack_save(const rrvq_stack* stack, const char* dir) {
  return guarded([&] {
    need(stack, "stack");
    need(dir, "dir");
    rrvq::save_stack(dir, stack->stack, stack->fit);
  });
}

rrvq_status rrvq_stack_load(const char* dir, rrvq_stack** out) {
  return guarded([&] {
    need(dir, "dir");
    need(out, "out");
    rrvq::StoredStack stored = rrvq::load_stack(dir);
    *out = new rrvq_stack{std::move(stored.stack), stored.training};
  });
}

size_t rrvq_stack_dim(const rrvq_stack* stack) { return stack ? stack->stack.dim() : 0; }
size_t rrvq_stack_stages(const rrvq_stack* stack) { return stack ? stack->stack.size() : 0; }
void rrvq_stack_free(rrvq_stack* stack) { delete stack; }

rrvq_status rrvq_quantize(const rrvq_stack* stack, const rrvq_features* frames, rrvq_result** out) {
  return guarded([&] {
    need(stack, "stack");
    need(frames, "frames");
    need(out, "out");
    rrvq::QuantizationResult r = rrvq::quantize_sequence(frames->set.frames, stack->stack);
    *out = new rrvq_result{stack->stack, frames->set.frames, std::move(r)};
  });
}

size_t rrvq_result_frames(const rrvq_result* r) { return r ? r->result.frames.size() : 0; }
size_t rrvq_result_stages(const rrvq_result* r) { return r ? r->result.n_stages : 0; }

rrvq_status rrvq_result_tokens(const rrvq_result* r, uint32_t* out) {
  return guarded([&] {
    need(r, "result");
    need(out, "out");
    const std::vector<std::uint32_t> tokens = rrvq::token_positions(r->result);
    std::memcpy(out, tokens.data(), sizeof(std::uint32_t) * tokens.size());
  });
}

rrvq_status rrvq_result_reconstruction(const rrvq_result* r, double* out) {
  return guarded([&] {
    need(r, "result");
    need(out, "out");
    const std::size_t dim = r->stack.dim();
    for (std::size_t t = 0; t < r->result.frames.size(); ++t) {
      const rrvq::Vector& rec = r->result.frames[t].reconstruction;
      std::memcpy(out + t * dim, rec.data(), sizeof(double) * dim);
    }
  });
}

rrvq_status rrvq_result_write_tokens(const rrvq_result* r, const char* path) {
  return guarded([&] {
    need(r, "result");
    need(path, "path");
    rrvq::write_token_file(path, r->result);
  });
}

rrvq_status rrvq_result_metrics_json(const rrvq_result* r, char** out) {
  return guarded([&] {
    need(r, "result");
    need(out, "out");
    nlohmann::json j = rrvq::evaluation_to_json(rrvq::evaluate(r->stack, r->frames, r->result));
    j["frames"] = r->result.frames.size();
    j["resample_mode"] = std::string(rrvq::to_string(r->result.resample_mode));
    j["master_seed"] = r->result.master_seed;
    *out = dup_string(j.dump(2));
  });
}

void rrvq_result_free(rrvq_result* r) { delete r; }

rrvq_status rrvq_experiment_run(const char* config_json, char** report_json, char** report_csv) {
  return guarded([&] {
    need(report_json, "report_json");
    const rrvq::ExperimentReport report = rrvq::run_experiment(parse_config(config_json));
    const std::string json_text = rrvq::report_to_json(report).dump(2);
    const std::string csv_text = report_csv ? rrvq::report_to_csv(report) : std::string();
    *report_json = dup_string(json_text);
    if (report_csv) *report_csv = dup_string(csv_text);
  });
}

rrvq_status rrvq_grid_run(const char* configs_json, char** csv) {
  return guarded([&] {
    need(configs_json, "configs_json");
    need(csv, "csv");
    const nlohmann::json list = nlohmann::json::parse(configs_json);
    rrvq::require(list.is_array(), "grid: expected a JSON array of configs");
    std::vector<rrvq::ExperimentConfig> cfgs;
    for (const auto& item : list) cfgs.push_back(rrvq::config_from_json(item));
    *csv = dup_string(rrvq::grid_to_csv(rrvq::run_grid(cfgs)));
  });
}

rrvq_status rrvq_truncation_run(const char* config_json, size_t k, char** report_json) {
  return guarded([&] {
    need(report_json, "report_json");
    const rrvq::TruncationReport report = rrvq::compare_truncation(parse_config(config_json), k);
    *report_json = dup_string(rrvq::truncation_to_json(report).dump(2));
  });
}

rrvq_status rrvq_perplexity(const uint64_t* counts, size_t n, double* out) {
  return guarded([&] {
    need(counts, "counts");
    need(out, "out");
    *out = rrvq::perplexity({counts, n});
  });
}

rrvq_status rrvq_si_sdr(const double* estimate, const double* reference, size_t n, double* out) {
  return guarded([&] {
    need(estimate, "estimate");
    need(reference, "reference");
    need(out, "out");
    *out = rrvq::si_sdr({estimate, n}, {reference, n});
  });
}

}  // extern "C"
