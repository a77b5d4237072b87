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


/* C interface to the rrvq library. Every function returns an rrvq_status;
 * on failure a message is available from rrvq_last_error() on the calling
 * thread. Strings returned through char** must be released with
 * rrvq_string_free(). */
#ifndef RRVQ_RRVQ_H_
#define RRVQ_RRVQ_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define RRVQ_API __attribute__((visibility("default")))
#else
#define RRVQ_API
#endif

typedef enum rrvq_status {
  RRVQ_OK = 0,
  RRVQ_ERR_INVALID_ARGUMENT = 1,
  RRVQ_ERR_CAPACITY_EXCEEDED = 2,
  RRVQ_ERR_PARSE = 3,
  RRVQ_ERR_UNSUPPORTED_FORMAT = 4,
  RRVQ_ERR_IO = 5,
  RRVQ_ERR_INTERNAL = 6
} rrvq_status;

typedef struct rrvq_features rrvq_features;
typedef struct rrvq_stack rrvq_stack;
typedef struct rrvq_result rrvq_result;

RRVQ_API const char* rrvq_last_error(void);
RRVQ_API const char* rrvq_status_name(rrvq_status status);
RRVQ_API const char* rrvq_rng_algorithm(void);
RRVQ_API void rrvq_string_free(char* s);

/* Feature sets: T frames of dimension D, row-major. */
RRVQ_API rrvq_status rrvq_features_synth_gaussian(size_t frames, size_t dim, uint64_t seed,
                                                  rrvq_features** out);
RRVQ_API rrvq_status rrvq_features_synth_gmm(size_t frames, size_t dim, size_t clusters,
                                             double separation, uint64_t seed,
                                             rrvq_features** out);
RRVQ_API rrvq_status rrvq_features_from_wav(const char* path, size_t n_fft, size_t hop,
                                            size_t n_mels, rrvq_features** out);
RRVQ_API rrvq_status rrvq_features_from_array(const double* data, size_t frames, size_t dim,
                                              rrvq_features** out);
RRVQ_API rrvq_status rrvq_features_read(const char* path, rrvq_features** out);
RRVQ_API rrvq_status rrvq_features_write(const rrvq_features* f, const char* path);
RRVQ_API size_t rrvq_features_frames(const rrvq_features* f);
RRVQ_API size_t rrvq_features_dim(const rrvq_features* f);
/* Copies frames*dim values into out. */
RRVQ_API rrvq_status rrvq_features_copy(const rrvq_features* f, double* out);
RRVQ_API void rrvq_features_free(rrvq_features* f);

/* Stacks. A config is a JSON object with ExperimentConfig field names. */
RRVQ_API rrvq_status rrvq_config_validate(const char* config_json);
RRVQ_API rrvq_status rrvq_stack_from_config(const char* config_json, uint64_t seed,
                                            rrvq_stack** out);
/* Trains the trainable stages and fits the random-stage gains in place.
 * report_json may be NULL. */
RRVQ_API rrvq_status rrvq_stack_fit(rrvq_stack* stack, const rrvq_features* train,
                                    char** report_json);
RRVQ_API rrvq_status rrvq_stack_save(const rrvq_stack* stack, const char* dir);
RRVQ_API rrvq_status rrvq_stack_load(const char* dir, rrvq_stack** out);
RRVQ_API size_t rrvq_stack_dim(const rrvq_stack* stack);
RRVQ_API size_t rrvq_stack_stages(const rrvq_stack* stack);
RRVQ_API void rrvq_stack_free(rrvq_stack* stack);

/* Quantization results. */
RRVQ_API rrvq_status rrvq_quantize(const rrvq_stack* stack, const rrvq_features* frames,
                                   rrvq_result** out);
RRVQ_API size_t rrvq_result_frames(const rrvq_result* r);
RRVQ_API size_t rrvq_result_stages(const rrvq_result* r);
/* Frame-major token positions, frames*stages values. */
RRVQ_API rrvq_status rrvq_result_tokens(const rrvq_result* r, uint32_t* out);
/* Reconstructions, frames*dim values. */
RRVQ_API rrvq_status rrvq_result_reconstruction(const rrvq_result* r, double* out);
RRVQ_API rrvq_status rrvq_result_write_tokens(const rrvq_result* r, const char* path);
RRVQ_API rrvq_status rrvq_result_metrics_json(const rrvq_result* r, char** out);
RRVQ_API void rrvq_result_free(rrvq_result* r);

/* Experiments. report_csv may be NULL. */
RRVQ_API rrvq_status rrvq_experiment_run(const char* config_json, char** report_json,
                                         char** report_csv);
/* configs_json is a JSON array of configs; writes the merged table as CSV. */
RRVQ_API rrvq_status rrvq_grid_run(const char* configs_json, char** csv);
RRVQ_API rrvq_status rrvq_truncation_run(const char* config_json, size_t k, char** report_json);

/* Metrics. */
RRVQ_API rrvq_status rrvq_perplexity(const uint64_t* counts, size_t n, double* out);
RRVQ_API rrvq_status rrvq_si_sdr(const double* estimate, const double* reference, size_t n,
                                 double* out);

#ifdef __cplusplus
}
#endif

#endif  // RRVQ_RRVQ_H_
