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

// Exercises the shared library through its C interface only.

#include "rrvq/rrvq.h"

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <sys/stat.h>

static int failures = 0;

#define CHECK(cond)                                                    \
  do {                                                                 \
    if (!(cond)) {                                                     \
      fprintf(stderr, "%s:%d: CHECK(%s) failed: %s\n", __FILE__,       \
              __LINE__, #cond, rrvq_last_error());                     \
      ++failures;                                                      \
    }                                                                  \
  } while (0)

static const char* kConfig =
    "{\"name\": \"capi\", \"D\": 4, \"n_t\": 1, \"N_t\": 8, \"n_r\": 2, \"N_big\": 64,"
    " \"s\": 8, \"mitigants\": {\"normalize\": true, \"projection\": null},"
    " \"train\": {\"kind\": \"gaussian\", \"frames\": 500},"
    " \"eval\": {\"kind\": \"gaussian\", \"frames\": 200},"
    " \"seeds\": [1, 2], \"passes\": 2, \"gain_frames\": 128}";

static void test_errors(void) {
  rrvq_features* f = NULL;
  CHECK(rrvq_features_synth_gaussian(0, 4, 1, &f) == RRVQ_ERR_INVALID_ARGUMENT);
  CHECK(f == NULL);
  CHECK(strlen(rrvq_last_error()) > 0);
  CHECK(rrvq_features_synth_gaussian(4, 4, 1, NULL) == RRVQ_ERR_INVALID_ARGUMENT);
  CHECK(rrvq_features_read("/nonexistent/features.rrf", &f) == RRVQ_ERR_IO);
  CHECK(rrvq_config_validate("{\"D\": ") == RRVQ_ERR_PARSE);
  CHECK(rrvq_config_validate("{\"bogus\": 1}") == RRVQ_ERR_INVALID_ARGUMENT);
  CHECK(rrvq_config_validate("{\"N_big\": 16, \"s\": 32}") == RRVQ_ERR_CAPACITY_EXCEEDED);
  CHECK(rrvq_config_validate(kConfig) == RRVQ_OK);
  CHECK(strcmp(rrvq_status_name(RRVQ_ERR_CAPACITY_EXCEEDED), "capacity-exceeded") == 0);
  CHECK(strcmp(rrvq_status_name(RRVQ_OK), "ok") == 0);
  CHECK(strlen(rrvq_rng_algorithm()) > 0);
}

static void test_metrics(void) {
  const uint64_t counts[4] = {5, 5, 5, 5};
  double pp = 0.0;
  CHECK(rrvq_perplexity(counts, 4, &pp) == RRVQ_OK);
  CHECK(fabs(pp - 4.0) < 1e-12);
  const uint64_t empty[2] = {0, 0};
  CHECK(rrvq_perplexity(empty, 2, &pp) == RRVQ_ERR_INVALID_ARGUMENT);

  const double ref[3] = {1.0, 2.0, 3.0};
  const double est[3] = {1.0, 2.0, 4.0};
  double sdr = 0.0;
  CHECK(rrvq_si_sdr(ref, ref, 3, &sdr) == RRVQ_OK);
  CHECK(isinf(sdr) && sdr > 0);
  CHECK(rrvq_si_sdr(est, ref, 3, &sdr) == RRVQ_OK);
  CHECK(isfinite(sdr));
}

static void test_pipeline(const char* dir) {
  rrvq_features* train = NULL;
  rrvq_features* eval = NULL;
  CHECK(rrvq_features_synth_gaussian(500, 4, 7, &train) == RRVQ_OK);
  CHECK(rrvq_features_synth_gmm(50, 4, 2, 3.0, 8, &eval) == RRVQ_OK);
  CHECK(rrvq_features_frames(eval) == 50);
  CHECK(rrvq_features_dim(eval) == 4);

  char path[512];
  snprintf(path, sizeof path, "%s/eval.rrf", dir);
  CHECK(rrvq_features_write(eval, path) == RRVQ_OK);
  rrvq_features* back = NULL;
  CHECK(rrvq_features_read(path, &back) == RRVQ_OK);
  double a[200], b[200];
  CHECK(rrvq_features_copy(eval, a) == RRVQ_OK);
  CHECK(rrvq_features_copy(back, b) == RRVQ_OK);
  CHECK(memcmp(a, b, sizeof a) == 0);
  rrvq_features_free(back);

  rrvq_features* arr = NULL;
  CHECK(rrvq_features_from_array(a, 50, 4, &arr) == RRVQ_OK);
  CHECK(rrvq_features_copy(arr, b) == RRVQ_OK);
  CHECK(memcmp(a, b, sizeof a) == 0);
  rrvq_features_free(arr);

  rrvq_stack* stack = NULL;
  CHECK(rrvq_stack_from_config(kConfig, 3, &stack) == RRVQ_OK);
  CHECK(rrvq_stack_dim(stack) == 4);
  CHECK(rrvq_stack_stages(stack) == 3);
  char* report = NULL;
  CHECK(rrvq_stack_fit(stack, train, &report) == RRVQ_OK);
  CHECK(report != NULL && strstr(report, "stage_energies") != NULL);
  rrvq_string_free(report);

  rrvq_result* r = NULL;
  CHECK(rrvq_quantize(stack, eval, &r) == RRVQ_OK);
  CHECK(rrvq_result_frames(r) == 50);
  CHECK(rrvq_result_stages(r) == 3);
  uint32_t tokens[150];
  CHECK(rrvq_result_tokens(r, tokens) == RRVQ_OK);
  for (int i = 0; i < 150; ++i) CHECK(tokens[i] < 8);
  double recon[200];
  CHECK(rrvq_result_reconstruction(r, recon) == RRVQ_OK);
  char* metrics = NULL;
  CHECK(rrvq_result_metrics_json(r, &metrics) == RRVQ_OK);
  CHECK(metrics != NULL && strstr(metrics, "si_sdr_db") != NULL);
  rrvq_string_free(metrics);
  snprintf(path, sizeof path, "%s/tokens.rrt", dir);
  CHECK(rrvq_result_write_tokens(r, path) == RRVQ_OK);

  snprintf(path, sizeof path, "%s/stack", dir);
  CHECK(rrvq_stack_save(stack, path) == RRVQ_OK);
  rrvq_stack* loaded = NULL;
  CHECK(rrvq_stack_load(path, &loaded) == RRVQ_OK);
  rrvq_result* r2 = NULL;
  CHECK(rrvq_quantize(loaded, eval, &r2) == RRVQ_OK);
  double recon2[200];
  CHECK(rrvq_result_reconstruction(r2, recon2) == RRVQ_OK);
  CHECK(memcmp(recon, recon2, sizeof recon) == 0);

  rrvq_features* wrong = NULL;
  CHECK(rrvq_features_synth_gaussian(5, 3, 1, &wrong) == RRVQ_OK);
  rrvq_result* bad = NULL;
  CHECK(rrvq_quantize(stack, wrong, &bad) == RRVQ_ERR_INVALID_ARGUMENT);
  CHECK(bad == NULL);

  rrvq_features_free(wrong);
  rrvq_result_free(r2);
  rrvq_result_free(r);
  rrvq_stack_free(loaded);
  rrvq_stack_free(stack);
  rrvq_features_free(eval);
  rrvq_features_free(train);
  rrvq_features_free(NULL);
  rrvq_stack_free(NULL);
  rrvq_result_free(NULL);
}

static void test_experiments(void) {
  char* json = NULL;
  char* csv = NULL;
  CHECK(rrvq_experiment_run(kConfig, &json, &csv) == RRVQ_OK);
  CHECK(json != NULL && strstr(json, "\"aggregate\"") != NULL);
  CHECK(csv != NULL && strncmp(csv, "seed,", 5) == 0);
  rrvq_string_free(json);
  rrvq_string_free(csv);

  char grid[2048];
  snprintf(grid, sizeof grid, "[%s]", kConfig);
  CHECK(rrvq_grid_run(grid, &csv) == RRVQ_OK);
  CHECK(csv != NULL && strncmp(csv, "metric,capi", 11) == 0);
  rrvq_string_free(csv);
  CHECK(rrvq_grid_run("{}", &csv) == RRVQ_ERR_INVALID_ARGUMENT);

  CHECK(rrvq_truncation_run(kConfig, 2, &json) == RRVQ_OK);
  CHECK(json != NULL && strstr(json, "\"delta\"") != NULL);
  rrvq_string_free(json);
  CHECK(rrvq_truncation_run(kConfig, 4, &json) == RRVQ_ERR_INVALID_ARGUMENT);
}

int main(int argc, char** argv) {
  if (argc < 2) {
    fprintf(stderr, "usage: %s SCRATCH_DIR\n", argv[0]);
    return 2;
  }
  mkdir(argv[1], 0755);
  test_errors();
  test_metrics();
  test_pipeline(argv[1]);
  test_experiments();
  if (failures) {
    fprintf(stderr, "%d check(s) failed\n", failures);
    return 1;
  }
  printf("c api: all checks passed\n");
  return 0;
}
