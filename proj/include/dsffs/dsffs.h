/*
 * Copyright 2026 The DSFFS Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * C interface to the dynamic sparse federated feature selection library.
 *
 * Objects are opaque handles owned by the caller and released with the
 * matching *_free function. Every fallible call returns a dsffs_status; on
 * failure dsffs_last_error() describes the problem (thread-local, valid until
 * the next failing call on the same thread).
 */

#ifndef DSFFS_DSFFS_H_
#define DSFFS_DSFFS_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(DSFFS_BUILDING_LIBRARY)
#define DSFFS_API __declspec(dllexport)
#else
#define DSFFS_API __declspec(dllimport)
#endif
#else
#define DSFFS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values double as process exit codes in the command-line tool. */
typedef enum dsffs_status {
  DSFFS_OK = 0,
  DSFFS_ERROR_ARGUMENT = 1, /* null handle, index out of range */
  DSFFS_ERROR_CONFIG = 2,   /* invalid configuration or dataset spec */
  DSFFS_ERROR_RUNTIME = 3   /* I/O, malformed data, internal failure */
} dsffs_status;

typedef enum dsffs_log_level {
  DSFFS_LOG_QUIET = 0,
  DSFFS_LOG_WARNING = 1,
  DSFFS_LOG_INFO = 2
} dsffs_log_level;

typedef struct dsffs_config dsffs_config;
typedef struct dsffs_result dsffs_result;

typedef struct dsffs_round_metrics {
  size_t round;
  double test_accuracy;
  uint64_t cumulative_flops;
  uint64_t cumulative_upload_bits;
  uint64_t cumulative_download_bits;
  size_t connected_input_neurons;
  size_t global_nnz;
  double client_drift;
} dsffs_round_metrics;

DSFFS_API const char* dsffs_version(void);
DSFFS_API const char* dsffs_last_error(void);
DSFFS_API void dsffs_set_log_level(dsffs_log_level level);

/* Strings returned through char** out-parameters. */
DSFFS_API void dsffs_string_free(char* s);

/* Configuration. A fresh config holds the defaults. */
DSFFS_API dsffs_status dsffs_config_new(dsffs_config** out);
DSFFS_API dsffs_status dsffs_config_parse(const char* text, dsffs_config** out);
DSFFS_API dsffs_status dsffs_config_load(const char* path, dsffs_config** out);
DSFFS_API dsffs_status dsffs_config_set(dsffs_config* config, const char* key,
                                        const char* value);
/* Applies the DSFFS_SEED environment variable when set. */
DSFFS_API dsffs_status dsffs_config_apply_env(dsffs_config* config);
DSFFS_API dsffs_status dsffs_config_validate(const dsffs_config* config);
/* Effective value of one key, or the whole sorted `key = value` listing when
 * key is NULL. */
DSFFS_API dsffs_status dsffs_config_get(const dsffs_config* config,
                                        const char* key, char** out);
DSFFS_API void dsffs_config_free(dsffs_config* config);

/* Runs training and writes metrics.csv, selected_features.json and
 * config.resolved into out_dir (config out_dir when NULL; no files when ""). */
DSFFS_API dsffs_status dsffs_run(const dsffs_config* config, const char* out_dir,
                                 dsffs_result** out);
/* Three-curve synthetic experiment; writes figure1.csv, figure1_report.json
 * and config.resolved. */
DSFFS_API dsffs_status dsffs_figure1(const dsffs_config* config,
                                     const char* out_dir, dsffs_result** out);
/* Dataset summary; partition is "M,alpha,seed" or NULL. */
DSFFS_API dsffs_status dsffs_inspect(const char* dataset_spec,
                                     const char* partition, char** report);

DSFFS_API size_t dsffs_result_rounds(const dsffs_result* result);
DSFFS_API dsffs_status dsffs_result_round(const dsffs_result* result,
                                          size_t index,
                                          dsffs_round_metrics* out);
DSFFS_API size_t dsffs_result_feature_count(const dsffs_result* result);
DSFFS_API dsffs_status dsffs_result_feature(const dsffs_result* result,
                                            size_t rank, size_t* index,
                                            double* strength);
/* Figure-1 results only: fraction of ground-truth informative features among
 * the selected ones. Negative for plain runs. */
DSFFS_API double dsffs_result_recovery(const dsffs_result* result);
/* Human-readable multi-line summary, owned by the result. */
DSFFS_API const char* dsffs_result_summary(const dsffs_result* result);
DSFFS_API void dsffs_result_free(dsffs_result* result);

#ifdef __cplusplus
}
#endif

#endif /* DSFFS_DSFFS_H_ */
