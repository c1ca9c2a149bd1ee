// Copyright 2026 The pdan Authors
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

/* C interface to the pdan point-cloud domain adaptation library.
 *
 * All objects are opaque handles created by pdan_*_create / pdan_*_load /
 * pdan_* runners and released with the matching *_destroy function.
 * Functions return a pdan_status; on failure pdan_last_error() describes
 * the problem (thread-local, valid until the next failing call on the
 * same thread). Strings returned by accessors are owned by the handle. */
#ifndef PDAN_PDAN_H_
#define PDAN_PDAN_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PDAN_API __declspec(dllexport)
#else
#define PDAN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pdan_status {
  PDAN_OK = 0,
  PDAN_ERR_INVALID_ARGUMENT = 1,
  PDAN_ERR_USAGE = 2,
  PDAN_ERR_NUMERICAL = 3,
  PDAN_ERR_IO = 4,
  PDAN_ERR_FORMAT = 5,
  PDAN_ERR_CHECKSUM = 6,
  PDAN_ERR_VERSION = 7,
  PDAN_ERR_TRUNCATED = 8,
  PDAN_ERR_DIMENSION = 9,
  PDAN_ERR_STATE = 10,
  PDAN_ERR_INTERNAL = 11
} pdan_status;

PDAN_API const char* pdan_version(void);
PDAN_API const char* pdan_last_error(void);
PDAN_API const char* pdan_status_name(pdan_status status);
/* Process exit code for a status: 0 ok, 2 usage or bad argument,
 * 3 numerical abort, 4 IO or file format, 1 anything else. */
PDAN_API int pdan_exit_code(pdan_status status);

/* ---- Configuration -------------------------------------------------- */

/* Training settings plus data paths (keys source, target, out, seeds). */
typedef struct pdan_config pdan_config;

PDAN_API pdan_status pdan_config_create(pdan_config** out);
PDAN_API void pdan_config_destroy(pdan_config* config);
/* Unknown keys and malformed values fail with PDAN_ERR_USAGE. */
PDAN_API pdan_status pdan_config_set(pdan_config* config, const char* key, const char* value);
/* Reads key=value lines; '#' starts a comment. Run manifests are accepted
 * too: their result fields are skipped. */
PDAN_API pdan_status pdan_config_load(pdan_config* config, const char* path);
/* Value of one key, or NULL for an unknown key. */
PDAN_API const char* pdan_config_get(const pdan_config* config, const char* key);
/* Sorted key=value lines of the full effective configuration. */
PDAN_API const char* pdan_config_text(const pdan_config* config);
/* Hex hash naming the run directory (the output directory is excluded). */
PDAN_API const char* pdan_config_hash(const pdan_config* config);

/* ---- Synthetic benchmark -------------------------------------------- */

typedef struct pdan_benchmark_options {
  uint32_t classes;         /* 1..10 */
  uint32_t train_per_class;
  uint32_t test_per_class;
  uint32_t points;
  uint64_t seed;
  uint32_t threads;
} pdan_benchmark_options;

PDAN_API void pdan_benchmark_options_default(pdan_benchmark_options* options);
/* Writes <out_dir>/A (clean) and <out_dir>/B (scanned), each holding
 * manifest.txt, train.bin and test.bin. */
PDAN_API pdan_status pdan_generate_benchmark(const pdan_benchmark_options* options, const char* out_dir);

typedef struct pdan_dataset pdan_dataset;

/* `path` is a manifest file or a directory containing manifest.txt. */
PDAN_API pdan_status pdan_dataset_open(const char* path, pdan_dataset** out);
PDAN_API void pdan_dataset_destroy(pdan_dataset* dataset);
PDAN_API const char* pdan_dataset_domain(const pdan_dataset* dataset);
PDAN_API const char* pdan_dataset_profile(const pdan_dataset* dataset);
PDAN_API size_t pdan_dataset_points(const pdan_dataset* dataset);
PDAN_API size_t pdan_dataset_class_count(const pdan_dataset* dataset);
PDAN_API const char* pdan_dataset_class_name(const pdan_dataset* dataset, size_t class_id);
/* Record count of a split, 0 for an unknown split. */
PDAN_API size_t pdan_dataset_count(const pdan_dataset* dataset, const char* split);

/* ---- Training -------------------------------------------------------- */

typedef struct pdan_epoch_record {
  uint64_t seed;
  uint64_t epoch;
  double l_cls;
  double l_dis;
  double l_mmd;
  double source_accuracy;
  double target_accuracy;
  double seconds;
} pdan_epoch_record;

typedef void (*pdan_progress_fn)(void* user, const pdan_epoch_record* record);

typedef struct pdan_run pdan_run;

/* Trains one model per seed as configured. NaN or infinite losses or
 * gradients abort with PDAN_ERR_NUMERICAL naming the parameter group. */
PDAN_API pdan_status pdan_train(const pdan_config* config, pdan_progress_fn progress, void* user, pdan_run** out);
PDAN_API void pdan_run_destroy(pdan_run* run);
PDAN_API const char* pdan_run_dir(const pdan_run* run);
PDAN_API size_t pdan_run_seed_count(const pdan_run* run);
PDAN_API pdan_status pdan_run_seed_result(const pdan_run* run, size_t i, uint64_t* seed, double* target_accuracy,
                                          const char** dir);
PDAN_API double pdan_run_mean_accuracy(const pdan_run* run);
PDAN_API double pdan_run_std_accuracy(const pdan_run* run);

/* ---- Models and evaluation ------------------------------------------ */

typedef struct pdan_model pdan_model;

PDAN_API pdan_status pdan_model_load(const char* checkpoint, pdan_model** out);
PDAN_API void pdan_model_destroy(pdan_model* model);
PDAN_API size_t pdan_model_class_count(const pdan_model* model);

typedef struct pdan_eval pdan_eval;

PDAN_API pdan_status pdan_evaluate(const pdan_model* model, const char* dataset, const char* split, uint32_t batch,
                                   uint32_t threads, pdan_eval** out);
PDAN_API void pdan_eval_destroy(pdan_eval* eval);
PDAN_API double pdan_eval_accuracy(const pdan_eval* eval);
PDAN_API size_t pdan_eval_class_count(const pdan_eval* eval);
/* Accuracy is NaN for a class without samples. */
PDAN_API pdan_status pdan_eval_class(const pdan_eval* eval, size_t class_id, double* accuracy, size_t* support);
PDAN_API size_t pdan_eval_sample_count(const pdan_eval* eval);
PDAN_API int pdan_eval_prediction(const pdan_eval* eval, size_t i);
PDAN_API size_t pdan_eval_confusion(const pdan_eval* eval, size_t true_class, size_t predicted_class);

/* ---- Gradient checks ------------------------------------------------- */

typedef struct pdan_gradcheck pdan_gradcheck;

typedef struct pdan_gradcheck_result {
  const char* name;
  int passed;
  int end_to_end;
  double tolerance;
  double max_rel_err;
  double max_abs_err;
  size_t checked;
  size_t skipped;
} pdan_gradcheck_result;

/* `only` is NULL or a comma-separated list of check names; `inject_fault`
 * is NULL or the name of a check whose analytic gradient gets negated. */
PDAN_API pdan_status pdan_gradcheck_run(uint64_t seed, const char* only, const char* inject_fault,
                                        pdan_gradcheck** out);
PDAN_API void pdan_gradcheck_destroy(pdan_gradcheck* report);
PDAN_API size_t pdan_gradcheck_count(const pdan_gradcheck* report);
PDAN_API pdan_status pdan_gradcheck_entry(const pdan_gradcheck* report, size_t i, pdan_gradcheck_result* out);

/* ---- Node matching --------------------------------------------------- */

typedef struct pdan_matches pdan_matches;

typedef struct pdan_node_match {
  size_t source_node;
  size_t target_node;
  double score;
  double source_position[3];
  double target_position[3];
} pdan_node_match;

/* Runs the model on one source and one target sample and keeps the top_m
 * entries of the node similarity matrix M = H_s H_t^T. */
PDAN_API pdan_status pdan_match_nodes(const pdan_model* model, const char* source_dataset, const char* source_split,
                                      size_t source_index, const char* target_dataset, const char* target_split,
                                      size_t target_index, size_t top_m, pdan_matches** out);
PDAN_API void pdan_matches_destroy(pdan_matches* matches);
PDAN_API size_t pdan_matches_count(const pdan_matches* matches);
PDAN_API pdan_status pdan_matches_entry(const pdan_matches* matches, size_t i, pdan_node_match* out);

#ifdef __cplusplus
}
#endif

#endif /* PDAN_PDAN_H_ */
