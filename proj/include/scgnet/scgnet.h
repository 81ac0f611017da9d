/* Copyright 2026 The SCGNet Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SCGNET_SCGNET_H_
#define SCGNET_SCGNET_H_

/* C interface to the SCG-Net library.
 *
 * Every call returns an scg_status. On failure the message of the most recent
 * error on the calling thread is available from scg_last_error() until the
 * next failing call. Handles are opaque and owned by the caller; release them
 * with the matching *_free function (NULL is accepted). */

#include <stddef.h>
#include <stdint.h>

#if defined(SCGNET_BUILDING_LIBRARY)
#define SCGNET_API __attribute__((visibility("default")))
#else
#define SCGNET_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum scg_status {
  SCG_OK = 0,
  SCG_ERR_INVALID_ARGUMENT = 1,
  SCG_ERR_SHAPE = 2,
  SCG_ERR_DOMAIN = 3,
  SCG_ERR_CONFIG = 4,
  SCG_ERR_IO = 5,
  SCG_ERR_CORRUPT_FILE = 6,
  SCG_ERR_VERSION = 7,
  SCG_ERR_UNKNOWN_SCOPE = 8,
  SCG_ERR_NON_FINITE = 9,
  SCG_ERR_CHECK_FAILED = 10,
  SCG_ERR_INTERNAL = 99
} scg_status;

SCGNET_API const char* scg_version(void);
SCGNET_API const char* scg_status_string(scg_status status);
/* Thread-local; empty string when the last call on this thread succeeded. */
SCGNET_API const char* scg_last_error(void);

/* ---- training ------------------------------------------------------------ */

typedef struct scg_epoch_info {
  size_t epoch;
  double mean_total;
  double mean_dice;
  int has_metrics; /* nonzero when the fields below are filled */
  double train_mf1;
  double train_oa;
  double eval_mf1;
  double eval_oa;
  double mean_diagonal;
} scg_epoch_info;

typedef void (*scg_epoch_callback)(const scg_epoch_info* info, void* user);

typedef struct scg_train_summary {
  size_t epochs_run;
  uint64_t steps;
  double final_loss; /* mean total loss of the last epoch run, NaN if none */
  double train_mf1;
  double train_oa;
  double eval_mf1;
  double eval_oa;
  double mean_diagonal; /* eval scenes */
} scg_train_summary;

/* Trains from a config file (key = value text); SCG_SEED overrides the seed.
 * resume_path may be NULL. Outputs land in out_dir. callback and summary may
 * be NULL. */
SCGNET_API scg_status scg_train(const char* config_path, const char* resume_path, const char* out_dir,
                                scg_epoch_callback callback, void* user, scg_train_summary* summary);

/* ---- models -------------------------------------------------------------- */

typedef struct scg_model scg_model;

typedef struct scg_model_info {
  size_t image_size;
  size_t classes;
  size_t nodes;
  size_t feature_channels;
  size_t parameter_count;
  size_t epoch;
} scg_model_info;

SCGNET_API scg_status scg_model_load(const char* checkpoint_path, scg_model** out);
SCGNET_API void scg_model_free(scg_model* model);
SCGNET_API scg_status scg_model_info_get(const scg_model* model, scg_model_info* info);

/* ---- evaluation ---------------------------------------------------------- */

typedef struct scg_metrics scg_metrics;

/* scene_spec: inline "key=value,..." (offset, count, seed, noise, shapes_min,
 * shapes_max) or a path to a file with one key = value per line; NULL or ""
 * selects the held-out scenes of the training config. When out_dir is not
 * NULL, scene_<index>_input.ppm and scene_<index>_pred.pgm are written for
 * every scene. */
SCGNET_API scg_status scg_model_evaluate(scg_model* model, const char* scene_spec, const char* out_dir,
                                         scg_metrics** out);
SCGNET_API void scg_metrics_free(scg_metrics* metrics);
SCGNET_API size_t scg_metrics_classes(const scg_metrics* metrics);
SCGNET_API double scg_metrics_overall_accuracy(const scg_metrics* metrics);
SCGNET_API double scg_metrics_mean_f1(const scg_metrics* metrics);
/* NaN when cls is out of range. */
SCGNET_API double scg_metrics_f1(const scg_metrics* metrics, size_t cls);
SCGNET_API uint64_t scg_metrics_confusion(const scg_metrics* metrics, size_t truth, size_t predicted);
/* Key = value report text; valid until the handle is freed. */
SCGNET_API const char* scg_metrics_text(const scg_metrics* metrics);
/* Writes <stem>.txt and <stem>.csv. */
SCGNET_API scg_status scg_metrics_write(const scg_metrics* metrics, const char* path_stem);

/* ---- graph export -------------------------------------------------------- */

typedef struct scg_graph_summary {
  size_t n;
  double gamma;
  double edge_density;
} scg_graph_summary;

/* Eval-mode forward of scene `scene_index` under the training scene
 * generator; writes a_raw.tsr, a_norm.tsr and summary.txt into out_dir. */
SCGNET_API scg_status scg_model_export_graph(scg_model* model, uint64_t scene_index, const char* out_dir,
                                             scg_graph_summary* summary);

/* ---- gradient checks ----------------------------------------------------- */

SCGNET_API size_t scg_grad_check_scope_count(void);
/* NULL when index is out of range. */
SCGNET_API const char* scg_grad_check_scope_name(size_t index);

typedef struct scg_grad_result {
  const char* scope;
  const char* tier;
  double tolerance;
  double max_rel_error;
  size_t trials;
  double seconds;
  int passed;
} scg_grad_result;

typedef void (*scg_grad_callback)(const scg_grad_result* result, void* user);

/* scope NULL runs every scope. tolerance <= 0 uses the tier default. trials 0
 * uses the default. Returns SCG_ERR_CHECK_FAILED if any scope exceeds its
 * tolerance; failures are still reported through the callback. */
SCGNET_API scg_status scg_grad_check(const char* scope, double tolerance, size_t trials, scg_grad_callback callback,
                                     void* user);

/* ---- TSR tensors --------------------------------------------------------- */

typedef struct scg_tensor scg_tensor;

SCGNET_API scg_status scg_tensor_read(const char* path, scg_tensor** out);
SCGNET_API scg_status scg_tensor_create(const size_t* shape, size_t rank, const double* data, scg_tensor** out);
SCGNET_API void scg_tensor_free(scg_tensor* tensor);
SCGNET_API size_t scg_tensor_rank(const scg_tensor* tensor);
SCGNET_API size_t scg_tensor_dim(const scg_tensor* tensor, size_t axis);
SCGNET_API size_t scg_tensor_numel(const scg_tensor* tensor);
SCGNET_API const double* scg_tensor_data(const scg_tensor* tensor);
/* dtype_bits: 32 or 64. */
SCGNET_API scg_status scg_tensor_write(const scg_tensor* tensor, const char* path, int dtype_bits);

#ifdef __cplusplus
}
#endif

#endif /* SCGNET_SCGNET_H_ */
