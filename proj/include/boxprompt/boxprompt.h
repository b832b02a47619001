/*
 * boxprompt
 *
 * Copyright 2026 The boxprompt Authors
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

/* C interface to boxprompt. All functions return a bp_status; on failure
 * bp_last_error() describes the problem for the calling thread. Strings
 * returned through char** must be released with bp_string_free(). */

#ifndef BOXPROMPT_H_
#define BOXPROMPT_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define BP_API __declspec(dllexport)
#else
#define BP_API __attribute__((visibility("default")))
#endif

/* Values double as process exit codes for the command-line tool. */
typedef enum bp_status {
  BP_OK = 0,
  BP_ERR_CONFIG = 2,
  BP_ERR_DATA = 3,
  BP_ERR_BACKBONE = 4,
  BP_ERR_INTERNAL = 5
} bp_status;

typedef struct bp_backbone bp_backbone;
typedef struct bp_module bp_module;

BP_API const char* bp_version(void);
BP_API const char* bp_last_error(void);
/* Symbolic error kind of the last failure, e.g. "KTooLarge". */
BP_API const char* bp_last_error_kind(void);
BP_API void bp_string_free(char* s);

/* id is "toy" or "medsam"; weights may be NULL. */
BP_API bp_status bp_backbone_create(const char* id, const char* weights, bp_backbone** out);
BP_API void bp_backbone_free(bp_backbone* backbone);
BP_API bp_status bp_backbone_fingerprint(const bp_backbone* backbone, char** out);
BP_API bp_status bp_backbone_input_size(const bp_backbone* backbone, int* rows, int* cols);

BP_API bp_status bp_module_create(const bp_backbone* backbone, uint64_t seed, bp_module** out);
BP_API bp_status bp_module_load(const char* path, bp_module** out);
BP_API bp_status bp_module_save(const bp_module* module, const char* path);
BP_API void bp_module_free(bp_module* module);
BP_API bp_status bp_module_parameter_count(const bp_module* module, size_t* out);

/* Probability map for a preprocessed rows x cols image (values in
 * [0, 255]); prob_out receives rows * cols values at the image resolution. */
BP_API bp_status bp_predict(const bp_module* module, const bp_backbone* backbone, const float* image, int rows,
                            int cols, double* prob_out);

/* penalty: "relu" or "logbarrier". */
BP_API bp_status bp_penalty(const char* kind, double t, double z, double* value, double* derivative);

/* Box losses of a rows x cols probability map. Box bounds are inclusive.
 * config_json may be NULL or a JSON object with loss keys (lambda_tight,
 * lambda_size, eps_lo, eps_hi, penalty, t, band_width). out receives
 * {empty, tight, size, total}; grad_out (nullable) receives d total / d f. */
BP_API bp_status bp_box_loss(const double* f, int rows, int cols, int rmin, int cmin, int rmax, int cmax,
                             const char* config_json, double out[4], double* grad_out);

BP_API bp_status bp_dice(const uint8_t* a, const uint8_t* b, size_t n, double* out);

/* Effective default configuration as JSON. */
BP_API bp_status bp_default_config(char** out_json);

/* Runs a pipeline command: synth, preprocess, cache-embeddings, train,
 * evaluate, predict or experiment. result_json receives a JSON summary. */
BP_API bp_status bp_run_command(const char* name, const char* config_json, char** result_json);

#ifdef __cplusplus
}
#endif

#endif /* BOXPROMPT_H_ */
