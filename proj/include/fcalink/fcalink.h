// Copyright 2026 The fcalink Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/* C interface to fcalink. Every handle is opaque and owned by the caller;
 * free it with the matching *_free function. Functions report failure through
 * their status code and leave a message in fcl_last_error(), which is kept
 * per thread until the next failing call. Strings returned through char**
 * out-parameters are released with fcl_string_free. */
#ifndef FCALINK_FCALINK_H
#define FCALINK_FCALINK_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define FCL_API __declspec(dllexport)
#else
#define FCL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fcl_status {
  FCL_OK = 0,
  FCL_USAGE_ERROR = 1,     /* bad arguments, config or stage order */
  FCL_DATA_ERROR = 2,      /* malformed or inconsistent input files */
  FCL_BUDGET_EXCEEDED = 3, /* an enumeration outgrew its budget */
  FCL_DIVERGED = 4,        /* training produced a non-finite loss */
  FCL_INTERNAL_ERROR = 5
} fcl_status;

FCL_API const char* fcl_version(void);
FCL_API const char* fcl_status_name(fcl_status status);
FCL_API const char* fcl_last_error(void);
/* Items produced before the last FCL_BUDGET_EXCEEDED, 0 otherwise. */
FCL_API size_t fcl_last_partial_count(void);
FCL_API void fcl_string_free(char* s);

/* ---- run configuration ------------------------------------------------ */

typedef struct fcl_config fcl_config;

FCL_API fcl_status fcl_config_new(fcl_config** out);
FCL_API fcl_status fcl_config_load(const char* path, fcl_config** out);
FCL_API fcl_status fcl_config_from_json(const char* json, fcl_config** out);
/* Applies a JSON object on top of the current values, e.g.
 * {"pretrain":{"epochs":5}}. Unknown keys are rejected. */
FCL_API fcl_status fcl_config_merge_json(fcl_config* cfg, const char* json);
FCL_API fcl_status fcl_config_set_seed(fcl_config* cfg, uint64_t master_seed);
FCL_API fcl_status fcl_config_to_json(const fcl_config* cfg, char** out);
/* "oo" or "oa"; the string is static. */
FCL_API fcl_status fcl_config_task(const fcl_config* cfg, const char** task);
/* 16 hex digits plus the terminator. */
FCL_API fcl_status fcl_config_hash(const fcl_config* cfg, char out[17]);
FCL_API fcl_status fcl_config_save(const fcl_config* cfg, const char* path);
FCL_API void fcl_config_free(fcl_config* cfg);

/* ---- pipeline stages over a run directory ------------------------------ */

typedef struct fcl_run fcl_run;

/* Tasks are "oo" or "oa". */
FCL_API fcl_status fcl_run_open(const char* dir, const fcl_config* cfg, fcl_run** out);
FCL_API void fcl_run_free(fcl_run* run);

FCL_API fcl_status fcl_run_ingest(fcl_run* run, const char* edge_list, char** stats_json);
FCL_API fcl_status fcl_run_split(fcl_run* run);
/* edge_list may be NULL to use the split stage's input network. */
FCL_API fcl_status fcl_run_concepts(fcl_run* run, const char* edge_list, size_t* num_concepts);
FCL_API fcl_status fcl_run_covers(fcl_run* run, size_t* num_covers);
/* side: "object", "attribute", "both", or NULL for what the config's task needs. */
FCL_API fcl_status fcl_run_pretrain(fcl_run* run, const char* side);
FCL_API fcl_status fcl_run_finetune(fcl_run* run, const char* task);
FCL_API fcl_status fcl_run_predict(fcl_run* run, const char* task, size_t* num_rows);
/* predictions may be NULL to read the predict stage's report. */
FCL_API fcl_status fcl_run_eval(fcl_run* run, const char* task, const char* predictions,
                                char** metrics_json);
FCL_API fcl_status fcl_run_baseline(fcl_run* run, const char* task, char** metrics_json);
FCL_API fcl_status fcl_run_ablate(fcl_run* run, const char* task, char** metrics_json);

/* ---- formal contexts and concept lattices ------------------------------ */

typedef struct fcl_context fcl_context;
typedef struct fcl_lattice fcl_lattice;

/* CSV, or TSV for a ".tsv" path: object,attribute[,date] rows. */
FCL_API fcl_status fcl_context_load(const char* path, fcl_context** out);
/* edges holds n_edges (object, attribute) pairs, flattened. */
FCL_API fcl_status fcl_context_from_edges(size_t num_objects, size_t num_attributes,
                                          const uint32_t* edges, size_t n_edges,
                                          fcl_context** out);
FCL_API fcl_status fcl_context_dims(const fcl_context* ctx, size_t* num_objects,
                                    size_t* num_attributes, size_t* num_edges);
FCL_API void fcl_context_free(fcl_context* ctx);

FCL_API fcl_status fcl_lattice_build(const fcl_context* ctx, size_t max_concepts,
                                     fcl_lattice** out);
FCL_API fcl_status fcl_lattice_size(const fcl_lattice* lattice, size_t* num_concepts,
                                    size_t* num_covers);
/* Copies up to `capacity` ids and always reports the full length, so a call
 * with capacity 0 sizes the buffer. */
FCL_API fcl_status fcl_lattice_extent(const fcl_lattice* lattice, size_t concept_id,
                                      uint32_t* ids, size_t capacity, size_t* length);
FCL_API fcl_status fcl_lattice_intent(const fcl_lattice* lattice, size_t concept_id,
                                      uint32_t* ids, size_t capacity, size_t* length);
FCL_API fcl_status fcl_lattice_cover(const fcl_lattice* lattice, size_t index, uint32_t* lower,
                                     uint32_t* upper);
FCL_API fcl_status fcl_lattice_write(const fcl_lattice* lattice, const char* concepts_path,
                                     const char* covers_path);
FCL_API void fcl_lattice_free(fcl_lattice* lattice);

/* ---- metrics ----------------------------------------------------------- */

typedef struct fcl_metrics {
  double f1;
  double threshold;
  double auc;
  double aupr;
  size_t n_pos;
  size_t n_neg;
} fcl_metrics;

/* labels are 0 or 1. */
FCL_API fcl_status fcl_evaluate(const double* scores, const int* labels, size_t n,
                                fcl_metrics* out);

#ifdef __cplusplus
}
#endif

#endif /* FCALINK_FCALINK_H */
