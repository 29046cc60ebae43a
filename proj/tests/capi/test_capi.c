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

/* Exercises the C interface from C. */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "fcalink/fcalink.h"

static int failures = 0;

#define EXPECT(cond)                                                 \
  do {                                                               \
    if (!(cond)) {                                                   \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                    \
    }                                                                \
  } while (0)

static void test_lattice(void) {
  const uint32_t identity[] = {0, 0, 1, 1, 2, 2};
  fcl_context* ctx = NULL;
  EXPECT(fcl_context_from_edges(3, 3, identity, 3, &ctx) == FCL_OK);
  size_t n_obj = 0, n_attr = 0, n_edges = 0;
  EXPECT(fcl_context_dims(ctx, &n_obj, &n_attr, &n_edges) == FCL_OK);
  EXPECT(n_obj == 3 && n_attr == 3 && n_edges == 3);

  fcl_lattice* lat = NULL;
  EXPECT(fcl_lattice_build(ctx, 1000, &lat) == FCL_OK);
  size_t n_concepts = 0, n_covers = 0;
  EXPECT(fcl_lattice_size(lat, &n_concepts, &n_covers) == FCL_OK);
  EXPECT(n_concepts == 5);
  EXPECT(n_covers == 6);

  /* The top concept's extent holds all three objects. */
  size_t len = 0;
  EXPECT(fcl_lattice_extent(lat, n_concepts - 1, NULL, 0, &len) == FCL_OK);
  EXPECT(len == 3);
  uint32_t ids[3] = {9, 9, 9};
  EXPECT(fcl_lattice_extent(lat, n_concepts - 1, ids, 3, &len) == FCL_OK);
  EXPECT(ids[0] == 0 && ids[1] == 1 && ids[2] == 2);
  EXPECT(fcl_lattice_intent(lat, 0, ids, 3, &len) == FCL_OK);
  EXPECT(len == 3);

  uint32_t lower = 0, upper = 0;
  EXPECT(fcl_lattice_cover(lat, 0, &lower, &upper) == FCL_OK);
  EXPECT(lower == 0);
  EXPECT(fcl_lattice_cover(lat, 6, &lower, &upper) == FCL_USAGE_ERROR);
  EXPECT(strstr(fcl_last_error(), "out of range") != NULL);
  EXPECT(fcl_lattice_extent(lat, 99, ids, 3, &len) == FCL_USAGE_ERROR);

  /* A budget of two concepts cannot hold five. */
  fcl_lattice* small = NULL;
  EXPECT(fcl_lattice_build(ctx, 2, &small) == FCL_BUDGET_EXCEEDED);
  EXPECT(small == NULL);
  EXPECT(fcl_last_partial_count() > 0);

  fcl_lattice_free(lat);
  fcl_context_free(ctx);
}

static void test_errors(void) {
  fcl_context* ctx = NULL;
  EXPECT(fcl_context_load("/nonexistent/edges.csv", &ctx) == FCL_DATA_ERROR);
  EXPECT(ctx == NULL);
  EXPECT(strlen(fcl_last_error()) > 0);
  EXPECT(fcl_context_load(NULL, &ctx) == FCL_USAGE_ERROR);
  const uint32_t bad[] = {5, 0};
  EXPECT(fcl_context_from_edges(2, 2, bad, 1, &ctx) != FCL_OK);
  EXPECT(strcmp(fcl_status_name(FCL_BUDGET_EXCEEDED), "budget exceeded") == 0);
  EXPECT(strlen(fcl_version()) > 0);
}

static void test_metrics(void) {
  const double scores[] = {0.9, 0.8, 0.3, 0.1};
  const int labels[] = {1, 0, 1, 0};
  fcl_metrics m;
  EXPECT(fcl_evaluate(scores, labels, 4, &m) == FCL_OK);
  EXPECT(m.auc == 0.75);
  EXPECT(m.n_pos == 2 && m.n_neg == 2);
  const int bad_labels[] = {1, 2, 0, 0};
  EXPECT(fcl_evaluate(scores, bad_labels, 4, &m) == FCL_USAGE_ERROR);
}

static void test_config(void) {
  fcl_config* a = NULL;
  fcl_config* b = NULL;
  EXPECT(fcl_config_new(&a) == FCL_OK);
  EXPECT(fcl_config_set_seed(a, 7) == FCL_OK);
  EXPECT(fcl_config_merge_json(a, "{\"pretrain\":{\"epochs\":5}}") == FCL_OK);
  char* text = NULL;
  EXPECT(fcl_config_to_json(a, &text) == FCL_OK);
  EXPECT(text != NULL && strstr(text, "\"epochs\": 5") != NULL);
  EXPECT(fcl_config_from_json(text, &b) == FCL_OK);
  char ha[17], hb[17];
  EXPECT(fcl_config_hash(a, ha) == FCL_OK);
  EXPECT(fcl_config_hash(b, hb) == FCL_OK);
  EXPECT(strcmp(ha, hb) == 0 && strlen(ha) == 16);
  EXPECT(fcl_config_merge_json(a, "{\"pretrain\":{\"epoch\":5}}") == FCL_USAGE_ERROR);
  EXPECT(fcl_config_merge_json(a, "not json") == FCL_USAGE_ERROR);
  fcl_string_free(text);
  fcl_config_free(a);
  fcl_config_free(b);
}

static void test_run(const char* dir) {
  fcl_config* cfg = NULL;
  fcl_run* run = NULL;
  EXPECT(fcl_config_new(&cfg) == FCL_OK);
  EXPECT(fcl_run_open(dir, cfg, &run) == FCL_OK);
  EXPECT(fcl_run_split(run) == FCL_USAGE_ERROR);
  EXPECT(strstr(fcl_last_error(), "'ingest'") != NULL);
  EXPECT(fcl_run_finetune(run, "xy") == FCL_USAGE_ERROR);
  fcl_run_free(run);
  fcl_config_free(cfg);
}

int main(int argc, char** argv) {
  test_lattice();
  test_errors();
  test_metrics();
  test_config();
  test_run(argc > 1 ? argv[1] : "capi_run");
  if (failures) {
    fprintf(stderr, "%d expectation(s) failed\n", failures);
    return 1;
  }
  printf("capi: all expectations met\n");
  return 0;
}
