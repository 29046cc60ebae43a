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

#include <algorithm>
#include <vector>

#include "fcalink/context.hpp"
#include "fcalink/fca.hpp"
#include "fcalink/metrics.hpp"
#include "fcalink/pipeline.hpp"
#include "guard.hpp"

struct fcl_context {
  fcalink::BipartiteContext ctx;
};

struct fcl_lattice {
  fcalink::ConceptLattice lattice;
};

namespace fcalink::capi {
namespace {

thread_local std::string g_error;
thread_local std::size_t g_partial = 0;

const FormalConcept& concept_at(const fcl_lattice* l, std::size_t id) {
  require_arg(l, "lattice");
  if (id >= l->lattice.size()) throw UsageError("concept id out of range");
  return l->lattice.concepts[id];
}

void copy_ids(const std::vector<std::uint32_t>& ids, std::uint32_t* out, std::size_t capacity,
              std::size_t* length) {
  require_arg(length, "length");
  if (capacity > 0) require_arg(out, "ids");
  std::copy_n(ids.begin(), std::min(capacity, ids.size()), out);
  *length = ids.size();
}

}  // namespace

void set_error(const std::string& message, std::size_t partial) {
  g_error = message;
  g_partial = partial;
}

void clear_error() {
  g_error.clear();
  g_partial = 0;
}

}  // namespace fcalink::capi

using namespace fcalink;
using capi::guard;
using capi::require_arg;

extern "C" {

const char* fcl_version(void) { return fcalink::version(); }

const char* fcl_status_name(fcl_status status) {
  switch (status) {
    case FCL_OK: return "ok";
    case FCL_USAGE_ERROR: return "usage error";
    case FCL_DATA_ERROR: return "data error";
    case FCL_BUDGET_EXCEEDED: return "budget exceeded";
    case FCL_DIVERGED: return "diverged";
    case FCL_INTERNAL_ERROR: return "internal error";
  }
  return "unknown status";
}

const char* fcl_last_error(void) { return capi::g_error.c_str(); }
size_t fcl_last_partial_count(void) { return capi::g_partial; }
void fcl_string_free(char* s) { delete[] s; }

fcl_status fcl_context_load(const char* path, fcl_context** out) {
  return guard([&] {
    require_arg(path, "path");
    require_arg(out, "out");
    *out = new fcl_context{load_edge_list(path, format_for_path(path))};
  });
}

fcl_status fcl_context_from_edges(size_t num_objects, size_t num_attributes, const uint32_t* edges,
                                  size_t n_edges, fcl_context** out) {
  return guard([&] {
    require_arg(out, "out");
    if (n_edges > 0) require_arg(edges, "edges");
    std::vector<Edge> list(n_edges);
    for (size_t i = 0; i < n_edges; ++i) list[i] = {edges[2 * i], edges[2 * i + 1]};
    *out = new fcl_context{BipartiteContext::from_edges(num_objects, num_attributes, std::move(list))};
  });
}

fcl_status fcl_context_dims(const fcl_context* ctx, size_t* num_objects, size_t* num_attributes,
                            size_t* num_edges) {
  return guard([&] {
    require_arg(ctx, "ctx");
    if (num_objects) *num_objects = ctx->ctx.num_objects();
    if (num_attributes) *num_attributes = ctx->ctx.num_attributes();
    if (num_edges) *num_edges = ctx->ctx.num_edges();
  });
}

void fcl_context_free(fcl_context* ctx) { delete ctx; }

fcl_status fcl_lattice_build(const fcl_context* ctx, size_t max_concepts, fcl_lattice** out) {
  return guard([&] {
    require_arg(ctx, "ctx");
    require_arg(out, "out");
    *out = new fcl_lattice{build_lattice(ctx->ctx, {max_concepts})};
  });
}

fcl_status fcl_lattice_size(const fcl_lattice* lattice, size_t* num_concepts, size_t* num_covers) {
  return guard([&] {
    require_arg(lattice, "lattice");
    if (num_concepts) *num_concepts = lattice->lattice.size();
    if (num_covers) *num_covers = lattice->lattice.covers.size();
  });
}

fcl_status fcl_lattice_extent(const fcl_lattice* lattice, size_t concept_id, uint32_t* ids,
                              size_t capacity, size_t* length) {
  return guard([&] {
    capi::copy_ids(capi::concept_at(lattice, concept_id).extent.to_indices(), ids, capacity, length);
  });
}

fcl_status fcl_lattice_intent(const fcl_lattice* lattice, size_t concept_id, uint32_t* ids,
                              size_t capacity, size_t* length) {
  return guard([&] {
    capi::copy_ids(capi::concept_at(lattice, concept_id).intent.to_indices(), ids, capacity, length);
  });
}

fcl_status fcl_lattice_cover(const fcl_lattice* lattice, size_t index, uint32_t* lower,
                             uint32_t* upper) {
  return guard([&] {
    require_arg(lattice, "lattice");
    require_arg(lower, "lower");
    require_arg(upper, "upper");
    if (index >= lattice->lattice.covers.size()) throw UsageError("cover index out of range");
    *lower = lattice->lattice.covers[index].lower;
    *upper = lattice->lattice.covers[index].upper;
  });
}

fcl_status fcl_lattice_write(const fcl_lattice* lattice, const char* concepts_path,
                             const char* covers_path) {
  return guard([&] {
    require_arg(lattice, "lattice");
    if (concepts_path) write_concepts_jsonl(lattice->lattice, concepts_path);
    if (covers_path) write_covers_jsonl(lattice->lattice, covers_path);
  });
}

void fcl_lattice_free(fcl_lattice* lattice) { delete lattice; }

fcl_status fcl_evaluate(const double* scores, const int* labels, size_t n, fcl_metrics* out) {
  return guard([&] {
    require_arg(out, "out");
    if (n > 0) {
      require_arg(scores, "scores");
      require_arg(labels, "labels");
    }
    metrics::ScoredSet set;
    set.scores.assign(scores, scores + n);
    set.labels.assign(labels, labels + n);
    const metrics::Report r = metrics::evaluate(set);
    *out = {r.f1, r.threshold, r.auc, r.aupr, r.n_pos, r.n_neg};
  });
}

}  // extern "C"
