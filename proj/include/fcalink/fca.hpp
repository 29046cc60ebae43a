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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fcalink/bitset.hpp"
#include "fcalink/context.hpp"
#include "fcalink/rng.hpp"

namespace fcalink {

using ConceptId = std::uint32_t;

// Row and column bitsets of the incidence relation.
class IncidenceMatrix {
 public:
  explicit IncidenceMatrix(const BipartiteContext& ctx);
  IncidenceMatrix(std::size_t n_objects, std::size_t n_attributes, const std::vector<Edge>& edges);

  std::size_t num_objects() const noexcept { return rows_.size(); }
  std::size_t num_attributes() const noexcept { return cols_.size(); }
  const Bitset& row(ObjectId g) const { return rows_[g]; }
  const Bitset& column(AttributeId m) const { return cols_[m]; }

  // A' : attributes shared by every object of A (all attributes when A = ∅).
  Bitset derive_attributes(const Bitset& objects) const;
  // B' : objects having every attribute of B (all objects when B = ∅).
  Bitset derive_objects(const Bitset& attributes) const;

  IncidenceMatrix transposed() const;

 private:
  IncidenceMatrix() = default;
  std::vector<Bitset> rows_;
  std::vector<Bitset> cols_;
};

// Id-list forms; out-of-range ids raise UsageError.
std::vector<AttributeId> derive_attributes(const BipartiteContext& ctx,
                                           const std::vector<ObjectId>& objects);
std::vector<ObjectId> derive_objects(const BipartiteContext& ctx,
                                     const std::vector<AttributeId>& attributes);

struct FormalConcept {
  ConceptId id = 0;
  Bitset extent;
  Bitset intent;
};

struct CoverPair {
  ConceptId lower;
  ConceptId upper;
  friend auto operator<=>(const CoverPair&, const CoverPair&) = default;
};

// All concepts in canonical order plus the cover relation. Concepts are sorted
// by (extent size, lexicographic extent) and their ids are their positions, so
// the bottom concept is first and the top concept last.
struct ConceptLattice {
  std::size_t num_objects = 0;
  std::size_t num_attributes = 0;
  std::vector<FormalConcept> concepts;
  std::vector<CoverPair> covers;  // sorted

  ConceptId bottom() const { return 0; }
  ConceptId top() const { return static_cast<ConceptId>(concepts.size() - 1); }
  std::size_t size() const noexcept { return concepts.size(); }
  std::size_t max_extent_size() const;
  std::size_t max_intent_size() const;
};

struct EnumerationOptions {
  // Abort with BudgetExceeded once more concepts than this have been found.
  std::size_t max_concepts = 2'000'000;
};

// Close-by-One over word-parallel bitset rows. Output is canonically sorted
// and independent of the internal traversal order.
std::vector<FormalConcept> enumerate_concepts(const BipartiteContext& ctx,
                                              const EnumerationOptions& options = {});
std::vector<FormalConcept> enumerate_concepts(const IncidenceMatrix& incidence,
                                              const EnumerationOptions& options = {});

// Sorts concepts canonically and renumbers their ids.
void canonicalize(std::vector<FormalConcept>& concepts);

// Transitive reduction of strict extent inclusion. Concepts must be in
// canonical order with unique extents (DataError otherwise).
std::vector<CoverPair> cover_relation(const std::vector<FormalConcept>& concepts);

// Queue-driven topological pass that records, for every concept except the
// bottom, the last lower concept to be released before it. Each recorded
// concept is one of its lower covers, but only one per concept is kept; use
// cover_relation() for the full neighbour set.
std::vector<std::optional<ConceptId>> single_lower_neighbors(
    const std::vector<FormalConcept>& concepts);

ConceptLattice build_lattice(const BipartiteContext& ctx, const EnumerationOptions& options = {});

// ---------------------------------------------------------------------------
// Neighbour pairs for the concept-neighbour prediction task.

struct ConceptPair {
  ConceptId first;
  ConceptId second;
  friend auto operator<=>(const ConceptPair&, const ConceptPair&) = default;
};

// Every cover as an unordered pair (first < second), sorted.
std::vector<ConceptPair> neighbor_pairs(const ConceptLattice& lattice);

struct NegativeSample {
  std::vector<ConceptPair> pairs;  // ordered, distinct, never a cover in either direction
  bool exhausted = false;          // fewer candidates existed than requested
};

// Draws `count` distinct ordered pairs (a, b), a != b, whose unordered pair is
// not a cover. When fewer exist, all of them are returned and `exhausted` is set.
NegativeSample sample_non_neighbor_pairs(const ConceptLattice& lattice, std::size_t count,
                                         Rng& rng);

// ---------------------------------------------------------------------------
// JSON-lines export: {"id","extent","intent"} and {"lower","upper"}.

std::string concepts_to_jsonl(const ConceptLattice& lattice);
std::string covers_to_jsonl(const ConceptLattice& lattice);
void write_concepts_jsonl(const ConceptLattice& lattice, const std::filesystem::path& path);
void write_covers_jsonl(const ConceptLattice& lattice, const std::filesystem::path& path);

std::vector<FormalConcept> read_concepts_jsonl(const std::filesystem::path& path,
                                               std::size_t num_objects,
                                               std::size_t num_attributes);

// Rebuilds a lattice from the two exports. Concepts must be canonical.
ConceptLattice read_lattice_jsonl(const std::filesystem::path& concepts_path,
                                  const std::filesystem::path& covers_path,
                                  std::size_t num_objects, std::size_t num_attributes);

}  // namespace fcalink
