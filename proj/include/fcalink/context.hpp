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

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace fcalink {

using ObjectId = std::uint32_t;
using AttributeId = std::uint32_t;
using Date = std::chrono::sys_days;

struct Edge {
  ObjectId object;
  AttributeId attribute;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Parses "YYYY-MM-DD" (an optional "THH:MM:SS..." suffix is ignored).
std::optional<Date> parse_date(std::string_view text);
std::string format_date(Date d);

// A bipartite network (U, V, E), equivalently a formal context (G, M, I).
//
// Objects and attributes live in separate dense id ranges [0, |U|) and
// [0, |V|), each with a label. Edges are kept sorted by (object, attribute)
// and unique. Timestamps are either absent or present for every edge.
class BipartiteContext {
 public:
  BipartiteContext() = default;

  // Validates ids, sorts and deduplicates. When `dates` is given it must be
  // parallel to `edges`; a duplicated edge keeps its earliest date.
  BipartiteContext(std::vector<std::string> object_labels,
                   std::vector<std::string> attribute_labels, std::vector<Edge> edges,
                   std::optional<std::vector<Date>> dates = std::nullopt);

  // Unlabelled context; labels default to "g<i>" / "m<j>".
  static BipartiteContext from_edges(std::size_t n_objects, std::size_t n_attributes,
                                     std::vector<Edge> edges);

  std::size_t num_objects() const noexcept { return object_labels_.size(); }
  std::size_t num_attributes() const noexcept { return attribute_labels_.size(); }
  std::size_t num_edges() const noexcept { return edges_.size(); }

  const std::vector<Edge>& edges() const noexcept { return edges_; }
  bool has_dates() const noexcept { return dated_; }
  // Parallel to edges(); empty when the context carries no timestamps.
  const std::vector<Date>& dates() const noexcept { return dates_; }

  const std::vector<std::string>& object_labels() const noexcept { return object_labels_; }
  const std::vector<std::string>& attribute_labels() const noexcept { return attribute_labels_; }
  const std::string& object_label(ObjectId g) const { return object_labels_.at(g); }
  const std::string& attribute_label(AttributeId m) const { return attribute_labels_.at(m); }
  std::optional<ObjectId> find_object(std::string_view label) const;
  std::optional<AttributeId> find_attribute(std::string_view label) const;

  bool has_edge(ObjectId g, AttributeId m) const;

  // Sorted attribute ids adjacent to g / sorted object ids adjacent to m.
  const std::vector<AttributeId>& attributes_of(ObjectId g) const { return object_adj_.at(g); }
  const std::vector<ObjectId>& objects_of(AttributeId m) const { return attribute_adj_.at(m); }

  // Number of duplicate rows collapsed while building the context.
  std::size_t duplicates_collapsed() const noexcept { return duplicates_; }

  friend bool operator==(const BipartiteContext& a, const BipartiteContext& b);

 private:
  void build_adjacency();

  std::vector<std::string> object_labels_;
  std::vector<std::string> attribute_labels_;
  std::vector<Edge> edges_;
  std::vector<Date> dates_;
  bool dated_ = false;
  std::vector<std::vector<AttributeId>> object_adj_;
  std::vector<std::vector<ObjectId>> attribute_adj_;
  std::map<std::string, ObjectId, std::less<>> object_index_;
  std::map<std::string, AttributeId, std::less<>> attribute_index_;
  std::size_t duplicates_ = 0;
};

enum class EdgeListFormat { kCsv, kTsv };

// Infers the format from the extension (".tsv" → TSV, anything else CSV).
EdgeListFormat format_for_path(const std::filesystem::path& path);

// Reads rows `object,attribute[,date]`. A leading header row whose first field
// is "object" is skipped. Labels are interned in first-appearance order.
BipartiteContext load_edge_list(const std::filesystem::path& path, EdgeListFormat format);
BipartiteContext parse_edge_list(std::string_view text, EdgeListFormat format);

// Writes the header and one row per edge in canonical (object, attribute) order.
void write_edge_list(const BipartiteContext& ctx, const std::filesystem::path& path,
                     EdgeListFormat format);
std::string format_edge_list(const BipartiteContext& ctx, EdgeListFormat format);

// Keeps the listed objects and attributes (ascending id order becomes the new
// dense order) and the edges between them.
BipartiteContext restrict_context(const BipartiteContext& ctx, const std::vector<bool>& keep_objects,
                                  const std::vector<bool>& keep_attributes);

// ---------------------------------------------------------------------------
// Splits

enum class SplitKind { kTemporal, kRandomRemoval };

struct SplitPair {
  BipartiteContext input;
  BipartiteContext target;
  SplitKind kind = SplitKind::kRandomRemoval;
  std::uint64_t seed = 0;          // random-removal only
  std::optional<Date> cutoff;      // temporal only
  std::vector<std::string> warnings;
};

// Input: drops attributes first dated on/after `cutoff`, their edges, then
// objects left isolated. Target: drops objects without an edge dated before
// `cutoff` (and their edges); all attributes stay.
SplitPair split_temporal(const BipartiteContext& ctx, Date cutoff);

struct RandomSplitOptions {
  double fraction = 0.1;
  std::uint64_t seed = 0;
  // Prune attributes left without edges from the input context.
  bool prune_isolated_attributes = true;
  // Restrict the target context to the attributes surviving in the input.
  bool restrict_target_attributes = false;
};

// Removes exactly floor(fraction * |E|) edges chosen uniformly at random.
SplitPair split_random_edges(const BipartiteContext& ctx, const RandomSplitOptions& options);

// Maps ids of one context onto another by label; absent labels map to nullopt.
struct IdAlignment {
  std::vector<std::optional<ObjectId>> objects;
  std::vector<std::optional<AttributeId>> attributes;
};
IdAlignment align_by_label(const BipartiteContext& from, const BipartiteContext& to);

// ---------------------------------------------------------------------------
// Statistics

struct ContextStats {
  std::size_t num_objects = 0;
  std::size_t num_attributes = 0;
  std::size_t num_edges = 0;
  double density = 0.0;
  std::map<std::size_t, std::size_t> object_degree_histogram;     // degree → count
  std::map<std::size_t, std::size_t> attribute_degree_histogram;  // degree → count
};

ContextStats context_stats(const BipartiteContext& ctx);
nlohmann::json to_json(const ContextStats& stats);

}  // namespace fcalink
