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

#include "fcalink/context.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "fcalink/error.hpp"
#include "fcalink/rng.hpp"

#include "csv.hpp"

namespace fcalink {

using detail::quote_csv;
using detail::split_record;
using detail::trim;

std::optional<Date> parse_date(std::string_view text) {
  text = trim(text);
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  if (text.size() > 10 && text[10] != 'T' && text[10] != ' ') return std::nullopt;
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  auto parse = [](std::string_view s, auto& out) {
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
  };
  if (!parse(text.substr(0, 4), y) || !parse(text.substr(5, 2), m) || !parse(text.substr(8, 2), d))
    return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                        std::chrono::day{d}};
  if (!ymd.ok()) return std::nullopt;
  return Date{ymd};
}

std::string format_date(Date d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

BipartiteContext::BipartiteContext(std::vector<std::string> object_labels,
                                   std::vector<std::string> attribute_labels,
                                   std::vector<Edge> edges, std::optional<std::vector<Date>> dates)
    : object_labels_(std::move(object_labels)), attribute_labels_(std::move(attribute_labels)) {
  for (std::size_t i = 0; i < object_labels_.size(); ++i) {
    if (!object_index_.emplace(object_labels_[i], static_cast<ObjectId>(i)).second)
      throw DataError("duplicate object label '" + object_labels_[i] + "'");
  }
  for (std::size_t j = 0; j < attribute_labels_.size(); ++j) {
    if (!attribute_index_.emplace(attribute_labels_[j], static_cast<AttributeId>(j)).second)
      throw DataError("duplicate attribute label '" + attribute_labels_[j] + "'");
  }
  for (const Edge& e : edges) {
    if (e.object >= object_labels_.size() || e.attribute >= attribute_labels_.size())
      throw DataError("edge (" + std::to_string(e.object) + "," + std::to_string(e.attribute) +
                      ") references a missing node");
  }
  dated_ = dates.has_value();
  if (dated_ && dates->size() != edges.size())
    throw DataError("edge dates must be parallel to edges");

  std::vector<std::size_t> order(edges.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return edges[a] < edges[b]; });
  edges_.reserve(edges.size());
  if (dated_) dates_.reserve(edges.size());
  for (std::size_t k : order) {
    if (!edges_.empty() && edges_.back() == edges[k]) {
      ++duplicates_;
      if (dated_) dates_.back() = std::min(dates_.back(), (*dates)[k]);
      continue;
    }
    edges_.push_back(edges[k]);
    if (dated_) dates_.push_back((*dates)[k]);
  }
  build_adjacency();
}

BipartiteContext BipartiteContext::from_edges(std::size_t n_objects, std::size_t n_attributes,
                                              std::vector<Edge> edges) {
  std::vector<std::string> objs(n_objects);
  std::vector<std::string> attrs(n_attributes);
  for (std::size_t i = 0; i < n_objects; ++i) objs[i] = "g" + std::to_string(i);
  for (std::size_t j = 0; j < n_attributes; ++j) attrs[j] = "m" + std::to_string(j);
  return BipartiteContext(std::move(objs), std::move(attrs), std::move(edges));
}

void BipartiteContext::build_adjacency() {
  object_adj_.assign(object_labels_.size(), {});
  attribute_adj_.assign(attribute_labels_.size(), {});
  for (const Edge& e : edges_) {
    object_adj_[e.object].push_back(e.attribute);
    attribute_adj_[e.attribute].push_back(e.object);
  }
}

std::optional<ObjectId> BipartiteContext::find_object(std::string_view label) const {
  const auto it = object_index_.find(label);
  if (it == object_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<AttributeId> BipartiteContext::find_attribute(std::string_view label) const {
  const auto it = attribute_index_.find(label);
  if (it == attribute_index_.end()) return std::nullopt;
  return it->second;
}

bool BipartiteContext::has_edge(ObjectId g, AttributeId m) const {
  if (g >= object_adj_.size()) return false;
  const auto& row = object_adj_[g];
  return std::binary_search(row.begin(), row.end(), m);
}

bool operator==(const BipartiteContext& a, const BipartiteContext& b) {
  return a.object_labels_ == b.object_labels_ && a.attribute_labels_ == b.attribute_labels_ &&
         a.edges_ == b.edges_ && a.dated_ == b.dated_ && a.dates_ == b.dates_;
}

// ---------------------------------------------------------------------------
// Edge-list I/O

EdgeListFormat format_for_path(const std::filesystem::path& path) {
  return path.extension() == ".tsv" ? EdgeListFormat::kTsv : EdgeListFormat::kCsv;
}

BipartiteContext parse_edge_list(std::string_view text, EdgeListFormat format) {
  const char delim = format == EdgeListFormat::kTsv ? '\t' : ',';
  std::vector<std::string> objects;
  std::vector<std::string> attributes;
  std::unordered_map<std::string, ObjectId> object_ids;
  std::unordered_map<std::string, AttributeId> attribute_ids;
  std::vector<Edge> edges;
  std::vector<Date> dates;
  std::optional<bool> dated;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool first_record = true;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view raw =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (trim(raw).empty()) continue;
    auto fields = split_record(raw, delim, line_no);
    if (first_record) {
      first_record = false;
      if (fields[0] == "object") continue;
    }
    if (fields.size() != 2 && fields.size() != 3)
      throw DataError("line " + std::to_string(line_no) + ": expected 2 or 3 fields, got " +
                      std::to_string(fields.size()));
    if (fields[0].empty() || fields[1].empty())
      throw DataError("line " + std::to_string(line_no) + ": empty label");
    const bool row_dated = fields.size() == 3;
    if (dated && *dated != row_dated)
      throw DataError("line " + std::to_string(line_no) + ": inconsistent date column");
    dated = row_dated;
    if (row_dated) {
      const auto d = parse_date(fields[2]);
      if (!d) throw DataError("line " + std::to_string(line_no) + ": bad date '" + fields[2] + "'");
      dates.push_back(*d);
    }
    auto [oit, onew] = object_ids.try_emplace(fields[0], static_cast<ObjectId>(objects.size()));
    if (onew) objects.push_back(fields[0]);
    auto [ait, anew] =
        attribute_ids.try_emplace(fields[1], static_cast<AttributeId>(attributes.size()));
    if (anew) attributes.push_back(fields[1]);
    edges.push_back({oit->second, ait->second});
  }
  if (edges.empty()) throw DataError("edge list is empty");
  std::optional<std::vector<Date>> date_arg;
  if (dated.value_or(false)) date_arg = std::move(dates);
  return BipartiteContext(std::move(objects), std::move(attributes), std::move(edges),
                          std::move(date_arg));
}

BipartiteContext load_edge_list(const std::filesystem::path& path, EdgeListFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open edge list '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_edge_list(buf.str(), format);
}

std::string format_edge_list(const BipartiteContext& ctx, EdgeListFormat format) {
  const char delim = format == EdgeListFormat::kTsv ? '\t' : ',';
  auto field = [&](const std::string& s) {
    if (format == EdgeListFormat::kCsv) return quote_csv(s);
    if (s.find_first_of("\t\n") != std::string::npos)
      throw DataError("label '" + s + "' cannot be written as TSV");
    return s;
  };
  std::string out = "object";
  out += delim;
  out += "attribute";
  if (ctx.has_dates()) {
    out += delim;
    out += "date";
  }
  out += '\n';
  for (std::size_t k = 0; k < ctx.num_edges(); ++k) {
    const Edge& e = ctx.edges()[k];
    out += field(ctx.object_label(e.object));
    out += delim;
    out += field(ctx.attribute_label(e.attribute));
    if (ctx.has_dates()) {
      out += delim;
      out += format_date(ctx.dates()[k]);
    }
    out += '\n';
  }
  return out;
}

void write_edge_list(const BipartiteContext& ctx, const std::filesystem::path& path,
                     EdgeListFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write edge list '" + path.string() + "'");
  out << format_edge_list(ctx, format);
}

BipartiteContext restrict_context(const BipartiteContext& ctx, const std::vector<bool>& keep_objects,
                                  const std::vector<bool>& keep_attributes) {
  std::vector<std::optional<ObjectId>> omap(ctx.num_objects());
  std::vector<std::optional<AttributeId>> amap(ctx.num_attributes());
  std::vector<std::string> objs;
  std::vector<std::string> attrs;
  for (std::size_t i = 0; i < ctx.num_objects(); ++i) {
    if (!keep_objects[i]) continue;
    omap[i] = static_cast<ObjectId>(objs.size());
    objs.push_back(ctx.object_label(static_cast<ObjectId>(i)));
  }
  for (std::size_t j = 0; j < ctx.num_attributes(); ++j) {
    if (!keep_attributes[j]) continue;
    amap[j] = static_cast<AttributeId>(attrs.size());
    attrs.push_back(ctx.attribute_label(static_cast<AttributeId>(j)));
  }
  std::vector<Edge> edges;
  std::vector<Date> dates;
  for (std::size_t k = 0; k < ctx.num_edges(); ++k) {
    const Edge& e = ctx.edges()[k];
    if (!omap[e.object] || !amap[e.attribute]) continue;
    edges.push_back({*omap[e.object], *amap[e.attribute]});
    if (ctx.has_dates()) dates.push_back(ctx.dates()[k]);
  }
  std::optional<std::vector<Date>> date_arg;
  if (ctx.has_dates()) date_arg = std::move(dates);
  return BipartiteContext(std::move(objs), std::move(attrs), std::move(edges), std::move(date_arg));
}

// ---------------------------------------------------------------------------
// Splits

SplitPair split_temporal(const BipartiteContext& ctx, Date cutoff) {
  if (!ctx.has_dates()) throw DataError("temporal split requires timestamps on every edge");
  SplitPair split;
  split.kind = SplitKind::kTemporal;
  split.cutoff = cutoff;

  // An attribute is dated by its earliest edge.
  std::vector<std::optional<Date>> attr_date(ctx.num_attributes());
  std::vector<bool> object_has_early(ctx.num_objects(), false);
  Date first = Date::max();
  Date last = Date::min();
  for (std::size_t k = 0; k < ctx.num_edges(); ++k) {
    const Edge& e = ctx.edges()[k];
    const Date d = ctx.dates()[k];
    first = std::min(first, d);
    last = std::max(last, d);
    auto& ad = attr_date[e.attribute];
    if (!ad || d < *ad) ad = d;
    if (d < cutoff) object_has_early[e.object] = true;
  }
  if (ctx.num_edges() > 0 && (cutoff <= first || cutoff > last))
    split.warnings.push_back("cutoff " + format_date(cutoff) + " lies outside the data range " +
                             format_date(first) + " .. " + format_date(last));

  std::vector<bool> keep_attr(ctx.num_attributes());
  for (std::size_t j = 0; j < ctx.num_attributes(); ++j)
    keep_attr[j] = attr_date[j].has_value() && *attr_date[j] < cutoff;
  std::vector<bool> keep_obj(ctx.num_objects(), false);
  for (const Edge& e : ctx.edges())
    if (keep_attr[e.attribute]) keep_obj[e.object] = true;
  split.input = restrict_context(ctx, keep_obj, keep_attr);

  std::vector<bool> all_attr(ctx.num_attributes(), true);
  split.target = restrict_context(ctx, object_has_early, all_attr);
  return split;
}

SplitPair split_random_edges(const BipartiteContext& ctx, const RandomSplitOptions& options) {
  if (!(options.fraction >= 0.0 && options.fraction <= 1.0))
    throw UsageError("removal fraction must lie in [0, 1]");
  SplitPair split;
  split.kind = SplitKind::kRandomRemoval;
  split.seed = options.seed;

  const std::size_t n_edges = ctx.num_edges();
  const auto n_remove =
      static_cast<std::size_t>(std::floor(options.fraction * static_cast<double>(n_edges)));
  Rng rng(options.seed);
  std::vector<bool> removed(n_edges, false);
  for (std::size_t k : sample_without_replacement(n_edges, n_remove, rng)) removed[k] = true;

  std::vector<Edge> kept;
  std::vector<Date> kept_dates;
  kept.reserve(n_edges - n_remove);
  std::vector<bool> attr_alive(ctx.num_attributes(), false);
  for (std::size_t k = 0; k < n_edges; ++k) {
    if (removed[k]) continue;
    kept.push_back(ctx.edges()[k]);
    if (ctx.has_dates()) kept_dates.push_back(ctx.dates()[k]);
    attr_alive[ctx.edges()[k].attribute] = true;
  }
  std::optional<std::vector<Date>> date_arg;
  if (ctx.has_dates()) date_arg = std::move(kept_dates);
  const BipartiteContext reduced(ctx.object_labels(), ctx.attribute_labels(), std::move(kept),
                                 std::move(date_arg));

  std::vector<bool> all_obj(ctx.num_objects(), true);
  std::vector<bool> all_attr(ctx.num_attributes(), true);
  split.input = options.prune_isolated_attributes ? restrict_context(reduced, all_obj, attr_alive)
                                                  : reduced;
  split.target = options.restrict_target_attributes ? restrict_context(ctx, all_obj, attr_alive)
                                                    : ctx;
  return split;
}

IdAlignment align_by_label(const BipartiteContext& from, const BipartiteContext& to) {
  IdAlignment a;
  a.objects.resize(from.num_objects());
  a.attributes.resize(from.num_attributes());
  for (std::size_t i = 0; i < from.num_objects(); ++i)
    a.objects[i] = to.find_object(from.object_label(static_cast<ObjectId>(i)));
  for (std::size_t j = 0; j < from.num_attributes(); ++j)
    a.attributes[j] = to.find_attribute(from.attribute_label(static_cast<AttributeId>(j)));
  return a;
}

// ---------------------------------------------------------------------------
// Statistics

ContextStats context_stats(const BipartiteContext& ctx) {
  ContextStats s;
  s.num_objects = ctx.num_objects();
  s.num_attributes = ctx.num_attributes();
  s.num_edges = ctx.num_edges();
  const double cells = static_cast<double>(s.num_objects) * static_cast<double>(s.num_attributes);
  s.density = cells > 0 ? static_cast<double>(s.num_edges) / cells : 0.0;
  for (std::size_t i = 0; i < s.num_objects; ++i)
    ++s.object_degree_histogram[ctx.attributes_of(static_cast<ObjectId>(i)).size()];
  for (std::size_t j = 0; j < s.num_attributes; ++j)
    ++s.attribute_degree_histogram[ctx.objects_of(static_cast<AttributeId>(j)).size()];
  return s;
}

nlohmann::json to_json(const ContextStats& stats) {
  auto hist = [](const std::map<std::size_t, std::size_t>& h) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& [deg, n] : h) j.push_back({deg, n});
    return j;
  };
  return {{"objects", stats.num_objects},
          {"attributes", stats.num_attributes},
          {"edges", stats.num_edges},
          {"density", stats.density},
          {"object_degree_histogram", hist(stats.object_degree_histogram)},
          {"attribute_degree_histogram", hist(stats.attribute_degree_histogram)}};
}

}  // namespace fcalink
