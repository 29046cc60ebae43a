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

#include "fcalink/fca.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "fcalink/error.hpp"

namespace fcalink {

IncidenceMatrix::IncidenceMatrix(const BipartiteContext& ctx)
    : IncidenceMatrix(ctx.num_objects(), ctx.num_attributes(), ctx.edges()) {}

IncidenceMatrix::IncidenceMatrix(std::size_t n_objects, std::size_t n_attributes,
                                 const std::vector<Edge>& edges)
    : rows_(n_objects, Bitset(n_attributes)), cols_(n_attributes, Bitset(n_objects)) {
  for (const Edge& e : edges) {
    if (e.object >= n_objects || e.attribute >= n_attributes)
      throw DataError("edge outside the incidence matrix");
    rows_[e.object].set(e.attribute);
    cols_[e.attribute].set(e.object);
  }
}

Bitset IncidenceMatrix::derive_attributes(const Bitset& objects) const {
  Bitset out(num_attributes(), true);
  objects.for_each([&](std::size_t g) { out &= rows_[g]; });
  return out;
}

Bitset IncidenceMatrix::derive_objects(const Bitset& attributes) const {
  Bitset out(num_objects(), true);
  attributes.for_each([&](std::size_t m) { out &= cols_[m]; });
  return out;
}

IncidenceMatrix IncidenceMatrix::transposed() const {
  IncidenceMatrix t;
  t.rows_ = cols_;
  t.cols_ = rows_;
  return t;
}

std::vector<AttributeId> derive_attributes(const BipartiteContext& ctx,
                                           const std::vector<ObjectId>& objects) {
  for (ObjectId g : objects)
    if (g >= ctx.num_objects()) throw UsageError("object id " + std::to_string(g) + " out of range");
  const IncidenceMatrix inc(ctx);
  return inc.derive_attributes(Bitset::from_indices(ctx.num_objects(), objects)).to_indices();
}

std::vector<ObjectId> derive_objects(const BipartiteContext& ctx,
                                     const std::vector<AttributeId>& attributes) {
  for (AttributeId m : attributes)
    if (m >= ctx.num_attributes())
      throw UsageError("attribute id " + std::to_string(m) + " out of range");
  const IncidenceMatrix inc(ctx);
  return inc.derive_objects(Bitset::from_indices(ctx.num_attributes(), attributes)).to_indices();
}

std::size_t ConceptLattice::max_extent_size() const {
  std::size_t n = 0;
  for (const auto& c : concepts) n = std::max(n, c.extent.count());
  return n;
}

std::size_t ConceptLattice::max_intent_size() const {
  std::size_t n = 0;
  for (const auto& c : concepts) n = std::max(n, c.intent.count());
  return n;
}

// ---------------------------------------------------------------------------
// Close-by-One

namespace {

// Enumerates concepts of `inc` as (extent over rows, intent over columns),
// extending intents in ascending column order with the canonicity test
// "the closure adds no column below the one just added".
class CloseByOne {
 public:
  CloseByOne(const IncidenceMatrix& inc, std::size_t budget) : inc_(inc), budget_(budget) {}

  std::vector<std::pair<Bitset, Bitset>> run() {
    Bitset extent(inc_.num_objects(), true);
    Bitset intent = inc_.derive_attributes(extent);
    visit(extent, intent, 0);
    return std::move(found_);
  }

 private:
  void visit(const Bitset& extent, const Bitset& intent, std::size_t first) {
    if (found_.size() >= budget_)
      throw BudgetExceeded("concept budget of " + std::to_string(budget_) + " exceeded",
                           found_.size());
    found_.emplace_back(extent, intent);
    const std::size_t n_attr = inc_.num_attributes();
    Bitset child_extent(inc_.num_objects());
    for (std::size_t j = first; j < n_attr; ++j) {
      if (intent.test(j)) continue;
      child_extent = extent;
      child_extent &= inc_.column(static_cast<AttributeId>(j));
      Bitset child_intent = inc_.derive_attributes(child_extent);
      if (!child_intent.equal_below(intent, j)) continue;
      visit(child_extent, child_intent, j + 1);
    }
  }

  const IncidenceMatrix& inc_;
  std::size_t budget_;
  std::vector<std::pair<Bitset, Bitset>> found_;
};

}  // namespace

void canonicalize(std::vector<FormalConcept>& concepts) {
  std::sort(concepts.begin(), concepts.end(), [](const FormalConcept& a, const FormalConcept& b) {
    const std::size_t na = a.extent.count();
    const std::size_t nb = b.extent.count();
    if (na != nb) return na < nb;
    return lex_less(a.extent, b.extent);
  });
  for (std::size_t i = 0; i < concepts.size(); ++i) concepts[i].id = static_cast<ConceptId>(i);
}

std::vector<FormalConcept> enumerate_concepts(const IncidenceMatrix& incidence,
                                              const EnumerationOptions& options) {
  // Iterate over the shorter dimension; concept sets are symmetric under transposition.
  const bool transpose = incidence.num_objects() < incidence.num_attributes();
  std::vector<FormalConcept> concepts;
  if (transpose) {
    const IncidenceMatrix t = incidence.transposed();
    for (auto& [ext, itt] : CloseByOne(t, options.max_concepts).run())
      concepts.push_back({0, std::move(itt), std::move(ext)});
  } else {
    for (auto& [ext, itt] : CloseByOne(incidence, options.max_concepts).run())
      concepts.push_back({0, std::move(ext), std::move(itt)});
  }
  canonicalize(concepts);
  return concepts;
}

std::vector<FormalConcept> enumerate_concepts(const BipartiteContext& ctx,
                                              const EnumerationOptions& options) {
  return enumerate_concepts(IncidenceMatrix(ctx), options);
}

// ---------------------------------------------------------------------------
// Cover relation

std::vector<CoverPair> cover_relation(const std::vector<FormalConcept>& concepts) {
  const std::size_t n = concepts.size();
  std::vector<std::size_t> sizes(n);
  for (std::size_t i = 0; i < n; ++i) {
    sizes[i] = concepts[i].extent.count();
    if (concepts[i].id != i) throw DataError("concepts are not in canonical order");
    if (i > 0 && sizes[i] < sizes[i - 1]) throw DataError("concepts are not in canonical order");
    if (i > 0 && sizes[i] == sizes[i - 1] && concepts[i].extent == concepts[i - 1].extent)
      throw DataError("duplicate extent for concepts " + std::to_string(i - 1) + " and " +
                      std::to_string(i));
  }
  // Equal-size extents must differ; the adjacent check above only catches
  // neighbours in sort order, which is enough because equal extents sort together.
  std::vector<CoverPair> covers;
  std::vector<std::size_t> accepted;
  for (std::size_t i = 0; i < n; ++i) {
    accepted.clear();
    const Bitset& lower = concepts[i].extent;
    // Candidates in ascending extent size: any concept strictly between i and
    // d sorts before d and is itself above some accepted cover.
    for (std::size_t d = i + 1; d < n; ++d) {
      if (sizes[d] == sizes[i]) continue;
      const Bitset& upper = concepts[d].extent;
      if (!lower.is_subset_of(upper)) continue;
      bool dominated = false;
      for (std::size_t c : accepted) {
        if (concepts[c].extent.is_subset_of(upper)) {
          dominated = true;
          break;
        }
      }
      if (dominated) continue;
      accepted.push_back(d);
      covers.push_back({static_cast<ConceptId>(i), static_cast<ConceptId>(d)});
    }
  }
  std::sort(covers.begin(), covers.end());
  return covers;
}

std::vector<std::optional<ConceptId>> single_lower_neighbors(
    const std::vector<FormalConcept>& concepts) {
  const std::size_t n = concepts.size();
  std::vector<std::size_t> below(n, 0);
  std::vector<std::vector<std::size_t>> above(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || concepts[i].extent == concepts[j].extent) continue;
      if (concepts[i].extent.is_subset_of(concepts[j].extent)) {
        above[i].push_back(j);
        ++below[j];
      }
    }
  }
  std::vector<std::optional<ConceptId>> lower(n);
  std::deque<std::size_t> queue;
  for (std::size_t i = 0; i < n; ++i)
    if (below[i] == 0) queue.push_back(i);
  while (!queue.empty()) {
    const std::size_t c = queue.front();
    queue.pop_front();
    for (std::size_t up : above[c]) {
      if (--below[up] == 0) {
        lower[up] = static_cast<ConceptId>(c);
        queue.push_back(up);
      }
    }
  }
  return lower;
}

ConceptLattice build_lattice(const BipartiteContext& ctx, const EnumerationOptions& options) {
  ConceptLattice lattice;
  lattice.num_objects = ctx.num_objects();
  lattice.num_attributes = ctx.num_attributes();
  lattice.concepts = enumerate_concepts(ctx, options);
  lattice.covers = cover_relation(lattice.concepts);
  return lattice;
}

// ---------------------------------------------------------------------------
// Neighbour pairs

std::vector<ConceptPair> neighbor_pairs(const ConceptLattice& lattice) {
  std::vector<ConceptPair> pairs;
  pairs.reserve(lattice.covers.size());
  for (const CoverPair& c : lattice.covers)
    pairs.push_back({std::min(c.lower, c.upper), std::max(c.lower, c.upper)});
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  return pairs;
}

NegativeSample sample_non_neighbor_pairs(const ConceptLattice& lattice, std::size_t count,
                                         Rng& rng) {
  const std::uint64_t n = lattice.size();
  std::unordered_set<std::uint64_t> cover_keys;
  for (const CoverPair& c : lattice.covers) {
    cover_keys.insert(std::uint64_t{c.lower} * n + c.upper);
    cover_keys.insert(std::uint64_t{c.upper} * n + c.lower);
  }
  auto is_cover = [&](std::uint64_t a, std::uint64_t b) { return cover_keys.count(a * n + b) > 0; };

  NegativeSample out;
  const std::uint64_t ordered = n * (n > 0 ? n - 1 : 0);
  const std::uint64_t available = ordered - cover_keys.size();
  if (available <= count || available < 4 * static_cast<std::uint64_t>(count)) {
    std::vector<ConceptPair> all;
    all.reserve(available);
    for (std::uint64_t a = 0; a < n; ++a)
      for (std::uint64_t b = 0; b < n; ++b)
        if (a != b && !is_cover(a, b))
          all.push_back({static_cast<ConceptId>(a), static_cast<ConceptId>(b)});
    if (all.size() <= count) {
      out.exhausted = all.size() < count;
      out.pairs = std::move(all);
      return out;
    }
    for (std::size_t k : sample_without_replacement(all.size(), count, rng))
      out.pairs.push_back(all[k]);
    return out;
  }
  std::unordered_set<std::uint64_t> drawn;
  while (out.pairs.size() < count) {
    const std::uint64_t a = rng.uniform_index(n);
    const std::uint64_t b = rng.uniform_index(n);
    if (a == b || is_cover(a, b)) continue;
    if (!drawn.insert(a * n + b).second) continue;
    out.pairs.push_back({static_cast<ConceptId>(a), static_cast<ConceptId>(b)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON lines

std::string concepts_to_jsonl(const ConceptLattice& lattice) {
  std::string out;
  for (const FormalConcept& c : lattice.concepts) {
    nlohmann::json j = {
        {"id", c.id}, {"extent", c.extent.to_indices()}, {"intent", c.intent.to_indices()}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string covers_to_jsonl(const ConceptLattice& lattice) {
  std::string out;
  for (const CoverPair& c : lattice.covers) {
    out += nlohmann::json{{"lower", c.lower}, {"upper", c.upper}}.dump();
    out += '\n';
  }
  return out;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
}

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::vector<nlohmann::json> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      rows.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

}  // namespace

void write_concepts_jsonl(const ConceptLattice& lattice, const std::filesystem::path& path) {
  write_text(path, concepts_to_jsonl(lattice));
}

void write_covers_jsonl(const ConceptLattice& lattice, const std::filesystem::path& path) {
  write_text(path, covers_to_jsonl(lattice));
}

std::vector<FormalConcept> read_concepts_jsonl(const std::filesystem::path& path,
                                               std::size_t num_objects,
                                               std::size_t num_attributes) {
  std::vector<FormalConcept> concepts;
  try {
    for (const auto& row : read_jsonl(path)) {
      FormalConcept c;
      c.id = row.at("id").get<ConceptId>();
      const auto ext = row.at("extent").get<std::vector<std::uint32_t>>();
      const auto itt = row.at("intent").get<std::vector<std::uint32_t>>();
      for (auto g : ext)
        if (g >= num_objects) throw DataError("concept extent id out of range");
      for (auto m : itt)
        if (m >= num_attributes) throw DataError("concept intent id out of range");
      c.extent = Bitset::from_indices(num_objects, ext);
      c.intent = Bitset::from_indices(num_attributes, itt);
      if (c.id != concepts.size()) throw DataError("concept ids are not dense and ordered");
      concepts.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed concepts file: ") + e.what());
  }
  return concepts;
}

ConceptLattice read_lattice_jsonl(const std::filesystem::path& concepts_path,
                                  const std::filesystem::path& covers_path,
                                  std::size_t num_objects, std::size_t num_attributes) {
  ConceptLattice lattice;
  lattice.num_objects = num_objects;
  lattice.num_attributes = num_attributes;
  lattice.concepts = read_concepts_jsonl(concepts_path, num_objects, num_attributes);
  try {
    for (const auto& row : read_jsonl(covers_path)) {
      CoverPair p{row.at("lower").get<ConceptId>(), row.at("upper").get<ConceptId>()};
      if (p.lower >= lattice.size() || p.upper >= lattice.size())
        throw DataError("cover references a missing concept");
      lattice.covers.push_back(p);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed covers file: ") + e.what());
  }
  std::sort(lattice.covers.begin(), lattice.covers.end());
  return lattice;
}

}  // namespace fcalink
