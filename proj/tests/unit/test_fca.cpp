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

#include <doctest.h>

#include <filesystem>
#include <set>

#include "fcalink/error.hpp"
#include "fcalink/fca.hpp"
#include "fcalink/rng.hpp"
#include "oracles.hpp"

using namespace fcalink;

namespace {

struct Sample {
  BipartiteContext ctx;
  oracle::Relation rel;
};

Sample random_sample(std::size_t nu, std::size_t nv, double density, Rng& rng) {
  Sample s;
  s.rel.assign(nu, std::vector<bool>(nv, false));
  std::vector<Edge> e;
  for (ObjectId g = 0; g < nu; ++g)
    for (AttributeId m = 0; m < nv; ++m)
      if (rng.uniform01() < density) {
        e.push_back({g, m});
        s.rel[g][m] = true;
      }
  s.ctx = BipartiteContext::from_edges(nu, nv, e);
  return s;
}

BipartiteContext identity3() { return BipartiteContext::from_edges(3, 3, {{0, 0}, {1, 1}, {2, 2}}); }

}  // namespace

TEST_CASE("derivation operators") {
  const auto full = BipartiteContext::from_edges(2, 2, {{0, 0}, {0, 1}, {1, 0}, {1, 1}});
  CHECK(derive_attributes(full, {0}) == std::vector<AttributeId>{0, 1});
  CHECK(derive_attributes(identity3(), {}) == std::vector<AttributeId>{0, 1, 2});
  CHECK(derive_objects(identity3(), {}) == std::vector<ObjectId>{0, 1, 2});
  CHECK(derive_attributes(identity3(), {0, 1}).empty());
  CHECK_THROWS_AS(derive_attributes(identity3(), {3}), UsageError);
  CHECK_THROWS_AS(derive_objects(identity3(), {7}), UsageError);
}

TEST_CASE("concept enumeration examples") {
  const auto full = BipartiteContext::from_edges(2, 2, {{0, 0}, {0, 1}, {1, 0}, {1, 1}});
  const auto one = build_lattice(full);
  REQUIRE(one.size() == 1);
  CHECK(one.concepts[0].extent.count() == 2);
  CHECK(one.concepts[0].intent.count() == 2);
  CHECK(one.covers.empty());

  const auto lat = build_lattice(identity3());
  REQUIRE(lat.size() == 5);
  CHECK(lat.concepts[lat.bottom()].extent.none());
  CHECK(lat.concepts[lat.bottom()].intent.count() == 3);
  CHECK(lat.concepts[lat.top()].extent.count() == 3);
  CHECK(lat.concepts[lat.top()].intent.none());
  REQUIRE(lat.covers.size() == 6);
  for (ConceptId c = 1; c <= 3; ++c) {
    CHECK(std::count(lat.covers.begin(), lat.covers.end(), CoverPair{0, c}) == 1);
    CHECK(std::count(lat.covers.begin(), lat.covers.end(), CoverPair{c, 4}) == 1);
  }
  CHECK(neighbor_pairs(lat).size() == 6);
}

TEST_CASE("cover relation on a chain omits the transitive pair") {
  // Extents {} ⊂ {0} ⊂ {0,1}: objects 0 ⊇ 1 in attributes.
  const auto ctx = BipartiteContext::from_edges(2, 2, {{0, 0}, {0, 1}, {1, 0}});
  const auto lat = build_lattice(ctx);
  REQUIRE(lat.size() == 2);
  const auto chain = BipartiteContext::from_edges(2, 3, {{0, 0}, {0, 1}, {1, 0}});
  const auto l3 = build_lattice(chain);
  REQUIRE(l3.size() == 3);
  CHECK(l3.covers == std::vector<CoverPair>{{0, 1}, {1, 2}});
}

TEST_CASE("cover relation rejects duplicate extents") {
  auto concepts = build_lattice(identity3()).concepts;
  concepts.push_back(concepts.back());
  CHECK_THROWS_AS(cover_relation(concepts), DataError);
}

TEST_CASE("enumeration matches brute force; covers match the reduction oracle") {
  Rng rng(2024);
  for (int trial = 0; trial < 120; ++trial) {
    const std::size_t nu = 1 + rng.uniform_index(6);
    const std::size_t nv = 1 + rng.uniform_index(6);
    const double density = std::array{0.2, 0.5, 0.8}[trial % 3];
    const Sample s = random_sample(nu, nv, density, rng);
    const auto lat = build_lattice(s.ctx);
    const auto expected = oracle::brute_force_concepts(s.rel, nv);
    REQUIRE(lat.size() == expected.size());
    std::vector<oracle::Set> extents;
    for (std::size_t i = 0; i < expected.size(); ++i) {
      CHECK(lat.concepts[i].id == i);
      CHECK(lat.concepts[i].extent.to_indices() == expected[i].first);
      CHECK(lat.concepts[i].intent.to_indices() == expected[i].second);
      extents.push_back(expected[i].first);
    }
    const auto reduction = oracle::transitive_reduction(extents);
    std::set<std::pair<std::uint32_t, std::uint32_t>> got;
    for (const auto& c : lat.covers) got.emplace(c.lower, c.upper);
    CHECK(got == reduction);
  }
}

TEST_CASE("closure property and permutation invariance of the concept count") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const Sample s = random_sample(14, 11, 0.35, rng);
    const auto lat = build_lattice(s.ctx);
    const IncidenceMatrix inc(s.ctx);
    for (const auto& c : lat.concepts) {
      CHECK(inc.derive_attributes(c.extent) == c.intent);
      CHECK(inc.derive_objects(c.intent) == c.extent);
    }
    std::vector<ObjectId> pg(14);
    std::vector<AttributeId> pm(11);
    std::iota(pg.begin(), pg.end(), 0u);
    std::iota(pm.begin(), pm.end(), 0u);
    rng.shuffle(pg);
    rng.shuffle(pm);
    std::vector<Edge> e;
    for (const Edge& x : s.ctx.edges()) e.push_back({pg[x.object], pm[x.attribute]});
    const auto permuted = build_lattice(BipartiteContext::from_edges(14, 11, e));
    CHECK(permuted.size() == lat.size());
    CHECK(permuted.covers.size() == lat.covers.size());
  }
}

TEST_CASE("the single lower neighbour picked per concept is one of its covers") {
  Rng rng(8);
  const Sample s = random_sample(8, 8, 0.4, rng);
  const auto lat = build_lattice(s.ctx);
  const auto single = single_lower_neighbors(lat.concepts);
  REQUIRE(single.size() == lat.size());
  CHECK_FALSE(single[lat.bottom()].has_value());
  for (ConceptId c = 1; c < lat.size(); ++c) {
    REQUIRE(single[c].has_value());
    CHECK(std::binary_search(lat.covers.begin(), lat.covers.end(), CoverPair{*single[c], c}));
  }
}

TEST_CASE("enumeration budget") {
  Rng rng(3);
  const Sample s = random_sample(12, 12, 0.5, rng);
  try {
    build_lattice(s.ctx, {.max_concepts = 5});
    FAIL("expected the budget to trip");
  } catch (const BudgetExceeded& e) {
    CHECK(e.partial_count() >= 5);
  }
}

TEST_CASE("negative sampling") {
  const auto lat = build_lattice(identity3());
  Rng rng(1);
  const auto neg = sample_non_neighbor_pairs(lat, 6, rng);
  CHECK_FALSE(neg.exhausted);
  CHECK(neg.pairs.size() == 6);
  std::set<ConceptPair> seen;
  for (const auto& p : neg.pairs) {
    CHECK(p.first != p.second);
    const ConceptPair key{std::min(p.first, p.second), std::max(p.first, p.second)};
    CHECK_FALSE(std::binary_search(lat.covers.begin(), lat.covers.end(), CoverPair{key.first, key.second}));
    CHECK(seen.insert(p).second);
  }
  Rng again(1);
  CHECK(sample_non_neighbor_pairs(lat, 6, again).pairs == neg.pairs);

  const auto two = build_lattice(BipartiteContext::from_edges(1, 1, {}));
  REQUIRE(two.size() == 2);
  CHECK(neighbor_pairs(two).size() == 1);
  Rng r2(5);
  const auto none = sample_non_neighbor_pairs(two, 1, r2);
  CHECK(none.exhausted);
  CHECK(none.pairs.empty());
}

TEST_CASE("lattice JSON lines round trip") {
  Rng rng(12);
  const Sample s = random_sample(9, 7, 0.4, rng);
  const auto lat = build_lattice(s.ctx);
  const auto dir = std::filesystem::temp_directory_path();
  write_concepts_jsonl(lat, dir / "fcalink_c.jsonl");
  write_covers_jsonl(lat, dir / "fcalink_v.jsonl");
  const auto back = read_lattice_jsonl(dir / "fcalink_c.jsonl", dir / "fcalink_v.jsonl", 9, 7);
  CHECK(back.size() == lat.size());
  CHECK(back.covers == lat.covers);
  CHECK(concepts_to_jsonl(back) == concepts_to_jsonl(lat));
  const auto first_line = concepts_to_jsonl(build_lattice(identity3()));
  CHECK(std::count(first_line.begin(), first_line.end(), '\n') == 5);
}
