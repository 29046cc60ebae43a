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
#include <fstream>
#include <set>

#include "fcalink/context.hpp"
#include "fcalink/error.hpp"
#include "fcalink/rng.hpp"

using namespace fcalink;

namespace {

BipartiteContext random_context(std::size_t nu, std::size_t nv, double density, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Edge> e;
  for (ObjectId g = 0; g < nu; ++g)
    for (AttributeId m = 0; m < nv; ++m)
      if (rng.uniform01() < density) e.push_back({g, m});
  return BipartiteContext::from_edges(nu, nv, e);
}

std::filesystem::path temp_file(const std::string& name, const std::string& body) {
  const auto p = std::filesystem::temp_directory_path() / ("fcalink_ctx_" + name);
  std::ofstream(p, std::ios::binary) << body;
  return p;
}

std::multiset<std::pair<std::string, std::string>> labelled_edges(const BipartiteContext& ctx) {
  std::multiset<std::pair<std::string, std::string>> out;
  for (const Edge& e : ctx.edges())
    out.emplace(ctx.object_label(e.object), ctx.attribute_label(e.attribute));
  return out;
}

}  // namespace

TEST_CASE("edge list loading") {
  SUBCASE("two objects sharing an attribute") {
    const auto ctx = parse_edge_list("a,p1\nb,p1\n", EdgeListFormat::kCsv);
    CHECK(ctx.num_objects() == 2);
    CHECK(ctx.num_attributes() == 1);
    CHECK(ctx.num_edges() == 2);
  }
  SUBCASE("duplicate rows collapse and are counted") {
    const auto ctx = parse_edge_list("a,p1\na,p1\n", EdgeListFormat::kCsv);
    CHECK(ctx.num_edges() == 1);
    CHECK(ctx.duplicates_collapsed() == 1);
  }
  SUBCASE("labels are interned in first-appearance order") {
    const auto ctx = parse_edge_list("object,attribute\nz,q\ny,p\nz,p\n", EdgeListFormat::kCsv);
    CHECK(ctx.object_label(0) == "z");
    CHECK(ctx.object_label(1) == "y");
    CHECK(ctx.attribute_label(0) == "q");
    CHECK(ctx.attribute_label(1) == "p");
  }
  SUBCASE("quoted CSV fields") {
    const auto ctx = parse_edge_list("\"Smith, J.\",\"paper \"\"x\"\"\"\n", EdgeListFormat::kCsv);
    CHECK(ctx.object_label(0) == "Smith, J.");
    CHECK(ctx.attribute_label(0) == "paper \"x\"");
  }
  SUBCASE("tsv with dates") {
    const auto ctx = parse_edge_list("a\tp\t2015-03-01\nb\tp\t2016-01-01\n", EdgeListFormat::kTsv);
    CHECK(ctx.has_dates());
    CHECK(ctx.num_edges() == 2);
  }
  SUBCASE("malformed rows report their line") {
    try {
      parse_edge_list("a,p\nb\n", EdgeListFormat::kCsv);
      FAIL("expected a parse error");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_edge_list("a,p,2015-13-45\n", EdgeListFormat::kCsv), DataError);
    CHECK_THROWS_AS(parse_edge_list("a,p,x,y\n", EdgeListFormat::kCsv), DataError);
  }
  SUBCASE("empty input is an error") {
    CHECK_THROWS_AS(parse_edge_list("", EdgeListFormat::kCsv), DataError);
    CHECK_THROWS_AS(parse_edge_list("object,attribute\n", EdgeListFormat::kCsv), DataError);
  }
}

TEST_CASE("edge list round trip through a file") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto ctx = random_context(12, 9, 0.3, seed);
    for (auto fmt : {EdgeListFormat::kCsv, EdgeListFormat::kTsv}) {
      const auto path = temp_file("rt", "");
      write_edge_list(ctx, path, fmt);
      const auto back = load_edge_list(path, fmt);
      CHECK(labelled_edges(back) == labelled_edges(ctx));
      CHECK(back.num_edges() == ctx.num_edges());
      std::filesystem::remove(path);
    }
  }
}

TEST_CASE("temporal split") {
  SUBCASE("hand example") {
    const auto ctx =
        parse_edge_list("u1,v1,2014-05-01\nu2,v2,2017-05-01\n", EdgeListFormat::kCsv);
    const auto split = split_temporal(ctx, *parse_date("2016-01-01"));
    CHECK(split.input.num_objects() == 1);
    CHECK(split.input.num_attributes() == 1);
    CHECK(split.input.object_label(0) == "u1");
    CHECK(split.input.attribute_label(0) == "v1");
    CHECK(split.input.num_edges() == 1);
    CHECK_FALSE(split.target.find_object("u2").has_value());
    CHECK(split.target.find_object("u1").has_value());
  }
  SUBCASE("all edges before the cutoff is a no-op") {
    const auto ctx = parse_edge_list("a,x,2010-01-01\nb,x,2011-01-01\nb,y,2012-01-01\n",
                                     EdgeListFormat::kCsv);
    const auto split = split_temporal(ctx, *parse_date("2013-01-01"));
    CHECK(split.input == ctx);
    CHECK(split.target == ctx);
  }
  SUBCASE("undated contexts are rejected") {
    CHECK_THROWS_AS(split_temporal(parse_edge_list("a,x\n", EdgeListFormat::kCsv),
                                   *parse_date("2013-01-01")),
                    DataError);
  }
  SUBCASE("cutoff outside the data range warns") {
    const auto ctx = parse_edge_list("a,x,2010-01-01\n", EdgeListFormat::kCsv);
    CHECK_FALSE(split_temporal(ctx, *parse_date("1990-01-01")).warnings.empty());
  }
  SUBCASE("every target object has an edge before the cutoff") {
    Rng rng(5);
    std::string csv;
    for (int i = 0; i < 200; ++i) {
      const int year = 2010 + static_cast<int>(rng.uniform_index(10));
      csv += "o" + std::to_string(rng.uniform_index(25)) + ",a" +
             std::to_string(rng.uniform_index(40)) + "," + std::to_string(year) + "-06-01\n";
    }
    const auto ctx = parse_edge_list(csv, EdgeListFormat::kCsv);
    const Date cutoff = *parse_date("2015-01-01");
    const auto split = split_temporal(ctx, cutoff);
    for (ObjectId g = 0; g < split.target.num_objects(); ++g) {
      const auto orig = *ctx.find_object(split.target.object_label(g));
      bool early = false;
      for (std::size_t i = 0; i < ctx.num_edges(); ++i)
        early = early || (ctx.edges()[i].object == orig && ctx.dates()[i] < cutoff);
      CHECK(early);
    }
  }
}

TEST_CASE("random edge removal") {
  const auto ctx = random_context(20, 20, 0.25, 9);
  SUBCASE("fraction 0 is the identity") {
    const auto s = split_random_edges(ctx, {0.0, 1});
    CHECK(s.input == ctx);
    CHECK(s.target == ctx);
  }
  SUBCASE("exact count and subset property") {
    std::vector<Edge> e;
    for (ObjectId g = 0; g < 10; ++g)
      for (AttributeId m = 0; m < 10; ++m) e.push_back({g, m});
    const auto full = BipartiteContext::from_edges(10, 10, e);
    const auto s = split_random_edges(full, {0.1, 4});
    CHECK(s.input.num_edges() == 90);
    CHECK(s.target.num_edges() == 100);
  }
  SUBCASE("input edges are target edges") {
    const auto s = split_random_edges(ctx, {0.3, 2});
    for (const Edge& e : s.input.edges()) {
      const auto g = s.target.find_object(s.input.object_label(e.object));
      const auto m = s.target.find_attribute(s.input.attribute_label(e.attribute));
      REQUIRE(g);
      REQUIRE(m);
      CHECK(s.target.has_edge(*g, *m));
    }
  }
  SUBCASE("isolated attributes are pruned from the input only") {
    const auto small = parse_edge_list("a,x\nb,y\n", EdgeListFormat::kCsv);
    const auto s = split_random_edges(small, {0.5, 1});
    CHECK(s.input.num_attributes() == 1);
    CHECK(s.target.num_attributes() == 2);
    CHECK(s.input.num_objects() == 2);
  }
  SUBCASE("same seed, same split") {
    const auto a = split_random_edges(ctx, {0.2, 77});
    const auto b = split_random_edges(ctx, {0.2, 77});
    CHECK(format_edge_list(a.input, EdgeListFormat::kCsv) ==
          format_edge_list(b.input, EdgeListFormat::kCsv));
    const auto c = split_random_edges(ctx, {0.2, 78});
    CHECK(format_edge_list(a.input, EdgeListFormat::kCsv) !=
          format_edge_list(c.input, EdgeListFormat::kCsv));
  }
}

TEST_CASE("context statistics") {
  SUBCASE("empty") {
    const auto s = context_stats(BipartiteContext{});
    CHECK(s.num_objects == 0);
    CHECK(s.num_edges == 0);
    CHECK(s.density == 0.0);
  }
  SUBCASE("3x3 identity") {
    const auto ctx = BipartiteContext::from_edges(3, 3, {{0, 0}, {1, 1}, {2, 2}});
    const auto s = context_stats(ctx);
    CHECK(s.num_edges == 3);
    CHECK(s.density == doctest::Approx(1.0 / 3.0));
    CHECK(s.object_degree_histogram.at(1) == 3);
    const auto j = to_json(s);
    CHECK(j.at("edges") == 3);
  }
}
