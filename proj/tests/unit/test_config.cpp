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

#include "fcalink/config.hpp"
#include "fcalink/error.hpp"

using namespace fcalink;

TEST_CASE("FNV-1a reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
  CHECK(hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("run configuration round-trip") {
  RunConfig c;
  c.input = "data/edges.csv";
  c.task = "oo";
  c.split.kind = "temporal";
  c.split.cutoff = "2019-01-01";
  c.encoder.d_model = 48;
  c.pretrain.epochs = 7;
  c.finetune.max_group = 3;
  c.baseline.rank = 8;
  c.concepts.max_concepts = 1000;
  c.set_master_seed(99);

  const auto back = RunConfig::from_json(c.to_json());
  CHECK(back == c);
  CHECK(back.hash() == c.hash());

  const auto path = std::filesystem::temp_directory_path() / "fcalink_config.json";
  c.save(path);
  CHECK(RunConfig::load(path) == c);
  std::filesystem::remove(path);
}

TEST_CASE("hash follows content") {
  RunConfig a, b;
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 16);
  b.pretrain.epochs += 1;
  CHECK(a.hash() != b.hash());
  b = a;
  b.set_master_seed(5);
  CHECK(a.hash() != b.hash());
}

TEST_CASE("master seed fans out to distinct stage seeds") {
  RunConfig c;
  c.set_master_seed(1);
  CHECK(c.seeds.split != c.seeds.pretrain);
  CHECK(c.seeds.pretrain != c.seeds.finetune);
  CHECK(c.seeds.finetune != c.seeds.baseline);
  RunConfig d;
  d.set_master_seed(1);
  CHECK(c.seeds == d.seeds);
}

TEST_CASE("partial and malformed configuration files") {
  const auto partial = RunConfig::from_json(nlohmann::json::parse(R"({"pretrain":{"epochs":3}})"));
  CHECK(partial.pretrain.epochs == 3);
  CHECK(partial.pretrain.batch_size == RunConfig{}.pretrain.batch_size);
  CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json::parse(R"({"pretrian":{}})")), UsageError);
  CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json::parse(R"({"pretrain":{"epoch":3}})")), UsageError);
  CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json::parse(R"({"task":"ab"})")), UsageError);
  CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json::parse(R"({"finetune":{"train_source":"target"}})")), UsageError);
  CHECK_THROWS_AS(RunConfig::load("/nonexistent/fcalink.json"), UsageError);
}
