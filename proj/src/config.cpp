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

#include "fcalink/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "fcalink/error.hpp"
#include "fcalink/finetune.hpp"
#include "fcalink/rng.hpp"

namespace fcalink {
namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw UsageError("config section '" + where + "' must be an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw UsageError("unknown config key '" + where + k + "'");
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw UsageError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace

void RunConfig::set_master_seed(std::uint64_t seed) {
  seeds.split = derive_seed(seed, 1);
  seeds.pretrain = derive_seed(seed, 2);
  seeds.finetune = derive_seed(seed, 3);
  seeds.baseline = derive_seed(seed, 4);
}

nlohmann::json RunConfig::to_json() const {
  json enc = encoder.to_json();
  enc.erase("vocab_size");
  enc.erase("seed");
  enc.erase("max_len");
  return {
      {"input", input},
      {"task", task},
      {"split",
       {{"kind", split.kind},
        {"fraction", split.fraction},
        {"cutoff", split.cutoff},
        {"prune_isolated_attributes", split.prune_isolated_attributes},
        {"restrict_target_attributes", split.restrict_target_attributes}}},
      {"concepts", {{"max_concepts", concepts.max_concepts}}},
      {"encoder", enc},
      {"pretrain",
       {{"epochs", pretrain.epochs},
        {"batch_size", pretrain.batch_size},
        {"mask_rate", pretrain.mask_rate},
        {"holdout_fraction", pretrain.holdout_fraction},
        {"max_len_cap", pretrain.max_len_cap},
        {"learning_rate", pretrain.learning_rate},
        {"clip_norm", pretrain.clip_norm}}},
      {"finetune",
       {{"epochs", finetune.epochs},
        {"batch_size", finetune.batch_size},
        {"learning_rate", finetune.learning_rate},
        {"clip_norm", finetune.clip_norm},
        {"test_fraction", finetune.test_fraction},
        {"balance", finetune.balance},
        {"balance_test", finetune.balance_test},
        {"max_group", finetune.max_group},
        {"max_candidates", finetune.max_candidates},
        {"train_source", finetune.train_source}}},
      {"baseline",
       {{"rank", baseline.rank}, {"lambda", baseline.lambda}, {"epochs", baseline.epochs}}},
      {"seeds",
       {{"split", seeds.split},
        {"pretrain", seeds.pretrain},
        {"finetune", seeds.finetune},
        {"baseline", seeds.baseline}}},
  };
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  check_keys(j, {"input", "task", "split", "concepts", "encoder", "pretrain", "finetune", "baseline", "seeds"}, "");
  read(j, "input", c.input);
  read(j, "task", c.task);
  if (c.task != "oo" && c.task != "oa") throw UsageError("task must be 'oo' or 'oa'");
  if (j.contains("split")) {
    const json& s = j.at("split");
    check_keys(s, {"kind", "fraction", "cutoff", "prune_isolated_attributes", "restrict_target_attributes"}, "split.");
    read(s, "kind", c.split.kind);
    read(s, "fraction", c.split.fraction);
    read(s, "cutoff", c.split.cutoff);
    read(s, "prune_isolated_attributes", c.split.prune_isolated_attributes);
    read(s, "restrict_target_attributes", c.split.restrict_target_attributes);
    if (c.split.kind != "random" && c.split.kind != "temporal")
      throw UsageError("split.kind must be 'random' or 'temporal'");
  }
  if (j.contains("concepts")) {
    const json& f = j.at("concepts");
    check_keys(f, {"max_concepts"}, "concepts.");
    read(f, "max_concepts", c.concepts.max_concepts);
  }
  if (j.contains("encoder")) {
    const json& e = j.at("encoder");
    check_keys(e, {"d_model", "n_layers", "n_heads", "d_ff", "dropout"}, "encoder.");
    c.encoder = nn::EncoderConfig::from_json(e);
  }
  if (j.contains("pretrain")) {
    const json& p = j.at("pretrain");
    check_keys(p, {"epochs", "batch_size", "mask_rate", "holdout_fraction", "max_len_cap", "learning_rate", "clip_norm"}, "pretrain.");
    read(p, "epochs", c.pretrain.epochs);
    read(p, "batch_size", c.pretrain.batch_size);
    read(p, "mask_rate", c.pretrain.mask_rate);
    read(p, "holdout_fraction", c.pretrain.holdout_fraction);
    read(p, "max_len_cap", c.pretrain.max_len_cap);
    read(p, "learning_rate", c.pretrain.learning_rate);
    read(p, "clip_norm", c.pretrain.clip_norm);
  }
  if (j.contains("finetune")) {
    const json& f = j.at("finetune");
    check_keys(f, {"epochs", "batch_size", "learning_rate", "clip_norm", "test_fraction", "balance", "balance_test", "max_group", "max_candidates", "train_source"}, "finetune.");
    read(f, "epochs", c.finetune.epochs);
    read(f, "batch_size", c.finetune.batch_size);
    read(f, "learning_rate", c.finetune.learning_rate);
    read(f, "clip_norm", c.finetune.clip_norm);
    read(f, "test_fraction", c.finetune.test_fraction);
    read(f, "balance", c.finetune.balance);
    read(f, "balance_test", c.finetune.balance_test);
    read(f, "max_group", c.finetune.max_group);
    read(f, "max_candidates", c.finetune.max_candidates);
    read(f, "train_source", c.finetune.train_source);
    train_source_from_string(c.finetune.train_source);
  }
  if (j.contains("baseline")) {
    const json& b = j.at("baseline");
    check_keys(b, {"rank", "lambda", "epochs"}, "baseline.");
    read(b, "rank", c.baseline.rank);
    read(b, "lambda", c.baseline.lambda);
    read(b, "epochs", c.baseline.epochs);
  }
  if (j.contains("seeds")) {
    const json& s = j.at("seeds");
    check_keys(s, {"split", "pretrain", "finetune", "baseline"}, "seeds.");
    read(s, "split", c.seeds.split);
    read(s, "pretrain", c.seeds.pretrain);
    read(s, "finetune", c.seeds.finetune);
    read(s, "baseline", c.seeds.baseline);
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

void RunConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path.string());
  out << to_json().dump(2) << '\n';
}

std::string RunConfig::hash() const { return hex64(fnv1a64(to_json().dump())); }

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    h = fnv1a64(std::string_view(buf, static_cast<std::size_t>(in.gcount())), h);
  }
  return hex64(h);
}

}  // namespace fcalink
