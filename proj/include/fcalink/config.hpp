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

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "fcalink/encoder.hpp"

namespace fcalink {

struct SplitConfig {
  std::string kind = "random";  // "random" or "temporal"
  double fraction = 0.1;
  std::string cutoff;           // YYYY-MM-DD for temporal splits
  bool prune_isolated_attributes = true;
  bool restrict_target_attributes = false;
  friend bool operator==(const SplitConfig&, const SplitConfig&) = default;
};

struct ConceptsConfig {
  std::size_t max_concepts = 2'000'000;
  friend bool operator==(const ConceptsConfig&, const ConceptsConfig&) = default;
};

struct PretrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  double mask_rate = 0.15;
  double holdout_fraction = 0.2;
  std::size_t max_len_cap = 128;
  double learning_rate = 1e-3;
  double clip_norm = 1.0;
  friend bool operator==(const PretrainConfig&, const PretrainConfig&) = default;
};

struct FinetuneConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double clip_norm = 1.0;
  double test_fraction = 0.2;
  bool balance = true;
  bool balance_test = false;
  std::size_t max_group = 2;
  std::size_t max_candidates = 5'000'000;
  std::string train_source = "input";  // candidates, input or both
  friend bool operator==(const FinetuneConfig&, const FinetuneConfig&) = default;
};

struct BaselineConfig {
  std::size_t rank = 32;
  double lambda = 0.1;
  std::size_t epochs = 20;
  friend bool operator==(const BaselineConfig&, const BaselineConfig&) = default;
};

struct SeedConfig {
  std::uint64_t split = 1;
  std::uint64_t pretrain = 2;
  std::uint64_t finetune = 3;
  std::uint64_t baseline = 4;
  friend bool operator==(const SeedConfig&, const SeedConfig&) = default;
};

// Everything a pipeline run depends on besides its input files.
struct RunConfig {
  std::string input;      // edge list
  std::string task = "oa";  // "oo" or "oa"
  SplitConfig split;
  ConceptsConfig concepts;
  nn::EncoderConfig encoder;  // vocab_size, max_len and seed are set per stage
  PretrainConfig pretrain;
  FinetuneConfig finetune;
  BaselineConfig baseline;
  SeedConfig seeds;

  // Sets every stage seed from one master seed.
  void set_master_seed(std::uint64_t seed);

  nlohmann::json to_json() const;
  // Unknown keys are rejected; missing keys keep their defaults.
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  // 16 hex digits of FNV-1a over the canonical JSON form.
  std::string hash() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);
// FNV-1a digest of a file's bytes.
std::string file_hash(const std::filesystem::path& path);

}  // namespace fcalink
