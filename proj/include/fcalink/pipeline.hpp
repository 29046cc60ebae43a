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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fcalink/config.hpp"
#include "fcalink/context.hpp"
#include "fcalink/finetune.hpp"
#include "fcalink/metrics.hpp"
#include "fcalink/tokenizer.hpp"

namespace fcalink {

const char* version();

namespace pipeline {

enum class Task { kObjectObject, kObjectAttribute };
const char* to_string(Task task);
Task task_from_string(const std::string& s);

// Written next to every stage's artifacts. Paths are relative to the run
// directory unless they point outside it.
struct Manifest {
  std::string stage;
  std::string version;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> inputs;   // path → FNV-1a digest
  std::map<std::string, std::string> outputs;  // path → FNV-1a digest

  nlohmann::json to_json() const;
  static Manifest from_json(const nlohmann::json& j);
};

struct BaselineResult {
  std::map<std::string, metrics::Report> reports;  // method → metrics
  std::size_t mf_rank = 0;
};

// One run directory. Every stage reads its inputs from upstream stage
// directories, refuses artifacts made under a different config hash, and
// writes `<stage>/manifest.json` last so an interrupted stage leaves none.
class Run {
 public:
  Run(std::filesystem::path dir, RunConfig config);

  const std::filesystem::path& dir() const noexcept { return dir_; }
  const RunConfig& config() const noexcept { return config_; }

  // ingest: edge list → ingest/context.tsv, ingest/stats.json
  ContextStats ingest(const std::filesystem::path& edge_list);
  // split: → split/input.tsv, split/target.tsv, split/stats.json
  void split();
  // concepts: split input (or an explicit edge list) → concepts/concepts.jsonl
  std::size_t concepts(const std::optional<std::filesystem::path>& edge_list = std::nullopt);
  // covers: → covers/covers.jsonl
  std::size_t covers();
  // pretrain: → pretrain/<side>.ckpt, <side>_loss.csv, <side>_heldout.json
  void pretrain(const std::vector<Side>& sides);
  // finetune-oo / finetune-oa: → finetune-<task>/model.ckpt, loss.csv
  void finetune(Task task);
  // predict: scores the held-out samples → predict-<task>/predictions.csv
  PredictionReport predict(Task task);
  // eval: predict-<task>/predictions.csv (or a given report) → eval-<task>/metrics.json
  metrics::Report eval(Task task, const std::optional<std::filesystem::path>& predictions = std::nullopt);
  // baseline: common neighbours and factorisation on the same samples
  BaselineResult baseline(Task task);
  // ablate-no-pretrain: fine-tune from random weights, predict and evaluate
  // → ablate-<task>/{model.ckpt,loss.csv,predictions.csv,metrics.json}
  metrics::Report ablate(Task task);

  // Sides pre-trained for a task: the object side for O-O, both for O-A.
  static std::vector<Side> sides_for(Task task);

 private:
  class Stage;

  // Path of `<upstream>/<file>` after checking its manifest; `command` is
  // the stage named in the error when the manifest is missing.
  std::filesystem::path require(Stage& stage, const std::string& upstream,
                                const std::string& file, const std::string& command);
  SplitPair load_split(Stage& stage);
  SampleSplit<OOSample> oo_samples(const SplitPair& split) const;
  SampleSplit<OASample> oa_samples(const SplitPair& split) const;
  Checkpoint train_model(Stage& stage, Task task, bool pretrained, const SplitPair& split);
  PredictionReport predict_with(const Checkpoint& model, Task task, const SplitPair& split) const;

  std::filesystem::path dir_;
  RunConfig config_;
  std::string hash_;
};

Manifest read_manifest(const std::filesystem::path& path);

}  // namespace pipeline
}  // namespace fcalink
