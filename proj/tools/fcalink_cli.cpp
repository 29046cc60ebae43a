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

// Command-line driver. Talks to the library only through the C interface.
#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fcalink/fcalink.h"

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kBudget = 3 };

int exit_code(fcl_status st) {
  switch (st) {
    case FCL_OK: return kOk;
    case FCL_USAGE_ERROR: return kUsage;
    case FCL_BUDGET_EXCEEDED: return kBudget;
    default: return kData;
  }
}

// Thrown out of a command to unwind with the library's status.
struct Failure {
  fcl_status status;
};

void check(fcl_status st) {
  if (st != FCL_OK) throw Failure{st};
}

struct ConfigDeleter {
  void operator()(fcl_config* c) const { fcl_config_free(c); }
};
struct RunDeleter {
  void operator()(fcl_run* r) const { fcl_run_free(r); }
};

// Prints and releases a JSON string handed out by the library.
void emit(char* json) {
  if (json) std::printf("%s\n", json);
  fcl_string_free(json);
}

const char* opt(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  std::string out_dir = "run";
  std::string overrides;
};

// --config wins, then the run directory's saved config, then defaults;
// --set and --seed are applied on top.
std::unique_ptr<fcl_config, ConfigDeleter> resolve_config(const Globals& g) {
  fcl_config* raw = nullptr;
  const std::filesystem::path saved = std::filesystem::path(g.out_dir) / "config.json";
  if (!g.config_path.empty()) {
    check(fcl_config_load(g.config_path.c_str(), &raw));
  } else if (std::filesystem::exists(saved)) {
    check(fcl_config_load(saved.c_str(), &raw));
  } else {
    check(fcl_config_new(&raw));
  }
  std::unique_ptr<fcl_config, ConfigDeleter> cfg(raw);
  if (!g.overrides.empty()) check(fcl_config_merge_json(cfg.get(), g.overrides.c_str()));
  if (g.seed) check(fcl_config_set_seed(cfg.get(), *g.seed));
  return cfg;
}

const char* config_task(const fcl_config* cfg) {
  const char* task = nullptr;
  check(fcl_config_task(cfg, &task));
  return task;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Formal-concept pre-training and bipartite link prediction"};
  app.require_subcommand(1);
  app.set_version_flag("--version", fcl_version());

  Globals g;
  app.add_option("--seed", g.seed, "Master seed; every stage seed derives from it");
  app.add_option("--config", g.config_path, "Run configuration (JSON)");
  app.add_option("--out-dir", g.out_dir, "Run directory")->capture_default_str();
  app.add_option("--set", g.overrides, "JSON object merged over the configuration");

  std::string input, side, task, predictions;

  auto* ingest = app.add_subcommand("ingest", "Load an edge list and report its statistics");
  ingest->add_option("--input", input, "Edge list (CSV, or TSV by extension)")->required();
  app.add_subcommand("split", "Split the network into input and target parts");
  auto* concepts = app.add_subcommand("concepts", "Enumerate the formal concepts of the input");
  concepts->add_option("--input", input, "Edge list to use instead of the split input");
  app.add_subcommand("covers", "Compute the cover relation of the concept lattice");
  auto* pretrain = app.add_subcommand("pretrain", "Pre-train encoders on the concept lattice");
  pretrain->add_option("--side", side, "object, attribute or both (default: what the task needs)")
      ->check(CLI::IsMember({"object", "attribute", "both"}));
  app.add_subcommand("finetune-oo", "Fine-tune the object-object link model");
  app.add_subcommand("finetune-oa", "Fine-tune the object-attribute link model");
  const auto task_check = CLI::IsMember({"oo", "oa"});
  auto* predict = app.add_subcommand("predict", "Score the held-out candidates");
  predict->add_option("--task", task, "oo or oa (default: config task)")->check(task_check);
  auto* eval = app.add_subcommand("eval", "Compute F1, AUC and AUPR of a prediction report");
  eval->add_option("--task", task, "oo or oa (default: config task)")->check(task_check);
  eval->add_option("--predictions", predictions, "Report to evaluate instead of the predict stage's");
  auto* baseline = app.add_subcommand("baseline", "Score the held-out candidates with baselines");
  baseline->add_option("--task", task, "oo or oa (default: config task)")->check(task_check);
  auto* ablate = app.add_subcommand("ablate-no-pretrain", "Fine-tune from random weights and evaluate");
  ablate->add_option("--task", task, "oo or oa (default: config task)")->check(task_check);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    auto cfg = resolve_config(g);
    if (task.empty()) task = config_task(cfg.get());
    fcl_run* raw = nullptr;
    check(fcl_run_open(g.out_dir.c_str(), cfg.get(), &raw));
    std::unique_ptr<fcl_run, RunDeleter> run(raw);
    const std::string cmd = app.get_subcommands().front()->get_name();

    if (cmd == "ingest") {
      char* stats = nullptr;
      check(fcl_run_ingest(run.get(), input.c_str(), &stats));
      emit(stats);
    } else if (cmd == "split") {
      check(fcl_run_split(run.get()));
      std::printf("split written to %s/split\n", g.out_dir.c_str());
    } else if (cmd == "concepts") {
      std::size_t n = 0;
      check(fcl_run_concepts(run.get(), opt(input), &n));
      std::printf("%zu concepts\n", n);
    } else if (cmd == "covers") {
      std::size_t n = 0;
      check(fcl_run_covers(run.get(), &n));
      std::printf("%zu cover pairs\n", n);
    } else if (cmd == "pretrain") {
      check(fcl_run_pretrain(run.get(), opt(side)));
      std::printf("checkpoints written to %s/pretrain\n", g.out_dir.c_str());
    } else if (cmd == "finetune-oo" || cmd == "finetune-oa") {
      check(fcl_run_finetune(run.get(), cmd == "finetune-oo" ? "oo" : "oa"));
      std::printf("model written to %s/%s\n", g.out_dir.c_str(), cmd.c_str());
    } else if (cmd == "predict") {
      std::size_t n = 0;
      check(fcl_run_predict(run.get(), task.c_str(), &n));
      std::printf("%zu predictions\n", n);
    } else if (cmd == "eval") {
      char* metrics = nullptr;
      check(fcl_run_eval(run.get(), task.c_str(), opt(predictions), &metrics));
      emit(metrics);
    } else if (cmd == "baseline") {
      char* metrics = nullptr;
      check(fcl_run_baseline(run.get(), task.c_str(), &metrics));
      emit(metrics);
    } else if (cmd == "ablate-no-pretrain") {
      char* metrics = nullptr;
      check(fcl_run_ablate(run.get(), task.c_str(), &metrics));
      emit(metrics);
    }
  } catch (const Failure& f) {
    std::fprintf(stderr, "fcalink: %s: %s\n", fcl_status_name(f.status), fcl_last_error());
    if (f.status == FCL_BUDGET_EXCEEDED)
      std::fprintf(stderr, "fcalink: %zu items produced before stopping\n", fcl_last_partial_count());
    return exit_code(f.status);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "fcalink: %s\n", e.what());
    return kData;
  }
  return kOk;
}
