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

#include <cstdio>
#include <optional>

#include "fcalink/config.hpp"
#include "fcalink/pipeline.hpp"
#include "guard.hpp"

struct fcl_config {
  fcalink::RunConfig config;
};

struct fcl_run {
  fcalink::pipeline::Run run;
};

using namespace fcalink;
using capi::dup_string;
using capi::guard;
using capi::require_arg;

namespace {

nlohmann::json parse_json(const char* text) {
  require_arg(text, "json");
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError(std::string("invalid JSON: ") + e.what());
  }
}

pipeline::Task task_arg(const char* task) {
  require_arg(task, "task");
  return pipeline::task_from_string(task);
}

std::optional<std::filesystem::path> optional_path(const char* p) {
  if (p == nullptr) return std::nullopt;
  return std::filesystem::path(p);
}

void put_json(char** out, const nlohmann::json& j) {
  if (out) *out = dup_string(j.dump(2));
}

}  // namespace

extern "C" {

fcl_status fcl_config_new(fcl_config** out) {
  return guard([&] {
    require_arg(out, "out");
    *out = new fcl_config{};
  });
}

fcl_status fcl_config_load(const char* path, fcl_config** out) {
  return guard([&] {
    require_arg(path, "path");
    require_arg(out, "out");
    *out = new fcl_config{RunConfig::load(path)};
  });
}

fcl_status fcl_config_from_json(const char* json, fcl_config** out) {
  return guard([&] {
    require_arg(out, "out");
    *out = new fcl_config{RunConfig::from_json(parse_json(json))};
  });
}

fcl_status fcl_config_merge_json(fcl_config* cfg, const char* json) {
  return guard([&] {
    require_arg(cfg, "cfg");
    const nlohmann::json patch = parse_json(json);
    if (!patch.is_object()) throw UsageError("config override must be a JSON object");
    nlohmann::json merged = cfg->config.to_json();
    merged.merge_patch(patch);
    cfg->config = RunConfig::from_json(merged);
  });
}

fcl_status fcl_config_set_seed(fcl_config* cfg, uint64_t master_seed) {
  return guard([&] {
    require_arg(cfg, "cfg");
    cfg->config.set_master_seed(master_seed);
  });
}

fcl_status fcl_config_to_json(const fcl_config* cfg, char** out) {
  return guard([&] {
    require_arg(cfg, "cfg");
    require_arg(out, "out");
    put_json(out, cfg->config.to_json());
  });
}

fcl_status fcl_config_task(const fcl_config* cfg, const char** task) {
  return guard([&] {
    require_arg(cfg, "cfg");
    require_arg(task, "task");
    *task = pipeline::to_string(pipeline::task_from_string(cfg->config.task));
  });
}

fcl_status fcl_config_hash(const fcl_config* cfg, char out[17]) {
  return guard([&] {
    require_arg(cfg, "cfg");
    require_arg(out, "out");
    std::snprintf(out, 17, "%s", cfg->config.hash().c_str());
  });
}

fcl_status fcl_config_save(const fcl_config* cfg, const char* path) {
  return guard([&] {
    require_arg(cfg, "cfg");
    require_arg(path, "path");
    cfg->config.save(path);
  });
}

void fcl_config_free(fcl_config* cfg) { delete cfg; }

fcl_status fcl_run_open(const char* dir, const fcl_config* cfg, fcl_run** out) {
  return guard([&] {
    require_arg(dir, "dir");
    require_arg(cfg, "cfg");
    require_arg(out, "out");
    *out = new fcl_run{pipeline::Run(dir, cfg->config)};
  });
}

void fcl_run_free(fcl_run* run) { delete run; }

fcl_status fcl_run_ingest(fcl_run* run, const char* edge_list, char** stats_json) {
  return guard([&] {
    require_arg(run, "run");
    require_arg(edge_list, "edge_list");
    put_json(stats_json, to_json(run->run.ingest(edge_list)));
  });
}

fcl_status fcl_run_split(fcl_run* run) {
  return guard([&] {
    require_arg(run, "run");
    run->run.split();
  });
}

fcl_status fcl_run_concepts(fcl_run* run, const char* edge_list, size_t* num_concepts) {
  return guard([&] {
    require_arg(run, "run");
    const std::size_t n = run->run.concepts(optional_path(edge_list));
    if (num_concepts) *num_concepts = n;
  });
}

fcl_status fcl_run_covers(fcl_run* run, size_t* num_covers) {
  return guard([&] {
    require_arg(run, "run");
    const std::size_t n = run->run.covers();
    if (num_covers) *num_covers = n;
  });
}

fcl_status fcl_run_pretrain(fcl_run* run, const char* side) {
  return guard([&] {
    require_arg(run, "run");
    std::vector<Side> sides;
    const std::string s = side ? side : "";
    if (s.empty()) {
      sides = pipeline::Run::sides_for(pipeline::task_from_string(run->run.config().task));
    } else if (s == "both") {
      sides = {Side::kObject, Side::kAttribute};
    } else {
      sides = {side_from_string(s)};
    }
    run->run.pretrain(sides);
  });
}

fcl_status fcl_run_finetune(fcl_run* run, const char* task) {
  return guard([&] {
    require_arg(run, "run");
    run->run.finetune(task_arg(task));
  });
}

fcl_status fcl_run_predict(fcl_run* run, const char* task, size_t* num_rows) {
  return guard([&] {
    require_arg(run, "run");
    const auto report = run->run.predict(task_arg(task));
    if (num_rows) *num_rows = report.rows.size();
  });
}

fcl_status fcl_run_eval(fcl_run* run, const char* task, const char* predictions,
                        char** metrics_json) {
  return guard([&] {
    require_arg(run, "run");
    put_json(metrics_json, metrics::to_json(run->run.eval(task_arg(task), optional_path(predictions))));
  });
}

fcl_status fcl_run_baseline(fcl_run* run, const char* task, char** metrics_json) {
  return guard([&] {
    require_arg(run, "run");
    const auto r = run->run.baseline(task_arg(task));
    nlohmann::json j = {{"mf_rank", r.mf_rank}};
    for (const auto& [method, report] : r.reports) j["methods"][method] = metrics::to_json(report);
    put_json(metrics_json, j);
  });
}

fcl_status fcl_run_ablate(fcl_run* run, const char* task, char** metrics_json) {
  return guard([&] {
    require_arg(run, "run");
    put_json(metrics_json, metrics::to_json(run->run.ablate(task_arg(task))));
  });
}

}  // extern "C"
