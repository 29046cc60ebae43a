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
#include <sstream>

#include "fcalink/error.hpp"
#include "fcalink/pipeline.hpp"
#include "fcalink/rng.hpp"

using namespace fcalink;
using pipeline::Run;
using pipeline::Task;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

fs::path random_edges(const fs::path& dir, std::size_t n, double density, std::uint64_t seed) {
  Rng rng(seed);
  std::string text = "object,attribute\n";
  for (std::size_t g = 0; g < n; ++g)
    for (std::size_t m = 0; m < n; ++m)
      if (rng.uniform01() < density) text += "u" + std::to_string(g) + ",p" + std::to_string(m) + "\n";
  const fs::path p = dir / "edges.csv";
  write(p, text);
  return p;
}

RunConfig tiny_config() {
  RunConfig c;
  c.encoder.d_model = 16;
  c.encoder.n_layers = 1;
  c.encoder.n_heads = 2;
  c.encoder.d_ff = 32;
  c.pretrain.epochs = 2;
  c.finetune.epochs = 2;
  c.baseline.rank = 4;
  c.baseline.epochs = 3;
  c.split.fraction = 0.2;
  c.set_master_seed(1);
  return c;
}

}  // namespace

TEST_CASE("concepts of the 3x3 identity context") {
  TempDir dir("fcalink_pipe_identity");
  write(dir.path / "id.csv", "g1,m1\ng2,m2\ng3,m3\n");
  Run run(dir.path / "run", RunConfig{});
  CHECK(run.concepts(dir.path / "id.csv") == 5);
  const std::string text = slurp(dir.path / "run/concepts/concepts.jsonl");
  CHECK(std::count(text.begin(), text.end(), '\n') == 5);
  CHECK(run.covers() == 6);
  CHECK(fs::exists(dir.path / "run/covers/manifest.json"));
}

TEST_CASE("full chain with manifests") {
  TempDir dir("fcalink_pipe_chain");
  const fs::path edges = random_edges(dir.path, 12, 0.35, 3);
  Run run(dir.path / "run", tiny_config());
  const auto stats = run.ingest(edges);
  CHECK(stats.num_objects == 12);
  run.split();
  CHECK(run.concepts() > 2);
  CHECK(run.covers() > 0);
  run.pretrain(Run::sides_for(Task::kObjectAttribute));
  run.finetune(Task::kObjectAttribute);
  const auto report = run.predict(Task::kObjectAttribute);
  CHECK_FALSE(report.rows.empty());
  const auto m = run.eval(Task::kObjectAttribute);

  // Re-evaluating the saved report reproduces the metrics.
  const auto again = run.eval(Task::kObjectAttribute, dir.path / "run/predict-oa/predictions.csv");
  CHECK(again.auc == m.auc);
  CHECK(again.f1 == m.f1);
  CHECK(again.aupr == m.aupr);

  const auto base = run.baseline(Task::kObjectAttribute);
  CHECK(base.reports.count("cn") == 1);
  CHECK(base.reports.count("mf") == 1);
  const auto ab = run.ablate(Task::kObjectAttribute);
  CHECK(ab.n_pos + ab.n_neg == m.n_pos + m.n_neg);

  const auto manifest = pipeline::read_manifest(dir.path / "run/pretrain/manifest.json");
  CHECK(manifest.config_hash == run.config().hash());
  CHECK(manifest.outputs.count("pretrain/object.ckpt") == 1);
  CHECK(manifest.inputs.count("covers/covers.jsonl") == 1);
  CHECK(load_checkpoint(dir.path / "run/pretrain/object.ckpt").header.at("config_hash") ==
        run.config().hash());

  SUBCASE("object-object task") {
    run.finetune(Task::kObjectObject);
    run.predict(Task::kObjectObject);
    run.eval(Task::kObjectObject);
    const auto b = run.baseline(Task::kObjectObject);
    CHECK(b.reports.at("cn").auc == 0.5);  // candidates share no input attribute
  }
  SUBCASE("a different config is refused downstream") {
    RunConfig other = tiny_config();
    other.finetune.epochs = 3;
    Run second(dir.path / "run", other);
    try {
      second.finetune(Task::kObjectAttribute);
      FAIL("expected a refusal");
    } catch (const UsageError& e) {
      CHECK(std::string(e.what()).find("rerun 'split'") != std::string::npos);
    }
    // The refusal leaves the earlier fine-tuned model usable.
    CHECK(run.predict(Task::kObjectAttribute).rows.size() == report.rows.size());
  }
  SUBCASE("an edited artifact is detected") {
    std::ofstream(dir.path / "run/split/input.tsv", std::ios::app) << "u0\tp0\n";
    CHECK_THROWS_AS(run.finetune(Task::kObjectAttribute), DataError);
  }
}

TEST_CASE("missing upstream stages are named") {
  TempDir dir("fcalink_pipe_missing");
  Run run(dir.path / "run", tiny_config());
  auto message = [&](auto&& f) {
    try {
      f();
    } catch (const UsageError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message([&] { run.split(); }).find("'ingest' stage") != std::string::npos);
  CHECK(message([&] { run.covers(); }).find("'concepts' stage") != std::string::npos);
  CHECK(message([&] { run.predict(Task::kObjectObject); }).find("'finetune-oo' stage") != std::string::npos);
  CHECK(message([&] { run.eval(Task::kObjectAttribute); }).find("'predict' stage") != std::string::npos);
  CHECK_THROWS_AS(run.ingest(dir.path / "absent.csv"), DataError);
}

TEST_CASE("two identical runs produce identical artifacts") {
  TempDir dir("fcalink_pipe_det");
  const fs::path edges = random_edges(dir.path, 10, 0.35, 9);
  for (const char* name : {"a", "b"}) {
    Run run(dir.path / name, tiny_config());
    run.ingest(edges);
    run.split();
    run.concepts();
    run.covers();
    run.pretrain({Side::kObject});
    run.finetune(Task::kObjectObject);
    run.predict(Task::kObjectObject);
    run.eval(Task::kObjectObject);
  }
  for (const char* f : {"concepts/concepts.jsonl", "covers/covers.jsonl", "pretrain/object.ckpt",
                        "finetune-oo/model.ckpt", "predict-oo/predictions.csv", "eval-oo/metrics.json"})
    CHECK_MESSAGE(slurp(dir.path / "a" / f) == slurp(dir.path / "b" / f), f);
}
