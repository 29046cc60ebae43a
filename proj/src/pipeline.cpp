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

#include "fcalink/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "fcalink/baselines.hpp"
#include "fcalink/error.hpp"
#include "fcalink/fca.hpp"
#include "fcalink/pretrain.hpp"
#include "fcalink/rng.hpp"

#ifndef FCALINK_VERSION
#define FCALINK_VERSION "0.0.0"
#endif

namespace fcalink {

const char* version() { return FCALINK_VERSION; }

namespace pipeline {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr auto kTsv = EdgeListFormat::kTsv;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// Labels are interned in first-appearance order, so a reloaded context can
// number its attributes differently from the one that was written. Rewriting
// until the text is stable gives a file that every later load reproduces.
void write_context(const BipartiteContext& ctx, const fs::path& path) {
  std::string text = format_edge_list(ctx, kTsv);
  for (int i = 0;; ++i) {
    std::string again = format_edge_list(parse_edge_list(text, kTsv), kTsv);
    if (again == text) break;
    if (i == 8) throw std::logic_error("edge list numbering did not settle");
    text = std::move(again);
  }
  write_text(path, text);
}

std::string task_dir(const char* prefix, Task task) {
  return std::string(prefix) + "-" + to_string(task);
}

std::string loss_csv(const std::vector<double>& curve) {
  std::ostringstream os;
  os.precision(9);
  os << "epoch,loss\n";
  for (std::size_t i = 0; i < curve.size(); ++i) os << i + 1 << ',' << curve[i] << '\n';
  return os.str();
}

json stats_json(const BipartiteContext& ctx) {
  json j = to_json(context_stats(ctx));
  j["duplicates_collapsed"] = ctx.duplicates_collapsed();
  return j;
}

std::size_t group_common_attributes(const BipartiteContext& ctx, const std::vector<ObjectId>& g) {
  std::vector<AttributeId> common = ctx.attributes_of(g.front());
  for (std::size_t i = 1; i < g.size() && !common.empty(); ++i) {
    const auto& row = ctx.attributes_of(g[i]);
    std::vector<AttributeId> next;
    std::set_intersection(common.begin(), common.end(), row.begin(), row.end(),
                          std::back_inserter(next));
    common.swap(next);
  }
  return common.size();
}

template <class S, class Key, class Score>
PredictionReport score_rows(const std::vector<S>& samples, Key key, Score score) {
  PredictionReport r;
  r.rows.reserve(samples.size());
  for (const auto& s : samples) r.rows.push_back({key(s), score(s), s.label});
  r.sort();
  return r;
}

}  // namespace

const char* to_string(Task task) { return task == Task::kObjectObject ? "oo" : "oa"; }

Task task_from_string(const std::string& s) {
  if (s == "oo") return Task::kObjectObject;
  if (s == "oa") return Task::kObjectAttribute;
  throw UsageError("task must be 'oo' or 'oa', got '" + s + "'");
}

json Manifest::to_json() const {
  return {{"stage", stage},   {"version", version},  {"config_hash", config_hash},
          {"seed", seed},     {"inputs", inputs},    {"outputs", outputs}};
}

Manifest Manifest::from_json(const json& j) {
  Manifest m;
  try {
    m.stage = j.at("stage").get<std::string>();
    m.version = j.at("version").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
    m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

Manifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  try {
    return Manifest::from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + " is not valid JSON: " + e.what());
  }
}

// Collects a stage's inputs and outputs; finish() writes the manifest and
// saves the config the run directory now follows.
class Run::Stage {
 public:
  Stage(const Run& run, std::string name, std::uint64_t seed) : run_(run) {
    manifest_.stage = std::move(name);
    manifest_.version = fcalink::version();
    manifest_.config_hash = run.hash_;
    manifest_.seed = seed;
  }

  fs::path dir() const { return run_.dir_ / manifest_.stage; }

  // The first output invalidates the previous manifest, so a refused stage
  // leaves earlier artifacts usable and a half-written one leaves none.
  fs::path out(const std::string& file) {
    if (outputs_.empty()) {
      fs::create_directories(dir());
      fs::remove(dir() / "manifest.json");
    }
    if (std::find(outputs_.begin(), outputs_.end(), file) == outputs_.end()) outputs_.push_back(file);
    return dir() / file;
  }

  void input(const std::string& key, const std::string& hash) { manifest_.inputs[key] = hash; }

  void external(const fs::path& path) {
    if (!fs::exists(path)) throw DataError("input file " + path.string() + " does not exist");
    manifest_.inputs[fs::absolute(path).lexically_normal().string()] = file_hash(path);
  }

  void finish() {
    for (const auto& f : outputs_) manifest_.outputs[manifest_.stage + "/" + f] = file_hash(dir() / f);
    write_json(dir() / "manifest.json", manifest_.to_json());
    run_.config_.save(run_.dir_ / "config.json");
  }

 private:
  const Run& run_;
  Manifest manifest_;
  std::vector<std::string> outputs_;
};

Run::Run(fs::path dir, RunConfig config)
    : dir_(std::move(dir)), config_(std::move(config)), hash_(config_.hash()) {
  fs::create_directories(dir_);
}

std::vector<Side> Run::sides_for(Task task) {
  if (task == Task::kObjectObject) return {Side::kObject};
  return {Side::kObject, Side::kAttribute};
}

fs::path Run::require(Stage& stage, const std::string& upstream, const std::string& file,
                      const std::string& command) {
  const std::string key = upstream + "/" + file;
  const fs::path manifest_path = dir_ / upstream / "manifest.json";
  if (!fs::exists(manifest_path))
    throw UsageError("missing " + key + " in " + dir_.string() + ": run the '" + command +
                     "' stage first");
  const Manifest m = read_manifest(manifest_path);
  if (m.config_hash != hash_)
    throw UsageError(key + " was produced under config " + m.config_hash +
                     " but the current config hashes to " + hash_ + "; rerun '" + command +
                     "' with this config");
  const auto it = m.outputs.find(key);
  if (it == m.outputs.end()) throw DataError(key + " is not listed in its stage manifest");
  const fs::path path = dir_ / key;
  if (!fs::exists(path)) throw DataError(key + " is listed in its manifest but missing");
  const std::string h = file_hash(path);
  if (h != it->second) throw DataError(key + " changed after the '" + command + "' stage wrote it");
  stage.input(key, h);
  return path;
}

ContextStats Run::ingest(const fs::path& edge_list) {
  Stage stage(*this, "ingest", 0);
  stage.external(edge_list);
  const BipartiteContext ctx = load_edge_list(edge_list, format_for_path(edge_list));
  if (ctx.num_edges() == 0) throw DataError(edge_list.string() + " holds no edges");
  write_context(ctx, stage.out("context.tsv"));
  json stats = stats_json(ctx);
  stats["config_hash"] = hash_;
  write_json(stage.out("stats.json"), stats);
  stage.finish();
  return context_stats(ctx);
}

void Run::split() {
  Stage stage(*this, "split", config_.seeds.split);
  const BipartiteContext ctx =
      load_edge_list(require(stage, "ingest", "context.tsv", "ingest"), kTsv);
  SplitPair sp;
  if (config_.split.kind == "temporal") {
    const auto cutoff = parse_date(config_.split.cutoff);
    if (!cutoff) throw UsageError("split.cutoff must be a YYYY-MM-DD date for temporal splits");
    sp = split_temporal(ctx, *cutoff);
  } else {
    RandomSplitOptions o;
    o.fraction = config_.split.fraction;
    o.seed = config_.seeds.split;
    o.prune_isolated_attributes = config_.split.prune_isolated_attributes;
    o.restrict_target_attributes = config_.split.restrict_target_attributes;
    sp = split_random_edges(ctx, o);
  }
  if (sp.input.num_edges() == 0) throw DataError("the split leaves no input edges");
  write_context(sp.input, stage.out("input.tsv"));
  write_context(sp.target, stage.out("target.tsv"));
  write_json(stage.out("stats.json"), {{"input", stats_json(sp.input)},
                                       {"target", stats_json(sp.target)},
                                       {"warnings", sp.warnings},
                                       {"config_hash", hash_}});
  stage.finish();
}

std::size_t Run::concepts(const std::optional<fs::path>& edge_list) {
  Stage stage(*this, "concepts", 0);
  BipartiteContext ctx;
  if (edge_list) {
    stage.external(*edge_list);
    ctx = load_edge_list(*edge_list, format_for_path(*edge_list));
  } else {
    ctx = load_edge_list(require(stage, "split", "input.tsv", "split"), kTsv);
  }
  write_context(ctx, stage.out("context.tsv"));
  ctx = load_edge_list(stage.dir() / "context.tsv", kTsv);
  ConceptLattice lattice;
  lattice.num_objects = ctx.num_objects();
  lattice.num_attributes = ctx.num_attributes();
  lattice.concepts = enumerate_concepts(ctx, {config_.concepts.max_concepts});
  write_concepts_jsonl(lattice, stage.out("concepts.jsonl"));
  write_json(stage.out("stats.json"), {{"concepts", lattice.size()},
                                       {"max_extent", lattice.max_extent_size()},
                                       {"max_intent", lattice.max_intent_size()},
                                       {"context", stats_json(ctx)},
                                       {"config_hash", hash_}});
  stage.finish();
  return lattice.size();
}

std::size_t Run::covers() {
  Stage stage(*this, "covers", 0);
  const BipartiteContext ctx =
      load_edge_list(require(stage, "concepts", "context.tsv", "concepts"), kTsv);
  ConceptLattice lattice;
  lattice.num_objects = ctx.num_objects();
  lattice.num_attributes = ctx.num_attributes();
  lattice.concepts = read_concepts_jsonl(require(stage, "concepts", "concepts.jsonl", "concepts"),
                                         ctx.num_objects(), ctx.num_attributes());
  lattice.covers = cover_relation(lattice.concepts);
  write_covers_jsonl(lattice, stage.out("covers.jsonl"));
  stage.finish();
  return lattice.covers.size();
}

void Run::pretrain(const std::vector<Side>& sides) {
  if (sides.empty()) throw UsageError("no side to pre-train");
  Stage stage(*this, "pretrain", config_.seeds.pretrain);
  const BipartiteContext ctx =
      load_edge_list(require(stage, "concepts", "context.tsv", "concepts"), kTsv);
  const ConceptLattice lattice =
      read_lattice_jsonl(require(stage, "concepts", "concepts.jsonl", "concepts"),
                         require(stage, "covers", "covers.jsonl", "covers"), ctx.num_objects(),
                         ctx.num_attributes());
  for (Side side : sides) {
    const std::string name = to_string(side);
    const std::uint64_t stream = side == Side::kObject ? 1 : 2;
    const Vocab vocab = side == Side::kObject ? Vocab::objects_of(ctx) : Vocab::attributes_of(ctx);
    PretrainSetOptions so;
    so.mask_rate = config_.pretrain.mask_rate;
    so.seed = derive_seed(config_.seeds.pretrain, stream);
    so.holdout_fraction = config_.pretrain.holdout_fraction;
    so.max_len_cap = config_.pretrain.max_len_cap;
    const PretrainSet set = build_pretrain_set(lattice, side, vocab, so);

    PretrainOptions po;
    po.encoder = config_.encoder;
    po.epochs = config_.pretrain.epochs;
    po.batch_size = config_.pretrain.batch_size;
    po.adam.learning_rate = config_.pretrain.learning_rate;
    po.adam.clip_norm = config_.pretrain.clip_norm;
    po.seed = derive_seed(config_.seeds.pretrain, stream + 10);
    po.checkpoint_path = stage.out(name + ".ckpt");
    po.loss_curve_path = stage.out(name + "_loss.csv");
    po.eval_heldout = !set.heldout.empty();
    const PretrainResult result = run_pretrain(set, po);

    Checkpoint ckpt = make_pretrain_checkpoint(set, result);
    ckpt.header["config_hash"] = hash_;
    save_checkpoint(*po.checkpoint_path, ckpt);
    json summary = {{"side", name},
                    {"train_samples", set.train.size()},
                    {"heldout_samples", set.heldout.size()},
                    {"skipped_overflow", set.skipped_overflow},
                    {"negatives_exhausted", set.negatives_exhausted},
                    {"max_len", set.max_len},
                    {"epochs_completed", result.curve.size()},
                    {"config_hash", hash_}};
    if (!result.curve.empty() && result.curve.back().heldout)
      summary["heldout"] = metrics::to_json(*result.curve.back().heldout);
    write_json(stage.out(name + "_heldout.json"), summary);
  }
  stage.finish();
}

SplitPair Run::load_split(Stage& stage) {
  SplitPair sp;
  sp.input = load_edge_list(require(stage, "split", "input.tsv", "split"), kTsv);
  sp.target = load_edge_list(require(stage, "split", "target.tsv", "split"), kTsv);
  sp.kind = config_.split.kind == "temporal" ? SplitKind::kTemporal : SplitKind::kRandomRemoval;
  sp.seed = config_.seeds.split;
  return sp;
}

SampleSplit<OOSample> Run::oo_samples(const SplitPair& split) const {
  OOSampleOptions o;
  o.seed = config_.seeds.finetune;
  o.test_fraction = config_.finetune.test_fraction;
  o.balance = config_.finetune.balance;
  o.balance_test = config_.finetune.balance_test;
  o.max_group = config_.finetune.max_group;
  o.max_candidates = config_.finetune.max_candidates;
  o.train_source = train_source_from_string(config_.finetune.train_source);
  return gen_oo_samples(split, o);
}

SampleSplit<OASample> Run::oa_samples(const SplitPair& split) const {
  SampleOptions o;
  o.seed = config_.seeds.finetune;
  o.test_fraction = config_.finetune.test_fraction;
  o.balance = config_.finetune.balance;
  o.balance_test = config_.finetune.balance_test;
  o.train_source = train_source_from_string(config_.finetune.train_source);
  return gen_oa_samples(split, o);
}

Checkpoint Run::train_model(Stage& stage, Task task, bool pretrained, const SplitPair& split) {
  FinetuneOptions fo;
  fo.epochs = config_.finetune.epochs;
  fo.batch_size = config_.finetune.batch_size;
  fo.adam.learning_rate = config_.finetune.learning_rate;
  fo.adam.clip_norm = config_.finetune.clip_norm;
  fo.seed = derive_seed(config_.seeds.finetune, 1);
  const std::uint64_t init_seed = derive_seed(config_.seeds.finetune, 2);

  Checkpoint out;
  std::vector<double> curve;
  if (task == Task::kObjectObject) {
    const auto samples = oo_samples(split);
    std::optional<Checkpoint> ckpt;
    if (pretrained) ckpt = load_checkpoint(require(stage, "pretrain", "object.ckpt", "pretrain"));
    OOModel m = init_oo_model(ckpt ? &*ckpt : nullptr, Vocab::objects_of(split.input),
                              config_.encoder, init_seed);
    finetune_oo(m, samples.train, fo);
    curve = m.loss_curve;
    out = to_checkpoint(m);
  } else {
    const auto samples = oa_samples(split);
    std::optional<Checkpoint> oc, ac;
    if (pretrained) {
      oc = load_checkpoint(require(stage, "pretrain", "object.ckpt", "pretrain"));
      ac = load_checkpoint(require(stage, "pretrain", "attribute.ckpt", "pretrain"));
    }
    OAModel m = init_oa_model(oc ? &*oc : nullptr, ac ? &*ac : nullptr,
                              Vocab::objects_of(split.input), Vocab::attributes_of(split.input),
                              config_.encoder, init_seed);
    finetune_oa(m, samples.train, fo);
    curve = m.loss_curve;
    out = to_checkpoint(m);
  }
  out.header["config_hash"] = hash_;
  save_checkpoint(stage.out("model.ckpt"), out);
  write_text(stage.out("loss.csv"), loss_csv(curve));
  return out;
}

PredictionReport Run::predict_with(const Checkpoint& model, Task task,
                                   const SplitPair& split) const {
  if (task == Task::kObjectObject)
    return predict_oo(oo_model_from_checkpoint(model), split.input, oo_samples(split).test);
  return predict_oa(oa_model_from_checkpoint(model), split.input, oa_samples(split).test);
}

void Run::finetune(Task task) {
  Stage stage(*this, task_dir("finetune", task), config_.seeds.finetune);
  const SplitPair split = load_split(stage);
  train_model(stage, task, true, split);
  stage.finish();
}

PredictionReport Run::predict(Task task) {
  Stage stage(*this, task_dir("predict", task), config_.seeds.finetune);
  const std::string upstream = task_dir("finetune", task);
  const Checkpoint model = load_checkpoint(require(stage, upstream, "model.ckpt", upstream));
  const SplitPair split = load_split(stage);
  PredictionReport report = predict_with(model, task, split);
  report.write(stage.out("predictions.csv"));
  stage.finish();
  return report;
}

metrics::Report Run::eval(Task task, const std::optional<fs::path>& predictions) {
  Stage stage(*this, task_dir("eval", task), 0);
  fs::path path;
  if (predictions) {
    stage.external(*predictions);
    path = *predictions;
  } else {
    path = require(stage, task_dir("predict", task), "predictions.csv", "predict");
  }
  const metrics::Report r = metrics::evaluate(PredictionReport::read(path).scored());
  json j = metrics::to_json(r);
  j["config_hash"] = hash_;
  write_json(stage.out("metrics.json"), j);
  stage.finish();
  return r;
}

BaselineResult Run::baseline(Task task) {
  Stage stage(*this, task_dir("baseline", task), config_.seeds.baseline);
  const SplitPair split = load_split(stage);
  const BipartiteContext& in = split.input;
  BaselineResult result;
  baselines::MfOptions mo;
  mo.rank = std::min({config_.baseline.rank, in.num_objects(), in.num_attributes()});
  mo.lambda = config_.baseline.lambda;
  mo.epochs = config_.baseline.epochs;
  mo.seed = config_.seeds.baseline;
  const baselines::FactorModel mf = baselines::train_mf(in, mo);
  result.mf_rank = mo.rank;

  std::map<std::string, PredictionReport> reports;
  if (task == Task::kObjectObject) {
    const auto test = oo_samples(split).test;
    auto key = [&](const OOSample& s) { return oo_candidate_key(in, s); };
    reports["cn"] = score_rows(test, key, [&](const OOSample& s) {
      return static_cast<double>(group_common_attributes(in, s.group));
    });
    reports["cn_projected"] = score_rows(test, key, [&](const OOSample& s) {
      return static_cast<double>(baselines::common_neighbors_projected(in, s.group));
    });
    reports["mf"] = score_rows(test, key, [&](const OOSample& s) {
      return baselines::score_mf_group(mf, s.group);
    });
  } else {
    const auto test = oa_samples(split).test;
    auto key = [&](const OASample& s) { return oa_candidate_key(in, s); };
    reports["cn"] = score_rows(test, key, [&](const OASample& s) {
      return static_cast<double>(baselines::common_neighbors_oa(in, s.object, s.attribute));
    });
    reports["mf"] = score_rows(test, key, [&](const OASample& s) {
      return baselines::score_mf(mf, s.object, s.attribute);
    });
  }
  json j = {{"mf_rank", mo.rank}, {"config_hash", hash_}};
  for (const auto& [method, report] : reports) {
    report.write(stage.out(method + "_predictions.csv"));
    result.reports[method] = metrics::evaluate(report.scored());
    j["methods"][method] = metrics::to_json(result.reports[method]);
  }
  write_json(stage.out("metrics.json"), j);
  stage.finish();
  return result;
}

metrics::Report Run::ablate(Task task) {
  Stage stage(*this, task_dir("ablate", task), config_.seeds.finetune);
  const SplitPair split = load_split(stage);
  const Checkpoint model = train_model(stage, task, false, split);
  const PredictionReport report = predict_with(model, task, split);
  report.write(stage.out("predictions.csv"));
  const metrics::Report r = metrics::evaluate(report.scored());
  json j = metrics::to_json(r);
  j["config_hash"] = hash_;
  write_json(stage.out("metrics.json"), j);
  stage.finish();
  return r;
}

}  // namespace pipeline
}  // namespace fcalink
