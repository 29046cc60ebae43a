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

#include "fcalink/error.hpp"
#include "fcalink/pretrain.hpp"
#include "fcalink/rng.hpp"

using namespace fcalink;

namespace {

BipartiteContext identity3() { return BipartiteContext::from_edges(3, 3, {{0, 0}, {1, 1}, {2, 2}}); }

BipartiteContext random_context(std::size_t n, double density, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Edge> e;
  for (ObjectId g = 0; g < n; ++g)
    for (AttributeId m = 0; m < n; ++m)
      if (rng.uniform01() < density) e.push_back({g, m});
  return BipartiteContext::from_edges(n, n, e);
}

PretrainOptions tiny_options() {
  PretrainOptions o;
  o.encoder.d_model = 16;
  o.encoder.n_layers = 1;
  o.encoder.n_heads = 2;
  o.encoder.d_ff = 32;
  o.batch_size = 16;
  o.seed = 3;
  return o;
}

std::size_t count_label(const std::vector<PretrainSample>& s, int label) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [&](const auto& x) { return x.ncp_label == label; }));
}

}  // namespace

TEST_CASE("pre-training set on the identity lattice") {
  const auto ctx = identity3();
  const auto lat = build_lattice(ctx);
  const Vocab v = Vocab::objects_of(ctx);
  SUBCASE("no holdout: six positives, six negatives, all train") {
    const auto set = build_pretrain_set(lat, Side::kObject, v, {.seed = 1});
    CHECK(set.heldout.empty());
    CHECK(count_label(set.train, 1) == 6);
    CHECK(count_label(set.train, 0) == 6);
    CHECK_FALSE(set.negatives_exhausted);
  }
  SUBCASE("holdout 0.2 keeps at least two samples aside") {
    const auto set = build_pretrain_set(lat, Side::kObject, v, {.seed = 1, .holdout_fraction = 0.2});
    CHECK(set.heldout.size() >= 2);
    CHECK(set.train.size() + set.heldout.size() == 12);
  }
  SUBCASE("determinism") {
    const auto a = build_pretrain_set(lat, Side::kObject, v, {.seed = 5, .holdout_fraction = 0.2});
    const auto b = build_pretrain_set(lat, Side::kObject, v, {.seed = 5, .holdout_fraction = 0.2});
    REQUIRE(a.train.size() == b.train.size());
    for (std::size_t i = 0; i < a.train.size(); ++i) {
      CHECK(a.train[i].sequence == b.train[i].sequence);
      CHECK(a.train[i].concepts == b.train[i].concepts);
    }
  }
  SUBCASE("errors") {
    const auto one = build_lattice(BipartiteContext::from_edges(1, 1, {{0, 0}}));
    REQUIRE(one.size() == 1);
    CHECK_THROWS_AS(build_pretrain_set(one, Side::kObject, Vocab::objects_of(BipartiteContext::from_edges(1, 1, {{0, 0}})), {}), DataError);
    CHECK_THROWS_AS(build_pretrain_set(lat, Side::kAttribute, v, {}), UsageError);
  }
}

TEST_CASE("pre-training set invariants on random lattices") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto ctx = random_context(12, 0.35, seed);
    const auto lat = build_lattice(ctx);
    for (Side side : {Side::kObject, Side::kAttribute}) {
      const Vocab v = side == Side::kObject ? Vocab::objects_of(ctx) : Vocab::attributes_of(ctx);
      const auto set = build_pretrain_set(lat, side, v, {.seed = seed, .holdout_fraction = 0.2});
      std::vector<PretrainSample> all = set.train;
      all.insert(all.end(), set.heldout.begin(), set.heldout.end());
      CHECK(count_label(all, 1) == count_label(all, 0));
      std::set<std::uint64_t> train_keys, held_keys;
      for (const auto& s : set.train) train_keys.insert(pair_key(s.concepts));
      for (const auto& s : set.heldout) held_keys.insert(pair_key(s.concepts));
      for (auto k : held_keys) CHECK(train_keys.count(k) == 0);
      std::set<CoverPair> covers(lat.covers.begin(), lat.covers.end());
      for (const auto& s : all) {
        const auto lo = std::min(s.concepts.first, s.concepts.second);
        const auto hi = std::max(s.concepts.first, s.concepts.second);
        CHECK((covers.count({lo, hi}) == 1) == (s.ncp_label == 1));
        // The sequence spells out the two concepts' sides.
        const TokenSequence plain = unmask(s.sequence);
        const auto& a = lat.concepts[s.concepts.first];
        const auto& b = lat.concepts[s.concepts.second];
        const auto first = (side == Side::kObject ? a.extent : a.intent).to_indices();
        const auto second = (side == Side::kObject ? b.extent : b.intent).to_indices();
        CHECK(plain == encode_pair(v, first, second, set.max_len));
      }
    }
  }
}

TEST_CASE("pre-training run: checkpoint, curve, determinism") {
  const auto ctx = random_context(10, 0.35, 4);
  const auto lat = build_lattice(ctx);
  const auto set = build_pretrain_set(lat, Side::kObject, Vocab::objects_of(ctx),
                                      {.seed = 2, .holdout_fraction = 0.2});
  const auto dir = std::filesystem::temp_directory_path() / "fcalink_pretrain_test";
  std::filesystem::create_directories(dir);
  auto opt = tiny_options();
  opt.epochs = 3;
  opt.checkpoint_path = dir / "ckpt.bin";
  opt.loss_curve_path = dir / "loss.csv";
  const auto a = run_pretrain(set, opt);
  REQUIRE(a.curve.size() == 3);
  for (const auto& r : a.curve) CHECK(r.heldout.has_value());
  const auto ckpt = load_checkpoint(dir / "ckpt.bin");
  CHECK(ckpt.params == a.params);
  CHECK(checkpoint_vocab(ckpt) == set.vocab);
  CHECK(checkpoint_encoder(ckpt) == a.encoder);
  std::ifstream in(dir / "loss.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "epoch,mtp_loss,ncp_loss,joint");

  opt.checkpoint_path.reset();
  opt.loss_curve_path.reset();
  const auto b = run_pretrain(set, opt);
  CHECK(loss_curve_csv(a.curve) == loss_curve_csv(b.curve));
  CHECK(a.params == b.params);
  std::filesystem::remove_all(dir);
}

TEST_CASE("one epoch on one batch round-trips through a checkpoint") {
  const auto ctx = identity3();
  const auto set = build_pretrain_set(build_lattice(ctx), Side::kObject, Vocab::objects_of(ctx), {.seed = 1});
  auto opt = tiny_options();
  opt.epochs = 1;
  opt.batch_size = 64;
  const auto r = run_pretrain(set, opt);
  const auto path = std::filesystem::temp_directory_path() / "fcalink_one.bin";
  save_checkpoint(path, make_pretrain_checkpoint(set, r));
  const auto back = load_checkpoint(path);
  CHECK(back.params == r.params);
  CHECK(eval_ncp_heldout(back, set.train).n_pos == 6);
  std::filesystem::remove(path);
}

TEST_CASE("joint loss falls on a 30x30 random context") {
  const auto ctx = random_context(30, 0.3, 11);
  const auto set = build_pretrain_set(build_lattice(ctx), Side::kObject, Vocab::objects_of(ctx), {.seed = 2});
  auto opt = tiny_options();
  opt.epochs = 50;
  opt.batch_size = 128;
  opt.eval_heldout = false;
  // A fixed subset keeps the test fast; the property is about the trend.
  PretrainSet small = set;
  small.train.resize(std::min<std::size_t>(small.train.size(), 256));
  const auto r = run_pretrain(small, opt);
  CHECK(r.curve.back().joint < r.curve.front().joint);
}

TEST_CASE("held-out evaluation of an uninformative model") {
  const auto ctx = identity3();
  const auto set = build_pretrain_set(build_lattice(ctx), Side::kObject, Vocab::objects_of(ctx), {.seed = 1});
  nn::EncoderConfig cfg = tiny_options().encoder;
  cfg.vocab_size = set.vocab.size();
  auto params = nn::make_pretrain_params<float>(cfg, 1);
  for (auto& t : params.tensors())
    if (t.name.rfind("ncp.classifier.", 0) == 0) nn::fill_constant(t, 0.0f);
  const auto rep = eval_ncp_heldout(params, cfg, set.train);
  CHECK(rep.auc == 0.5);
  CHECK_THROWS_AS(eval_ncp_heldout(params, cfg, {}), UsageError);
}

TEST_CASE("divergence aborts with the last good checkpoint") {
  const auto ctx = random_context(8, 0.4, 2);
  const auto set = build_pretrain_set(build_lattice(ctx), Side::kObject, Vocab::objects_of(ctx), {.seed = 2});
  const auto path = std::filesystem::temp_directory_path() / "fcalink_div.bin";
  auto opt = tiny_options();
  opt.epochs = 4;
  opt.checkpoint_path = path;
  opt.eval_heldout = false;
  // A huge step size blows the weights up within a few epochs.
  opt.adam.learning_rate = 1e30;
  opt.adam.clip_norm = 0;
  std::size_t finished = 0;
  opt.on_epoch = [&](std::size_t e, const nn::PretrainLosses&) {
    finished = e;
    return true;
  };
  CHECK_THROWS_AS(run_pretrain(set, opt), DivergenceError);
  if (finished > 0) {
    const auto ckpt = load_checkpoint(path);
    CHECK(ckpt.params.all_finite());
    CHECK(ckpt.header.at("epochs_completed") == finished);
  }
  std::filesystem::remove(path);
}
