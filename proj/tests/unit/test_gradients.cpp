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

#include <cstdlib>

#include "fcalink/encoder.hpp"
#include "gradcheck.hpp"

using namespace fcalink;
using namespace fcalink::nn;
using fcalink::testing::grad_check;

namespace {

EncoderConfig small_config(std::size_t vocab) {
  EncoderConfig c;
  c.d_model = 8;
  c.n_layers = 1;
  c.n_heads = 2;
  c.d_ff = 16;
  c.vocab_size = vocab;
  c.max_len = 12;
  c.dropout = 0.0;
  return c;
}

std::vector<TokenSequence> pair_batch(const Vocab& v) {
  std::vector<TokenSequence> seqs;
  seqs.push_back(apply_mtp_mask(encode_pair(v, {0, 2, 3}, {1, 4}, 12), 0.4, v.num_entities(), 11));
  seqs.push_back(apply_mtp_mask(encode_pair(v, {5}, {0, 1, 2, 5}, 12), 0.4, v.num_entities(), 12));
  seqs.push_back(apply_mtp_mask(encode_pair(v, {}, {3}, 12), 0.4, v.num_entities(), 13));
  return seqs;
}

SequenceRefs refs(const std::vector<TokenSequence>& s) {
  SequenceRefs r;
  for (const auto& x : s) r.push_back(&x);
  return r;
}

Vocab vocab_of(std::size_t n, Side side) {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i) labels.push_back("e" + std::to_string(i));
  return Vocab(side, labels);
}

void check_all(ParamSet<double>& p, const ParamSet<double>& g, const std::function<double()>& f) {
  for (const auto& t : p.tensors()) {
    CAPTURE(t.name);
    const auto r = grad_check(p, g, f, t.name);
    CAPTURE(r.worst_index);
    CAPTURE(r.analytic);
    CAPTURE(r.numeric);
    CHECK(r.max_rel_error < 1e-4);
    if (std::getenv("GRADCHECK_VERBOSE")) MESSAGE(t.name << " " << r.max_rel_error);
  }
}

}  // namespace

TEST_CASE("pre-training heads and encoder match finite differences") {
  const Vocab v = vocab_of(6, Side::kObject);
  const auto cfg = small_config(v.size());
  auto p = make_pretrain_params<double>(cfg, 5);
  const auto seqs = pair_batch(v);
  const std::vector<int> labels{1, 0, 1};
  auto g = p.zeros_like();
  const auto losses = pretrain_loss<double>(p, cfg, refs(seqs), labels, &g);
  CHECK(losses.masked_positions > 0);
  check_all(p, g, [&] { return pretrain_loss<double>(p, cfg, refs(seqs), labels, nullptr).joint(); });
}

TEST_CASE("gradients hold with a fixed dropout plan") {
  const Vocab v = vocab_of(6, Side::kObject);
  auto cfg = small_config(v.size());
  cfg.dropout = 0.2;
  auto p = make_pretrain_params<double>(cfg, 6);
  const auto seqs = pair_batch(v);
  const std::vector<int> labels{0, 1, 1};
  const DropoutPlan plan{0.2, 99};
  auto g = p.zeros_like();
  pretrain_loss<double>(p, cfg, refs(seqs), labels, &g, &plan);
  check_all(p, g, [&] {
    return pretrain_loss<double>(p, cfg, refs(seqs), labels, nullptr, &plan).joint();
  });
}

TEST_CASE("group-link head gradients") {
  const Vocab v = vocab_of(7, Side::kObject);
  const auto cfg = small_config(v.size());
  auto p = make_oo_params<double>(cfg, 7);
  std::vector<TokenSequence> seqs{encode_single(v, {0, 3}, 4), encode_single(v, {2, 5, 6}, 5),
                                  encode_single(v, {1, 4}, 6)};
  const std::vector<int> labels{1, 0, 1};
  auto g = p.zeros_like();
  oo_loss<double>(p, cfg, refs(seqs), labels, &g);
  check_all(p, g, [&] { return oo_loss<double>(p, cfg, refs(seqs), labels, nullptr); });
}

TEST_CASE("twin-tower pair head gradients") {
  const Vocab vo = vocab_of(5, Side::kObject);
  const Vocab va = vocab_of(4, Side::kAttribute);
  auto co = small_config(vo.size());
  auto ca = small_config(va.size());
  ca.d_model = 6;
  ca.n_heads = 3;
  auto p = make_oa_params<double>(co, ca, 8);
  std::vector<TokenSequence> os{encode_single(vo, {0}, 3), encode_single(vo, {4}, 3),
                                encode_single(vo, {2}, 3)};
  std::vector<TokenSequence> as{encode_single(va, {1}, 3), encode_single(va, {3}, 3),
                                encode_single(va, {0}, 3)};
  const std::vector<int> labels{0, 1, 1};
  auto g = p.zeros_like();
  oa_loss<double>(p, co, ca, refs(os), refs(as), labels, &g);
  check_all(p, g, [&] { return oa_loss<double>(p, co, ca, refs(os), refs(as), labels, nullptr); });
}
