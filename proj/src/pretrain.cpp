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

#include "fcalink/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "fcalink/error.hpp"
#include "fcalink/rng.hpp"

namespace fcalink {
namespace {

constexpr std::uint64_t kOrientationStream = 0x0121;
constexpr std::uint64_t kNegativeStream = 0x0e9a;
constexpr std::uint64_t kHoldoutStream = 0x401d;
constexpr std::uint64_t kMaskStream = 0x3a5c;
constexpr std::uint64_t kShuffleStream = 0x5f1e;
constexpr std::uint64_t kDropoutStream = 0xd209;

std::vector<std::uint32_t> side_set(const FormalConcept& c, Side side) {
  return (side == Side::kObject ? c.extent : c.intent).to_indices();
}

std::size_t holdout_count(std::size_t n, double fraction) {
  if (fraction <= 0.0 || n < 2) return 0;
  const auto h = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  return std::clamp<std::size_t>(h, 1, n - 1);
}

// Splits samples of one class by unordered key.
void split_class(std::vector<PretrainSample>& samples, double fraction, Rng& rng,
                 std::vector<PretrainSample>& train, std::vector<PretrainSample>& heldout) {
  std::vector<std::uint64_t> keys;
  for (const auto& s : samples) keys.push_back(pair_key(s.concepts));
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  rng.shuffle(keys);
  const std::size_t h = holdout_count(keys.size(), fraction);
  std::vector<std::uint64_t> held(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(h));
  std::sort(held.begin(), held.end());
  for (auto& s : samples) {
    if (std::binary_search(held.begin(), held.end(), pair_key(s.concepts)))
      heldout.push_back(std::move(s));
    else
      train.push_back(std::move(s));
  }
}

nn::SequenceRefs refs_of(const std::vector<TokenSequence>& seqs) {
  nn::SequenceRefs out;
  out.reserve(seqs.size());
  for (const auto& s : seqs) out.push_back(&s);
  return out;
}

}  // namespace

std::uint64_t pair_key(const ConceptPair& p) {
  const auto lo = std::min(p.first, p.second);
  const auto hi = std::max(p.first, p.second);
  return (static_cast<std::uint64_t>(lo) << 32) | hi;
}

PretrainSet build_pretrain_set(const ConceptLattice& lattice, Side side, const Vocab& vocab,
                               const PretrainSetOptions& options) {
  if (lattice.size() < 2) throw DataError("pre-training needs a lattice with at least 2 concepts");
  if (options.holdout_fraction < 0.0 || options.holdout_fraction >= 1.0)
    throw UsageError("holdout fraction must lie in [0, 1)");
  if (options.mask_rate < 0.0 || options.mask_rate > 1.0)
    throw UsageError("mask rate must lie in [0, 1]");
  if (vocab.side() != side) throw UsageError("vocabulary side does not match the requested model");
  const std::size_t expected =
      side == Side::kObject ? lattice.num_objects : lattice.num_attributes;
  if (vocab.num_entities() != expected)
    throw UsageError("vocabulary size does not match the lattice");

  PretrainSet set;
  set.side = side;
  set.vocab = vocab;
  set.max_len = options.max_len;
  if (set.max_len == 0) {
    const std::size_t longest =
        side == Side::kObject ? lattice.max_extent_size() : lattice.max_intent_size();
    set.max_len = default_pair_length(longest, options.max_len_cap);
  }

  Rng orient(derive_seed(options.seed, kOrientationStream));
  std::vector<ConceptPair> positives;
  for (const ConceptPair& p : neighbor_pairs(lattice)) {
    const bool flip = orient.uniform_index(2) == 1;
    positives.push_back(flip ? ConceptPair{p.second, p.first} : p);
  }
  Rng neg_rng(derive_seed(options.seed, kNegativeStream));
  NegativeSample negatives = sample_non_neighbor_pairs(lattice, positives.size(), neg_rng);
  set.negatives_exhausted = negatives.exhausted;

  auto encode = [&](const ConceptPair& p, int label, std::size_t index,
                    std::vector<PretrainSample>& out) {
    auto a = side_set(lattice.concepts[p.first], side);
    auto b = side_set(lattice.concepts[p.second], side);
    if (a.size() + b.size() + 3 > set.max_len) {
      ++set.skipped_overflow;
      return;
    }
    TokenSequence seq = encode_pair(vocab, std::move(a), std::move(b), set.max_len, "concept pair");
    const std::uint64_t mask_seed = derive_seed(derive_seed(options.seed, kMaskStream), index);
    out.push_back({apply_mtp_mask(seq, options.mask_rate, vocab.num_entities(), mask_seed), label, p});
  };
  std::vector<PretrainSample> pos_samples;
  std::vector<PretrainSample> neg_samples;
  std::size_t index = 0;
  for (const auto& p : positives) encode(p, 1, index++, pos_samples);
  for (const auto& p : negatives.pairs) encode(p, 0, index++, neg_samples);
  // Overflow may skip more of one class; trim the larger to keep them equal.
  const std::size_t n = std::min(pos_samples.size(), neg_samples.size());
  if (pos_samples.size() > n || neg_samples.size() > n) {
    Rng trim(derive_seed(options.seed, kNegativeStream + 1));
    auto& larger = pos_samples.size() > n ? pos_samples : neg_samples;
    trim.shuffle(larger);
    larger.resize(n);
    std::sort(larger.begin(), larger.end(), [](const auto& x, const auto& y) {
      return x.concepts < y.concepts;
    });
  }

  Rng hold(derive_seed(options.seed, kHoldoutStream));
  split_class(pos_samples, options.holdout_fraction, hold, set.train, set.heldout);
  split_class(neg_samples, options.holdout_fraction, hold, set.train, set.heldout);
  return set;
}

std::vector<double> ncp_scores(const nn::ParamSet<float>& params, const nn::EncoderConfig& cfg,
                               const std::vector<PretrainSample>& samples, std::size_t batch_size,
                               bool as_trained) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    const std::size_t end = std::min(samples.size(), start + batch_size);
    std::vector<TokenSequence> seqs;
    for (std::size_t i = start; i < end; ++i) seqs.push_back(as_trained ? samples[i].sequence : unmask(samples[i].sequence));
    const auto probs = nn::ncp_probabilities<float>(params, cfg, refs_of(seqs));
    out.insert(out.end(), probs.begin(), probs.end());
  }
  return out;
}

metrics::Report eval_ncp_heldout(const nn::ParamSet<float>& params, const nn::EncoderConfig& cfg,
                                 const std::vector<PretrainSample>& heldout) {
  if (heldout.empty()) throw UsageError("no held-out samples to evaluate");
  metrics::ScoredSet scored;
  scored.scores = ncp_scores(params, cfg, heldout);
  for (const auto& s : heldout) scored.labels.push_back(s.ncp_label);
  return metrics::evaluate(scored);
}

metrics::Report eval_ncp_heldout(const Checkpoint& ckpt,
                                 const std::vector<PretrainSample>& heldout) {
  return eval_ncp_heldout(ckpt.params, checkpoint_encoder(ckpt), heldout);
}

Checkpoint make_pretrain_checkpoint(const PretrainSet& set, const PretrainResult& result) {
  Checkpoint ckpt;
  ckpt.header = {{"kind", "pretrain"},
                 {"side", to_string(set.side)},
                 {"encoder", result.encoder.to_json()},
                 {"vocab", set.vocab.to_json()},
                 {"epochs_completed", result.curve.size()}};
  ckpt.params = result.params;
  return ckpt;
}

nn::EncoderConfig checkpoint_encoder(const Checkpoint& ckpt) {
  if (!ckpt.header.contains("encoder")) throw DataError("checkpoint header lacks an encoder config");
  return nn::EncoderConfig::from_json(ckpt.header.at("encoder"));
}

Vocab checkpoint_vocab(const Checkpoint& ckpt) {
  if (!ckpt.header.contains("vocab")) throw DataError("checkpoint header lacks a vocabulary");
  return Vocab::from_json(ckpt.header.at("vocab"));
}

std::string loss_curve_csv(const std::vector<EpochRecord>& curve) {
  std::ostringstream os;
  os.precision(9);
  os << "epoch,mtp_loss,ncp_loss,joint\n";
  for (const auto& r : curve) os << r.epoch << ',' << r.mtp << ',' << r.ncp << ',' << r.joint << '\n';
  return os.str();
}

PretrainResult run_pretrain(const PretrainSet& set, const PretrainOptions& options) {
  if (set.train.empty()) throw UsageError("no pre-training samples");
  if (options.batch_size == 0) throw UsageError("batch size must be positive");
  PretrainResult result;
  result.encoder = options.encoder;
  result.encoder.vocab_size = set.vocab.size();
  result.encoder.max_len = set.max_len;
  result.encoder.seed = options.seed;
  result.encoder.validate();
  const auto& cfg = result.encoder;
  result.params = nn::make_pretrain_params<float>(cfg, options.seed);
  nn::Adam<float> adam(result.params, options.adam);
  nn::ParamSet<float> grads = result.params.zeros_like();

  std::vector<std::size_t> order(set.train.size());
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::uint64_t epoch_seed = derive_seed(options.seed, epoch);
    Rng shuffle(derive_seed(epoch_seed, kShuffleStream));
    shuffle.shuffle(order);

    double mtp_sum = 0, ncp_sum = 0;
    std::size_t masked = 0, seen = 0, batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      nn::SequenceRefs seqs;
      std::vector<int> labels;
      for (std::size_t i = start; i < end; ++i) {
        seqs.push_back(&set.train[order[i]].sequence);
        labels.push_back(set.train[order[i]].ncp_label);
      }
      const nn::DropoutPlan plan{cfg.dropout,
                                 derive_seed(derive_seed(epoch_seed, kDropoutStream), batch_index)};
      grads.set_zero();
      const nn::PretrainLosses losses =
          nn::pretrain_loss<float>(result.params, cfg, seqs, labels, &grads, &plan);
      if (!std::isfinite(losses.joint()))
        throw DivergenceError("pre-training loss became non-finite in epoch " +
                              std::to_string(epoch));
      adam.step(result.params, grads);
      mtp_sum += losses.mtp * static_cast<double>(losses.masked_positions);
      masked += losses.masked_positions;
      ncp_sum += losses.ncp * static_cast<double>(seqs.size());
      seen += seqs.size();
    }
    if (!result.params.all_finite())
      throw DivergenceError("pre-training parameters became non-finite in epoch " +
                            std::to_string(epoch));

    EpochRecord rec;
    rec.epoch = epoch;
    rec.mtp = masked ? mtp_sum / static_cast<double>(masked) : 0.0;
    rec.ncp = ncp_sum / static_cast<double>(seen);
    rec.joint = rec.mtp + rec.ncp;
    if (options.eval_heldout && !set.heldout.empty()) {
      std::size_t pos = 0;
      for (const auto& s : set.heldout) pos += s.ncp_label == 1;
      if (pos > 0 && pos < set.heldout.size())
        rec.heldout = eval_ncp_heldout(result.params, cfg, set.heldout);
    }
    result.curve.push_back(rec);

    if (options.checkpoint_path) save_checkpoint(*options.checkpoint_path, make_pretrain_checkpoint(set, result));
    if (options.loss_curve_path) {
      std::ofstream out(*options.loss_curve_path, std::ios::binary | std::ios::trunc);
      if (!out) throw UsageError("cannot write " + options.loss_curve_path->string());
      out << loss_curve_csv(result.curve);
    }
    if (options.on_epoch) {
      nn::PretrainLosses summary{rec.mtp, rec.ncp, masked};
      if (!options.on_epoch(epoch, summary)) break;
    }
  }
  return result;
}

}  // namespace fcalink
