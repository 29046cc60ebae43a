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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fcalink/checkpoint.hpp"
#include "fcalink/encoder.hpp"
#include "fcalink/fca.hpp"
#include "fcalink/metrics.hpp"
#include "fcalink/tokenizer.hpp"

namespace fcalink {

// One joint training example: a masked concept pair and whether the two
// concepts are lattice neighbours.
struct PretrainSample {
  TokenSequence sequence;
  int ncp_label = 0;
  ConceptPair concepts;  // in presentation order
};

// Unordered key shared by both orientations of a pair.
std::uint64_t pair_key(const ConceptPair& p);

struct PretrainSetOptions {
  double mask_rate = 0.15;
  std::uint64_t seed = 0;
  double holdout_fraction = 0.0;
  // 0 derives 2 * (largest set) + 3, clamped to max_len_cap.
  std::size_t max_len = 0;
  std::size_t max_len_cap = 128;
};

struct PretrainSet {
  Side side = Side::kObject;
  Vocab vocab;
  std::size_t max_len = 0;
  std::vector<PretrainSample> train;
  std::vector<PretrainSample> heldout;
  std::size_t skipped_overflow = 0;  // pairs too long for max_len
  bool negatives_exhausted = false;
};

// Positives are the lattice covers, each in a seeded random orientation;
// negatives are as many distinct ordered non-neighbour pairs. Sequences hold
// extents (object side) or intents (attribute side). The holdout is drawn per
// class over unordered pairs, so both orientations of a pair stay together.
PretrainSet build_pretrain_set(const ConceptLattice& lattice, Side side, const Vocab& vocab,
                               const PretrainSetOptions& options);

struct PretrainOptions {
  nn::EncoderConfig encoder;  // vocab_size and max_len are filled in from the set
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  nn::AdamOptions adam;
  std::uint64_t seed = 0;
  // When set, a checkpoint is written after every finished epoch together
  // with the loss curve.
  std::optional<std::filesystem::path> checkpoint_path;
  std::optional<std::filesystem::path> loss_curve_path;
  // Evaluate held-out neighbour prediction after each epoch.
  bool eval_heldout = true;
  // Called after each epoch; returning false stops training early.
  std::function<bool(std::size_t epoch, const nn::PretrainLosses&)> on_epoch;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double mtp = 0.0;
  double ncp = 0.0;
  double joint = 0.0;
  std::optional<metrics::Report> heldout;
};

struct PretrainResult {
  nn::EncoderConfig encoder;
  nn::ParamSet<float> params;
  std::vector<EpochRecord> curve;
};

// Joint masked-token and neighbour training. A non-finite loss raises
// DivergenceError; the checkpoint on disk then still holds the last good epoch.
PretrainResult run_pretrain(const PretrainSet& set, const PretrainOptions& options);

Checkpoint make_pretrain_checkpoint(const PretrainSet& set, const PretrainResult& result);
// Encoder config and vocabulary stored in a pretrain checkpoint header.
nn::EncoderConfig checkpoint_encoder(const Checkpoint& ckpt);
Vocab checkpoint_vocab(const Checkpoint& ckpt);

std::string loss_curve_csv(const std::vector<EpochRecord>& curve);

// Neighbour probabilities on the unmasked sequences, or with `as_trained` on
// the masked sequences the model saw during training (without dropout).
std::vector<double> ncp_scores(const nn::ParamSet<float>& params, const nn::EncoderConfig& cfg,
                               const std::vector<PretrainSample>& samples,
                               std::size_t batch_size = 256, bool as_trained = false);
metrics::Report eval_ncp_heldout(const nn::ParamSet<float>& params, const nn::EncoderConfig& cfg,
                                 const std::vector<PretrainSample>& heldout);
metrics::Report eval_ncp_heldout(const Checkpoint& ckpt, const std::vector<PretrainSample>& heldout);

}  // namespace fcalink
