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
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fcalink/tensor.hpp"
#include "fcalink/tokenizer.hpp"

namespace fcalink::nn {

// Transformer encoder without position embeddings: a token's representation
// depends on its id, its segment and the multiset of other tokens it attends
// to, never on where it sits in the sequence.
struct EncoderConfig {
  std::size_t d_model = 64;
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t d_ff = 256;
  std::size_t vocab_size = 0;
  std::size_t max_len = 128;
  double dropout = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static EncoderConfig from_json(const nlohmann::json& j);
  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

using SequenceRefs = std::vector<const TokenSequence*>;

// Tokens of several sequences stacked row-wise. Sequence i owns rows
// [offsets[i], offsets[i+1]); key_mask marks rows that may be attended to.
struct PackedBatch {
  std::vector<TokenId> ids;
  std::vector<std::uint8_t> segments;
  std::vector<std::uint8_t> key_mask;
  std::vector<std::size_t> offsets{0};

  std::size_t num_sequences() const noexcept { return offsets.size() - 1; }
  std::size_t num_rows() const noexcept { return ids.size(); }

  // With trim_padding, trailing [PAD] rows are dropped. They are masked as
  // keys, so the remaining rows are unaffected.
  static PackedBatch pack(const SequenceRefs& seqs, bool trim_padding);
};

// Per-call dropout seeding: sequence i of a batch draws its masks from
// derive_seed(seed, i), so results never depend on evaluation order.
struct DropoutPlan {
  double rate = 0.0;
  std::uint64_t seed = 0;
};

template <class T>
struct LayerNormCache {
  Matrix<T> normalized;
  std::vector<T> inv_std;
};

template <class T>
struct LayerCache {
  Matrix<T> input;
  Matrix<T> q, k, v;
  std::vector<Matrix<T>> probs;  // [sequence * n_heads + head]
  Matrix<T> context;
  Matrix<T> attn_drop;
  LayerNormCache<T> attn_norm;
  Matrix<T> attn_out;
  Matrix<T> ff_pre;
  Matrix<T> ff_act;
  Matrix<T> ff_drop;
  LayerNormCache<T> ff_norm;
};

template <class T>
struct EncoderCache {
  PackedBatch batch;
  LayerNormCache<T> embed_norm;
  Matrix<T> embed_drop;
  std::vector<LayerCache<T>> layers;
};

template <class T>
void add_encoder_params(ParamSet<T>& params, const std::string& prefix, const EncoderConfig& cfg);
template <class T>
void init_encoder_params(ParamSet<T>& params, const std::string& prefix, const EncoderConfig& cfg,
                         Rng& rng);

// Hidden states for every packed row (num_rows × d_model).
template <class T>
Matrix<T> encoder_forward(const ParamSet<T>& params, const std::string& prefix,
                          const EncoderConfig& cfg, const PackedBatch& batch,
                          EncoderCache<T>* cache, const DropoutPlan* dropout);

// Accumulates parameter gradients for d(loss)/d(hidden states).
template <class T>
void encoder_backward(const ParamSet<T>& params, const std::string& prefix,
                      const EncoderConfig& cfg, const EncoderCache<T>& cache,
                      const Matrix<T>& d_hidden, ParamSet<T>& grads);

// Evaluation-mode hidden states, one max_len × d_model matrix per sequence.
template <class T>
std::vector<Matrix<T>> forward(const ParamSet<T>& params, const std::string& prefix,
                               const EncoderConfig& cfg, const SequenceRefs& seqs);

// ---------------------------------------------------------------------------
// Model parameter sets. Tensor names are stable and form the checkpoint keys.

inline const std::string kEncoderPrefix = "encoder.";
inline const std::string kObjectTowerPrefix = "object_encoder.";
inline const std::string kAttributeTowerPrefix = "attribute_encoder.";

// Encoder + masked-token head + neighbour-prediction head.
template <class T>
ParamSet<T> make_pretrain_params(const EncoderConfig& cfg, std::uint64_t seed);
// Encoder + group-link head P = σ(ReLU(h·W_cls)·W).
template <class T>
ParamSet<T> make_oo_params(const EncoderConfig& cfg, std::uint64_t seed);
// Object tower + attribute tower + pair head P = σ(ReLU([h1 h2]·W_cls)·W).
template <class T>
ParamSet<T> make_oa_params(const EncoderConfig& object_cfg, const EncoderConfig& attribute_cfg,
                           std::uint64_t seed);

struct PretrainLosses {
  double mtp = 0.0;
  double ncp = 0.0;
  std::size_t masked_positions = 0;
  double joint() const { return mtp + ncp; }
};

// Masked-token cross-entropy (mean over selected positions in the batch) plus
// neighbour binary cross-entropy (mean over sequences). When `grads` is
// non-null the gradient of their sum is accumulated into it.
template <class T>
PretrainLosses pretrain_loss(const ParamSet<T>& params, const EncoderConfig& cfg,
                             const SequenceRefs& seqs, const std::vector<int>& ncp_labels,
                             ParamSet<T>* grads, const DropoutPlan* dropout = nullptr);

template <class T>
std::vector<double> ncp_probabilities(const ParamSet<T>& params, const EncoderConfig& cfg,
                                      const SequenceRefs& seqs);

// Mean binary cross-entropy of the group-link head.
template <class T>
double oo_loss(const ParamSet<T>& params, const EncoderConfig& cfg, const SequenceRefs& seqs,
               const std::vector<int>& labels, ParamSet<T>* grads,
               const DropoutPlan* dropout = nullptr);
template <class T>
std::vector<double> oo_probabilities(const ParamSet<T>& params, const EncoderConfig& cfg,
                                     const SequenceRefs& seqs);

// Mean binary cross-entropy of the twin-tower pair head.
template <class T>
double oa_loss(const ParamSet<T>& params, const EncoderConfig& object_cfg,
               const EncoderConfig& attribute_cfg, const SequenceRefs& object_seqs,
               const SequenceRefs& attribute_seqs, const std::vector<int>& labels,
               ParamSet<T>* grads, const DropoutPlan* dropout = nullptr);
template <class T>
std::vector<double> oa_probabilities(const ParamSet<T>& params, const EncoderConfig& object_cfg,
                                     const EncoderConfig& attribute_cfg,
                                     const SequenceRefs& object_seqs,
                                     const SequenceRefs& attribute_seqs);

// The bare heads on given [CLS] states.
template <class T>
double oo_head(const ParamSet<T>& params, const RowVector<T>& h_cls);
template <class T>
double oa_head(const ParamSet<T>& params, const RowVector<T>& h_object,
               const RowVector<T>& h_attribute);

}  // namespace fcalink::nn
