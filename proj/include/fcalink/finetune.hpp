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
#include <optional>
#include <string>
#include <vector>

#include "fcalink/checkpoint.hpp"
#include "fcalink/context.hpp"
#include "fcalink/encoder.hpp"
#include "fcalink/metrics.hpp"
#include "fcalink/tokenizer.hpp"

namespace fcalink {

// A group of input-network objects that share no attribute there. The label
// says whether they share one in the target network.
struct OOSample {
  std::vector<ObjectId> group;  // ascending input ids
  int label = 0;
};

// An object-attribute pair missing from the input network; labelled 1 when the
// edge is present in the target network.
struct OASample {
  ObjectId object = 0;
  AttributeId attribute = 0;
  int label = 0;
};

template <class S>
struct SampleSplit {
  std::vector<S> train;
  std::vector<S> test;
  std::size_t candidates = 0;  // before splitting and balancing
  std::size_t positives = 0;
};

// Where the training samples come from. The test split is always held-out
// candidates labelled against the target.
enum class TrainSource {
  kCandidates,  // the candidates' train split, labelled against the target
  kInput,       // every input pair or group, labelled by the input network itself
  kBoth,        // union of the two
};

const char* to_string(TrainSource source);
TrainSource train_source_from_string(const std::string& s);

struct SampleOptions {
  std::uint64_t seed = 0;
  TrainSource train_source = TrainSource::kCandidates;
  double test_fraction = 0.2;
  bool balance = true;        // downsample the majority class of the train split
  bool balance_test = false;  // same for the test split
};

struct OOSampleOptions : SampleOptions {
  std::size_t max_group = 2;               // l_m
  std::size_t max_candidates = 5'000'000;  // enumeration budget
};

// Enumerates every input object group of size 2..max_group with no common
// attribute, labels it against the target, then splits per class.
SampleSplit<OOSample> gen_oo_samples(const SplitPair& split, const OOSampleOptions& options);
SampleSplit<OASample> gen_oa_samples(const SplitPair& split, const SampleOptions& options);

// Groups/pairs of input ids with their labels, before splitting.
std::vector<OOSample> oo_candidates(const SplitPair& split, std::size_t max_group,
                                    std::size_t max_candidates);
std::vector<OASample> oa_candidates(const SplitPair& split);

// Every input pair (group) labelled 1 when the input network links it.
std::vector<OOSample> oo_input_samples(const BipartiteContext& input, std::size_t max_group,
                                       std::size_t max_candidates);
std::vector<OASample> oa_input_samples(const BipartiteContext& input);

struct FinetuneOptions {
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  nn::AdamOptions adam;
  std::uint64_t seed = 0;
};

struct OOModel {
  nn::EncoderConfig encoder;
  Vocab vocab;
  nn::ParamSet<float> params;
  bool pretrained = false;
  std::vector<double> loss_curve;
};

struct OAModel {
  nn::EncoderConfig object_encoder;
  nn::EncoderConfig attribute_encoder;
  Vocab object_vocab;
  Vocab attribute_vocab;
  nn::ParamSet<float> params;
  bool pretrained = false;
  std::vector<double> loss_curve;
};

// Encoder weights come from the pre-trained checkpoint when one is given;
// otherwise every weight is drawn from `fallback` with `seed`. A checkpoint
// whose vocabulary differs from `vocab` is rejected.
OOModel init_oo_model(const Checkpoint* object_ckpt, const Vocab& vocab,
                      const nn::EncoderConfig& fallback, std::uint64_t seed);
OAModel init_oa_model(const Checkpoint* object_ckpt, const Checkpoint* attribute_ckpt,
                      const Vocab& object_vocab, const Vocab& attribute_vocab,
                      const nn::EncoderConfig& fallback, std::uint64_t seed);

// Trains every weight with binary cross-entropy.
void finetune_oo(OOModel& model, const std::vector<OOSample>& samples,
                 const FinetuneOptions& options);
void finetune_oa(OAModel& model, const std::vector<OASample>& samples,
                 const FinetuneOptions& options);

std::vector<double> score_oo(const OOModel& model, const std::vector<OOSample>& samples,
                             std::size_t batch_size = 512);
std::vector<double> score_oa(const OAModel& model, const std::vector<OASample>& samples,
                             std::size_t batch_size = 512);

Checkpoint to_checkpoint(const OOModel& model);
Checkpoint to_checkpoint(const OAModel& model);
OOModel oo_model_from_checkpoint(const Checkpoint& ckpt);
OAModel oa_model_from_checkpoint(const Checkpoint& ckpt);

struct PredictionRow {
  std::string candidate;
  double score = 0.0;
  std::optional<int> label;
};

// Rows sorted by descending score, ties by candidate.
struct PredictionReport {
  std::vector<PredictionRow> rows;

  void sort();
  metrics::ScoredSet scored() const;  // labelled rows only
  std::string to_csv() const;         // candidate,score,label
  static PredictionReport from_csv(std::string_view text);
  void write(const std::filesystem::path& path) const;
  static PredictionReport read(const std::filesystem::path& path);
};

// Candidate keys use input labels joined by '|'.
std::string oo_candidate_key(const BipartiteContext& input, const OOSample& s);
std::string oa_candidate_key(const BipartiteContext& input, const OASample& s);

PredictionReport predict_oo(const OOModel& model, const BipartiteContext& input,
                            const std::vector<OOSample>& candidates);
PredictionReport predict_oa(const OAModel& model, const BipartiteContext& input,
                            const std::vector<OASample>& candidates);

}  // namespace fcalink
