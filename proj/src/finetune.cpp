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

#include "fcalink/finetune.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "fcalink/error.hpp"
#include "fcalink/fca.hpp"
#include "fcalink/pretrain.hpp"
#include "fcalink/rng.hpp"

#include "csv.hpp"

namespace fcalink {
namespace {

constexpr std::uint64_t kSplitStream = 0x7e57;
constexpr std::uint64_t kBalanceStream = 0xba1a;
constexpr std::uint64_t kShuffleStream = 0x5f1f;
constexpr std::uint64_t kDropoutStream = 0xd20a;
constexpr std::uint64_t kInputBalanceStream = 0x1b7a;

// Saturating binomial coefficient.
std::size_t choose(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  long double r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<long double>(n - k + i) / i;
  constexpr auto cap = static_cast<long double>(std::numeric_limits<std::size_t>::max() / 2);
  return r >= cap ? std::numeric_limits<std::size_t>::max() / 2 : static_cast<std::size_t>(std::llround(r));
}

std::vector<std::size_t> take(std::vector<std::size_t> idx, std::size_t n, Rng& rng) {
  rng.shuffle(idx);
  idx.resize(std::min(n, idx.size()));
  return idx;
}

// Per-class test split, then optional downsampling of the majority class.
template <class S>
SampleSplit<S> split_samples(std::vector<S> all, const SampleOptions& opt) {
  if (opt.test_fraction < 0.0 || opt.test_fraction >= 1.0)
    throw UsageError("test fraction must lie in [0, 1)");
  SampleSplit<S> out;
  out.candidates = all.size();
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < all.size(); ++i) (all[i].label ? pos : neg).push_back(i);
  out.positives = pos.size();

  Rng split_rng(derive_seed(opt.seed, kSplitStream));
  std::vector<std::size_t> train_pos, train_neg, test_pos, test_neg;
  auto split_class = [&](std::vector<std::size_t> idx, std::vector<std::size_t>& train,
                         std::vector<std::size_t>& test) {
    split_rng.shuffle(idx);
    std::size_t n_test = static_cast<std::size_t>(
        std::llround(opt.test_fraction * static_cast<double>(idx.size())));
    if (opt.test_fraction > 0 && idx.size() >= 2) n_test = std::clamp<std::size_t>(n_test, 1, idx.size() - 1);
    test.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  };
  split_class(pos, train_pos, test_pos);
  split_class(neg, train_neg, test_neg);

  Rng balance_rng(derive_seed(opt.seed, kBalanceStream));
  auto balance = [&](std::vector<std::size_t>& p, std::vector<std::size_t>& n) {
    if (p.empty() || n.empty()) return;
    const std::size_t m = std::min(p.size(), n.size());
    p = take(std::move(p), m, balance_rng);
    n = take(std::move(n), m, balance_rng);
  };
  if (opt.balance) balance(train_pos, train_neg);
  if (opt.balance_test) balance(test_pos, test_neg);

  auto collect = [&](std::vector<std::size_t> a, const std::vector<std::size_t>& b,
                     std::vector<S>& dst) {
    a.insert(a.end(), b.begin(), b.end());
    std::sort(a.begin(), a.end());
    for (std::size_t i : a) dst.push_back(all[i]);
  };
  collect(train_pos, train_neg, out.train);
  collect(test_pos, test_neg, out.test);
  return out;
}

// Replaces or extends the train split according to the train source.
template <class S>
void add_input_samples(SampleSplit<S>& out, std::vector<S> input, const SampleOptions& opt) {
  if (opt.train_source == TrainSource::kCandidates) return;
  if (opt.train_source == TrainSource::kInput) out.train.clear();
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < input.size(); ++i) (input[i].label ? pos : neg).push_back(i);
  if (opt.balance && !pos.empty() && !neg.empty()) {
    Rng rng(derive_seed(opt.seed, kInputBalanceStream));
    const std::size_t m = std::min(pos.size(), neg.size());
    pos = take(std::move(pos), m, rng);
    neg = take(std::move(neg), m, rng);
  }
  pos.insert(pos.end(), neg.begin(), neg.end());
  std::sort(pos.begin(), pos.end());
  for (std::size_t i : pos) out.train.push_back(std::move(input[i]));
}

nn::SequenceRefs refs_of(const std::vector<TokenSequence>& seqs) {
  nn::SequenceRefs out;
  for (const auto& s : seqs) out.push_back(&s);
  return out;
}

TokenSequence group_sequence(const OOModel& model, const OOSample& s) {
  if (s.group.size() + 2 > model.encoder.max_len)
    throw UsageError("object group longer than the model's max_len");
  return encode_single(model.vocab, s.group, s.group.size() + 2, "object group");
}

void check_checkpoint(const Checkpoint& ckpt, Side side, const Vocab& vocab) {
  if (ckpt.header.value("kind", std::string()) != "pretrain")
    throw DataError("not a pre-training checkpoint");
  const Vocab stored = checkpoint_vocab(ckpt);
  if (stored.side() != side)
    throw DataError(std::string("expected a checkpoint of the ") + to_string(side) + " model");
  if (!(stored == vocab))
    throw DataError(std::string("checkpoint ") + to_string(side) +
                    " vocabulary does not match the input network");
}

std::size_t encoder_tensor_count(const nn::EncoderConfig& cfg) {
  nn::ParamSet<float> p;
  nn::add_encoder_params(p, nn::kEncoderPrefix, cfg);
  return p.tensors().size();
}

template <class Loss>
std::vector<double> train_loop(nn::ParamSet<float>& params, std::size_t n,
                               const FinetuneOptions& opt, Loss&& loss) {
  if (n == 0) throw UsageError("no fine-tuning samples");
  if (opt.batch_size == 0) throw UsageError("batch size must be positive");
  nn::Adam<float> adam(params, opt.adam);
  nn::ParamSet<float> grads = params.zeros_like();
  std::vector<std::size_t> order(n);
  std::vector<double> curve;
  for (std::size_t epoch = 1; epoch <= opt.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::uint64_t epoch_seed = derive_seed(opt.seed, epoch);
    Rng shuffle(derive_seed(epoch_seed, kShuffleStream));
    shuffle.shuffle(order);
    double total = 0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n; start += opt.batch_size, ++batch_index) {
      const std::size_t end = std::min(n, start + opt.batch_size);
      const std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                           order.begin() + static_cast<std::ptrdiff_t>(end));
      grads.set_zero();
      const std::uint64_t dropout_seed =
          derive_seed(derive_seed(epoch_seed, kDropoutStream), batch_index);
      const double l = loss(batch, grads, dropout_seed);
      if (!std::isfinite(l))
        throw DivergenceError("fine-tuning loss became non-finite in epoch " + std::to_string(epoch));
      adam.step(params, grads);
      total += l * static_cast<double>(batch.size());
    }
    if (!params.all_finite())
      throw DivergenceError("fine-tuning parameters became non-finite in epoch " +
                            std::to_string(epoch));
    curve.push_back(total / static_cast<double>(n));
  }
  return curve;
}

std::string format_score(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

std::vector<OOSample> oo_candidates(const SplitPair& split, std::size_t max_group,
                                    std::size_t max_candidates) {
  if (max_group < 2) throw UsageError("maximal group length must be >= 2");
  const BipartiteContext& in = split.input;
  const std::size_t n = in.num_objects();
  std::size_t total = 0;
  for (std::size_t k = 2; k <= max_group; ++k) total = std::min(total + choose(n, k), std::numeric_limits<std::size_t>::max() / 2);
  if (total > max_candidates)
    throw BudgetExceeded("object groups up to size " + std::to_string(max_group) + " over " +
                             std::to_string(n) + " objects exceed the candidate budget of " +
                             std::to_string(max_candidates),
                         0);

  const IncidenceMatrix input_inc(in);
  const IncidenceMatrix target_inc(split.target);
  const IdAlignment align = align_by_label(in, split.target);
  std::vector<OOSample> out;
  std::vector<ObjectId> group;
  std::vector<Bitset> prefix;  // prefix[i] = attributes common to group[0..i]

  auto visit = [&](auto&& self, ObjectId next) -> void {
    if (group.size() >= 2 && prefix.back().none()) {
      OOSample s;
      s.group = group;
      Bitset common;
      bool mapped = true;
      for (std::size_t i = 0; i < group.size() && mapped; ++i) {
        const auto t = align.objects[group[i]];
        if (!t) {
          mapped = false;
        } else if (i == 0) {
          common = target_inc.row(*t);
        } else {
          common &= target_inc.row(*t);
        }
      }
      s.label = mapped && !common.none() ? 1 : 0;
      out.push_back(std::move(s));
    }
    if (group.size() == max_group) return;
    for (ObjectId g = next; g < n; ++g) {
      group.push_back(g);
      if (prefix.empty()) {
        prefix.push_back(input_inc.row(g));
      } else {
        Bitset b = prefix.back();
        b &= input_inc.row(g);
        prefix.push_back(std::move(b));
      }
      self(self, g + 1);
      group.pop_back();
      prefix.pop_back();
    }
  };
  visit(visit, 0);
  return out;
}

std::vector<OASample> oa_candidates(const SplitPair& split) {
  const BipartiteContext& in = split.input;
  const IdAlignment align = align_by_label(in, split.target);
  std::vector<OASample> out;
  for (ObjectId u = 0; u < in.num_objects(); ++u)
    for (AttributeId v = 0; v < in.num_attributes(); ++v) {
      if (in.has_edge(u, v)) continue;
      const auto tu = align.objects[u];
      const auto tv = align.attributes[v];
      out.push_back({u, v, tu && tv && split.target.has_edge(*tu, *tv) ? 1 : 0});
    }
  return out;
}

const char* to_string(TrainSource source) {
  switch (source) {
    case TrainSource::kCandidates: return "candidates";
    case TrainSource::kInput: return "input";
    case TrainSource::kBoth: return "both";
  }
  return "candidates";
}

TrainSource train_source_from_string(const std::string& s) {
  if (s == "candidates") return TrainSource::kCandidates;
  if (s == "input") return TrainSource::kInput;
  if (s == "both") return TrainSource::kBoth;
  throw UsageError("unknown training source '" + s + "' (expected candidates, input or both)");
}

std::vector<OOSample> oo_input_samples(const BipartiteContext& input, std::size_t max_group,
                                       std::size_t max_candidates) {
  if (max_group < 2) throw UsageError("maximal group length must be >= 2");
  const std::size_t n = input.num_objects();
  std::size_t total = 0;
  for (std::size_t k = 2; k <= max_group; ++k) total = std::min(total + choose(n, k), std::numeric_limits<std::size_t>::max() / 2);
  if (total > max_candidates)
    throw BudgetExceeded("object groups up to size " + std::to_string(max_group) + " over " +
                             std::to_string(n) + " objects exceed the candidate budget of " +
                             std::to_string(max_candidates),
                         0);
  const IncidenceMatrix inc(input);
  std::vector<OOSample> out;
  std::vector<ObjectId> group;
  std::vector<Bitset> prefix;
  auto visit = [&](auto&& self, ObjectId next) -> void {
    if (group.size() >= 2) out.push_back({group, prefix.back().none() ? 0 : 1});
    if (group.size() == max_group) return;
    for (ObjectId g = next; g < n; ++g) {
      group.push_back(g);
      Bitset b = inc.row(g);
      if (!prefix.empty()) b &= prefix.back();
      prefix.push_back(std::move(b));
      self(self, g + 1);
      group.pop_back();
      prefix.pop_back();
    }
  };
  visit(visit, 0);
  return out;
}

std::vector<OASample> oa_input_samples(const BipartiteContext& input) {
  std::vector<OASample> out;
  out.reserve(input.num_objects() * input.num_attributes());
  for (ObjectId u = 0; u < input.num_objects(); ++u)
    for (AttributeId v = 0; v < input.num_attributes(); ++v)
      out.push_back({u, v, input.has_edge(u, v) ? 1 : 0});
  return out;
}

SampleSplit<OOSample> gen_oo_samples(const SplitPair& split, const OOSampleOptions& options) {
  auto out = split_samples(oo_candidates(split, options.max_group, options.max_candidates), options);
  if (options.train_source != TrainSource::kCandidates)
    add_input_samples(out, oo_input_samples(split.input, options.max_group, options.max_candidates), options);
  return out;
}

SampleSplit<OASample> gen_oa_samples(const SplitPair& split, const SampleOptions& options) {
  auto out = split_samples(oa_candidates(split), options);
  add_input_samples(out, oa_input_samples(split.input), options);
  return out;
}

OOModel init_oo_model(const Checkpoint* object_ckpt, const Vocab& vocab,
                      const nn::EncoderConfig& fallback, std::uint64_t seed) {
  OOModel m;
  m.vocab = vocab;
  if (object_ckpt) {
    check_checkpoint(*object_ckpt, Side::kObject, vocab);
    m.encoder = checkpoint_encoder(*object_ckpt);
  } else {
    m.encoder = fallback;
    m.encoder.vocab_size = vocab.size();
  }
  m.params = nn::make_oo_params<float>(m.encoder, seed);
  if (object_ckpt) {
    const std::size_t copied =
        m.params.copy_prefixed(object_ckpt->params, nn::kEncoderPrefix, nn::kEncoderPrefix);
    if (copied != encoder_tensor_count(m.encoder))
      throw DataError("pre-training checkpoint is missing encoder tensors");
    m.pretrained = true;
  }
  return m;
}

OAModel init_oa_model(const Checkpoint* object_ckpt, const Checkpoint* attribute_ckpt,
                      const Vocab& object_vocab, const Vocab& attribute_vocab,
                      const nn::EncoderConfig& fallback, std::uint64_t seed) {
  if ((object_ckpt == nullptr) != (attribute_ckpt == nullptr))
    throw UsageError("the twin-tower model needs both pre-trained checkpoints or neither");
  OAModel m;
  m.object_vocab = object_vocab;
  m.attribute_vocab = attribute_vocab;
  if (object_ckpt) {
    check_checkpoint(*object_ckpt, Side::kObject, object_vocab);
    check_checkpoint(*attribute_ckpt, Side::kAttribute, attribute_vocab);
    m.object_encoder = checkpoint_encoder(*object_ckpt);
    m.attribute_encoder = checkpoint_encoder(*attribute_ckpt);
  } else {
    m.object_encoder = fallback;
    m.object_encoder.vocab_size = object_vocab.size();
    m.attribute_encoder = fallback;
    m.attribute_encoder.vocab_size = attribute_vocab.size();
  }
  m.params = nn::make_oa_params<float>(m.object_encoder, m.attribute_encoder, seed);
  if (object_ckpt) {
    const std::size_t a = m.params.copy_prefixed(object_ckpt->params, nn::kEncoderPrefix,
                                                 nn::kObjectTowerPrefix);
    const std::size_t b = m.params.copy_prefixed(attribute_ckpt->params, nn::kEncoderPrefix,
                                                 nn::kAttributeTowerPrefix);
    if (a != encoder_tensor_count(m.object_encoder) ||
        b != encoder_tensor_count(m.attribute_encoder))
      throw DataError("pre-training checkpoint is missing encoder tensors");
    m.pretrained = true;
  }
  return m;
}

void finetune_oo(OOModel& model, const std::vector<OOSample>& samples,
                 const FinetuneOptions& options) {
  std::vector<TokenSequence> seqs;
  for (const auto& s : samples) seqs.push_back(group_sequence(model, s));
  auto curve = train_loop(model.params, samples.size(), options,
                          [&](const std::vector<std::size_t>& batch, nn::ParamSet<float>& grads,
                              std::uint64_t dropout_seed) {
                            nn::SequenceRefs refs;
                            std::vector<int> labels;
                            for (std::size_t i : batch) {
                              refs.push_back(&seqs[i]);
                              labels.push_back(samples[i].label);
                            }
                            const nn::DropoutPlan plan{model.encoder.dropout, dropout_seed};
                            return nn::oo_loss<float>(model.params, model.encoder, refs, labels,
                                                      &grads, &plan);
                          });
  model.loss_curve.insert(model.loss_curve.end(), curve.begin(), curve.end());
}

void finetune_oa(OAModel& model, const std::vector<OASample>& samples,
                 const FinetuneOptions& options) {
  std::vector<TokenSequence> objects, attributes;
  for (const auto& s : samples) {
    objects.push_back(encode_single(model.object_vocab, {s.object}, 3, "object"));
    attributes.push_back(encode_single(model.attribute_vocab, {s.attribute}, 3, "attribute"));
  }
  auto curve = train_loop(model.params, samples.size(), options,
                          [&](const std::vector<std::size_t>& batch, nn::ParamSet<float>& grads,
                              std::uint64_t dropout_seed) {
                            nn::SequenceRefs o, a;
                            std::vector<int> labels;
                            for (std::size_t i : batch) {
                              o.push_back(&objects[i]);
                              a.push_back(&attributes[i]);
                              labels.push_back(samples[i].label);
                            }
                            const nn::DropoutPlan plan{model.object_encoder.dropout, dropout_seed};
                            return nn::oa_loss<float>(model.params, model.object_encoder,
                                                      model.attribute_encoder, o, a, labels,
                                                      &grads, &plan);
                          });
  model.loss_curve.insert(model.loss_curve.end(), curve.begin(), curve.end());
}

std::vector<double> score_oo(const OOModel& model, const std::vector<OOSample>& samples,
                             std::size_t batch_size) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    std::vector<TokenSequence> seqs;
    for (std::size_t i = start; i < std::min(samples.size(), start + batch_size); ++i)
      seqs.push_back(group_sequence(model, samples[i]));
    const auto p = nn::oo_probabilities<float>(model.params, model.encoder, refs_of(seqs));
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<double> score_oa(const OAModel& model, const std::vector<OASample>& samples,
                             std::size_t batch_size) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    std::vector<TokenSequence> o, a;
    for (std::size_t i = start; i < std::min(samples.size(), start + batch_size); ++i) {
      o.push_back(encode_single(model.object_vocab, {samples[i].object}, 3, "object"));
      a.push_back(encode_single(model.attribute_vocab, {samples[i].attribute}, 3, "attribute"));
    }
    const auto p = nn::oa_probabilities<float>(model.params, model.object_encoder,
                                               model.attribute_encoder, refs_of(o), refs_of(a));
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

Checkpoint to_checkpoint(const OOModel& model) {
  Checkpoint c;
  c.header = {{"kind", "oo"},
              {"encoder", model.encoder.to_json()},
              {"vocab", model.vocab.to_json()},
              {"pretrained", model.pretrained}};
  c.params = model.params;
  return c;
}

Checkpoint to_checkpoint(const OAModel& model) {
  Checkpoint c;
  c.header = {{"kind", "oa"},
              {"object_encoder", model.object_encoder.to_json()},
              {"attribute_encoder", model.attribute_encoder.to_json()},
              {"object_vocab", model.object_vocab.to_json()},
              {"attribute_vocab", model.attribute_vocab.to_json()},
              {"pretrained", model.pretrained}};
  c.params = model.params;
  return c;
}

OOModel oo_model_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.header.value("kind", std::string()) != "oo")
    throw DataError("not an object-object model checkpoint");
  OOModel m;
  m.encoder = nn::EncoderConfig::from_json(ckpt.header.at("encoder"));
  m.vocab = Vocab::from_json(ckpt.header.at("vocab"));
  m.pretrained = ckpt.header.value("pretrained", false);
  m.params = ckpt.params;
  return m;
}

OAModel oa_model_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.header.value("kind", std::string()) != "oa")
    throw DataError("not an object-attribute model checkpoint");
  OAModel m;
  m.object_encoder = nn::EncoderConfig::from_json(ckpt.header.at("object_encoder"));
  m.attribute_encoder = nn::EncoderConfig::from_json(ckpt.header.at("attribute_encoder"));
  m.object_vocab = Vocab::from_json(ckpt.header.at("object_vocab"));
  m.attribute_vocab = Vocab::from_json(ckpt.header.at("attribute_vocab"));
  m.pretrained = ckpt.header.value("pretrained", false);
  m.params = ckpt.params;
  return m;
}

void PredictionReport::sort() {
  std::sort(rows.begin(), rows.end(), [](const PredictionRow& a, const PredictionRow& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.candidate < b.candidate;
  });
}

metrics::ScoredSet PredictionReport::scored() const {
  metrics::ScoredSet s;
  for (const auto& r : rows) {
    if (!r.label) continue;
    s.scores.push_back(r.score);
    s.labels.push_back(*r.label);
  }
  return s;
}

std::string PredictionReport::to_csv() const {
  std::string out = "candidate,score,label\n";
  for (const auto& r : rows) {
    out += detail::quote_csv(r.candidate);
    out += ',';
    out += format_score(r.score);
    out += ',';
    if (r.label) out += std::to_string(*r.label);
    out += '\n';
  }
  return out;
}

PredictionReport PredictionReport::from_csv(std::string_view text) {
  PredictionReport rep;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto f = detail::split_record(line, ',', line_no);
    if (line_no == 1 && !f.empty() && f[0] == "candidate") continue;
    if (f.size() != 3)
      throw DataError("line " + std::to_string(line_no) + ": expected candidate,score,label");
    PredictionRow row;
    row.candidate = f[0];
    const auto r = std::from_chars(f[1].data(), f[1].data() + f[1].size(), row.score);
    if (r.ec != std::errc() || r.ptr != f[1].data() + f[1].size())
      throw DataError("line " + std::to_string(line_no) + ": bad score '" + f[1] + "'");
    if (f[2] == "0" || f[2] == "1") {
      row.label = f[2] == "1" ? 1 : 0;
    } else if (!f[2].empty()) {
      throw DataError("line " + std::to_string(line_no) + ": label must be 0, 1 or empty");
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

void PredictionReport::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path.string());
  out << to_csv();
}

PredictionReport PredictionReport::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_csv(ss.str());
}

std::string oo_candidate_key(const BipartiteContext& input, const OOSample& s) {
  std::string key;
  for (std::size_t i = 0; i < s.group.size(); ++i) {
    if (i) key += '|';
    key += input.object_label(s.group[i]);
  }
  return key;
}

std::string oa_candidate_key(const BipartiteContext& input, const OASample& s) {
  return input.object_label(s.object) + '|' + input.attribute_label(s.attribute);
}

PredictionReport predict_oo(const OOModel& model, const BipartiteContext& input,
                            const std::vector<OOSample>& candidates) {
  PredictionReport rep;
  const auto scores = score_oo(model, candidates);
  for (std::size_t i = 0; i < candidates.size(); ++i)
    rep.rows.push_back({oo_candidate_key(input, candidates[i]), scores[i], candidates[i].label});
  rep.sort();
  return rep;
}

PredictionReport predict_oa(const OAModel& model, const BipartiteContext& input,
                            const std::vector<OASample>& candidates) {
  PredictionReport rep;
  const auto scores = score_oa(model, candidates);
  for (std::size_t i = 0; i < candidates.size(); ++i)
    rep.rows.push_back({oa_candidate_key(input, candidates[i]), scores[i], candidates[i].label});
  rep.sort();
  return rep;
}

}  // namespace fcalink
