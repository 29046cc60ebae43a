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

#include "fcalink/tokenizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "fcalink/error.hpp"

namespace fcalink {

const char* to_string(Side side) { return side == Side::kObject ? "object" : "attribute"; }

Side side_from_string(const std::string& s) {
  if (s == "object") return Side::kObject;
  if (s == "attribute") return Side::kAttribute;
  throw UsageError("unknown side '" + s + "' (expected object or attribute)");
}

Vocab Vocab::objects_of(const BipartiteContext& ctx) {
  return Vocab(Side::kObject, ctx.object_labels());
}

Vocab Vocab::attributes_of(const BipartiteContext& ctx) {
  return Vocab(Side::kAttribute, ctx.attribute_labels());
}

TokenId Vocab::token(std::uint32_t entity) const {
  if (entity >= labels_.size())
    throw UsageError("entity id " + std::to_string(entity) + " outside the vocabulary");
  return static_cast<TokenId>(entity) + kNumSpecials;
}

std::uint32_t Vocab::entity(TokenId token) const {
  if (token < kNumSpecials || static_cast<std::size_t>(token) >= size())
    throw UsageError("token " + std::to_string(token) + " is not an entity");
  return static_cast<std::uint32_t>(token - kNumSpecials);
}

nlohmann::json Vocab::to_json() const {
  nlohmann::json tokens = nlohmann::json::object();
  for (std::size_t i = 0; i < labels_.size(); ++i)
    tokens[labels_[i]] = static_cast<TokenId>(i) + kNumSpecials;
  return {{"side", fcalink::to_string(side_)},
          {"specials", {{"[PAD]", kPad}, {"[CLS]", kCls}, {"[SEP]", kSep}, {"[MASK]", kMask}}},
          {"tokens", tokens}};
}

Vocab Vocab::from_json(const nlohmann::json& j) {
  try {
    const Side side = side_from_string(j.at("side").get<std::string>());
    const auto& tokens = j.at("tokens");
    std::vector<std::string> labels(tokens.size());
    std::vector<bool> seen(tokens.size(), false);
    for (auto it = tokens.begin(); it != tokens.end(); ++it) {
      const auto id = it.value().get<TokenId>() - kNumSpecials;
      if (id < 0 || static_cast<std::size_t>(id) >= labels.size() || seen[id])
        throw DataError("vocabulary ids are not a dense range");
      labels[id] = it.key();
      seen[id] = true;
    }
    return Vocab(side, std::move(labels));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed vocabulary: ") + e.what());
  }
}

std::size_t TokenSequence::real_length() const noexcept {
  std::size_t n = 0;
  for (auto a : attention) n += a;
  return n;
}

namespace {

TokenSequence blank(std::size_t max_len) {
  TokenSequence s;
  s.ids.assign(max_len, kPad);
  s.segments.assign(max_len, 0);
  s.attention.assign(max_len, 0);
  s.mtp_labels.assign(max_len, kIgnoreLabel);
  return s;
}

void canonical(std::vector<std::uint32_t>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

TokenSequence encode_pair(const Vocab& vocab, std::vector<std::uint32_t> first,
                          std::vector<std::uint32_t> second, std::size_t max_len,
                          const std::string& what) {
  canonical(first);
  canonical(second);
  const std::size_t needed = first.size() + second.size() + 3;
  if (needed > max_len)
    throw UsageError(what + " needs " + std::to_string(needed) + " tokens but max_len is " +
                     std::to_string(max_len));
  TokenSequence s = blank(max_len);
  std::size_t p = 0;
  auto put = [&](TokenId t, std::uint8_t seg) {
    s.ids[p] = t;
    s.segments[p] = seg;
    s.attention[p] = 1;
    ++p;
  };
  put(kCls, 0);
  for (auto e : first) put(vocab.token(e), 0);
  put(kSep, 0);
  for (auto e : second) put(vocab.token(e), 1);
  put(kSep, 1);
  for (std::size_t k = p; k < max_len; ++k) s.segments[k] = 1;
  return s;
}

TokenSequence encode_single(const Vocab& vocab, std::vector<std::uint32_t> entities,
                            std::size_t max_len, const std::string& what) {
  canonical(entities);
  const std::size_t needed = entities.size() + 2;
  if (needed > max_len)
    throw UsageError(what + " needs " + std::to_string(needed) + " tokens but max_len is " +
                     std::to_string(max_len));
  TokenSequence s = blank(max_len);
  std::size_t p = 0;
  s.ids[p] = kCls;
  s.attention[p++] = 1;
  for (auto e : entities) {
    s.ids[p] = vocab.token(e);
    s.attention[p++] = 1;
  }
  s.ids[p] = kSep;
  s.attention[p++] = 1;
  return s;
}

TokenSequence apply_mtp_mask(const TokenSequence& seq, double mask_rate, std::size_t num_entities,
                             Rng& rng, MaskStats* stats) {
  TokenSequence out = seq;
  std::vector<std::size_t> candidates;
  for (std::size_t p = 0; p < seq.ids.size(); ++p)
    if (seq.attention[p] && !Vocab::is_special(seq.ids[p])) candidates.push_back(p);
  if (mask_rate <= 0.0 || candidates.empty() || num_entities == 0) return out;
  const auto want = std::min(
      candidates.size(),
      static_cast<std::size_t>(std::ceil(mask_rate * static_cast<double>(candidates.size()))));
  for (std::size_t k : sample_without_replacement(candidates.size(), want, rng)) {
    const std::size_t p = candidates[k];
    out.mtp_labels[p] = seq.ids[p];
    const double u = rng.uniform01();
    if (u < 0.8) {
      out.ids[p] = kMask;
      if (stats) ++stats->masked;
    } else if (u < 0.9) {
      out.ids[p] = static_cast<TokenId>(rng.uniform_index(num_entities)) + kNumSpecials;
      if (stats) ++stats->randomized;
    } else {
      if (stats) ++stats->kept;
    }
    if (stats) ++stats->selected;
  }
  return out;
}

TokenSequence apply_mtp_mask(const TokenSequence& seq, double mask_rate, std::size_t num_entities,
                             std::uint64_t seed, MaskStats* stats) {
  Rng rng(seed);
  return apply_mtp_mask(seq, mask_rate, num_entities, rng, stats);
}

TokenSequence unmask(const TokenSequence& seq) {
  TokenSequence out = seq;
  for (std::size_t p = 0; p < out.ids.size(); ++p) {
    if (out.mtp_labels[p] != kIgnoreLabel) {
      out.ids[p] = out.mtp_labels[p];
      out.mtp_labels[p] = kIgnoreLabel;
    }
  }
  return out;
}

std::size_t default_pair_length(std::size_t longest_set, std::size_t cap) {
  return std::min(2 * longest_set + 3, cap);
}

// ---------------------------------------------------------------------------
// Binary batches

namespace {

constexpr char kBatchMagic[4] = {'F', 'L', 'T', 'B'};
constexpr std::uint32_t kBatchVersion = 1;

template <class T>
void put_le(std::ostream& out, T v) {
  unsigned char buf[sizeof(T)];
  auto u = static_cast<std::make_unsigned_t<T>>(v);
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(u >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T get_le(std::istream& in) {
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) throw DataError("truncated batch file");
  std::make_unsigned_t<T> u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    u |= static_cast<std::make_unsigned_t<T>>(buf[i]) << (8 * i);
  return static_cast<T>(u);
}

}  // namespace

void write_batch_file(const std::filesystem::path& path, const std::vector<TokenSequence>& seqs,
                      const std::vector<std::int32_t>& targets) {
  if (targets.size() != seqs.size()) throw UsageError("one target per sequence is required");
  const std::size_t max_len = seqs.empty() ? 0 : seqs.front().length();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out.write(kBatchMagic, 4);
  put_le<std::uint32_t>(out, kBatchVersion);
  put_le<std::uint64_t>(out, seqs.size());
  put_le<std::uint64_t>(out, max_len);
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    const auto& s = seqs[i];
    if (s.length() != max_len) throw UsageError("batch sequences differ in length");
    for (auto v : s.ids) put_le<std::int32_t>(out, v);
    for (auto v : s.segments) put_le<std::uint8_t>(out, v);
    for (auto v : s.attention) put_le<std::uint8_t>(out, v);
    for (auto v : s.mtp_labels) put_le<std::int32_t>(out, v);
    put_le<std::int32_t>(out, targets[i]);
  }
}

void read_batch_file(const std::filesystem::path& path, std::vector<TokenSequence>& seqs,
                     std::vector<std::int32_t>& targets) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kBatchMagic, 4) != 0)
    throw DataError("'" + path.string() + "' is not a batch file");
  if (get_le<std::uint32_t>(in) != kBatchVersion) throw DataError("unsupported batch version");
  const auto count = get_le<std::uint64_t>(in);
  const auto max_len = get_le<std::uint64_t>(in);
  seqs.assign(count, {});
  targets.assign(count, 0);
  for (std::size_t i = 0; i < count; ++i) {
    auto& s = seqs[i];
    s.ids.resize(max_len);
    s.segments.resize(max_len);
    s.attention.resize(max_len);
    s.mtp_labels.resize(max_len);
    for (auto& v : s.ids) v = get_le<std::int32_t>(in);
    for (auto& v : s.segments) v = get_le<std::uint8_t>(in);
    for (auto& v : s.attention) v = get_le<std::uint8_t>(in);
    for (auto& v : s.mtp_labels) v = get_le<std::int32_t>(in);
    targets[i] = get_le<std::int32_t>(in);
  }
}

}  // namespace fcalink
