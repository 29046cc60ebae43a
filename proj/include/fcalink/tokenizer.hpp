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
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fcalink/context.hpp"
#include "fcalink/rng.hpp"

namespace fcalink {

enum class Side { kObject, kAttribute };
const char* to_string(Side side);
Side side_from_string(const std::string& s);

using TokenId = std::int32_t;

// Special tokens occupy the first vocabulary slots; entity e maps to e + 4.
inline constexpr TokenId kPad = 0;
inline constexpr TokenId kCls = 1;
inline constexpr TokenId kSep = 2;
inline constexpr TokenId kMask = 3;
inline constexpr TokenId kNumSpecials = 4;
inline constexpr TokenId kIgnoreLabel = -1;

class Vocab {
 public:
  Vocab() = default;
  Vocab(Side side, std::vector<std::string> labels) : side_(side), labels_(std::move(labels)) {}

  static Vocab objects_of(const BipartiteContext& ctx);
  static Vocab attributes_of(const BipartiteContext& ctx);

  Side side() const noexcept { return side_; }
  std::size_t num_entities() const noexcept { return labels_.size(); }
  std::size_t size() const noexcept { return labels_.size() + kNumSpecials; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  TokenId token(std::uint32_t entity) const;
  std::uint32_t entity(TokenId token) const;
  static bool is_special(TokenId t) noexcept { return t < kNumSpecials; }

  // {"side": ..., "specials": {...}, "tokens": {label: id, ...}}
  nlohmann::json to_json() const;
  static Vocab from_json(const nlohmann::json& j);

  friend bool operator==(const Vocab&, const Vocab&) = default;

 private:
  Side side_ = Side::kObject;
  std::vector<std::string> labels_;
};

// One encoder input of fixed length.
struct TokenSequence {
  std::vector<TokenId> ids;
  std::vector<std::uint8_t> segments;    // 0 through the first [SEP], 1 after
  std::vector<std::uint8_t> attention;   // 1 = real token, 0 = [PAD]
  std::vector<TokenId> mtp_labels;       // kIgnoreLabel except at masked positions

  std::size_t length() const noexcept { return ids.size(); }
  std::size_t real_length() const noexcept;
  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

// `[CLS] s1… [SEP] s2… [SEP] [PAD]…`, entities ascending. Throws UsageError
// naming `what` when the payload does not fit in max_len.
TokenSequence encode_pair(const Vocab& vocab, std::vector<std::uint32_t> first,
                          std::vector<std::uint32_t> second, std::size_t max_len,
                          const std::string& what = "sequence pair");

// `[CLS] s… [SEP] [PAD]…` with every segment 0.
TokenSequence encode_single(const Vocab& vocab, std::vector<std::uint32_t> entities,
                            std::size_t max_len, const std::string& what = "sequence");

struct MaskStats {
  std::size_t selected = 0;
  std::size_t masked = 0;     // replaced by [MASK]
  std::size_t randomized = 0; // replaced by a uniformly drawn entity
  std::size_t kept = 0;       // left unchanged
};

// Selects ceil(mask_rate * #entity tokens) entity positions uniformly; each
// becomes [MASK] with probability 0.8, a random entity with 0.1, or stays
// with 0.1. Labels hold the original token at selected positions.
TokenSequence apply_mtp_mask(const TokenSequence& seq, double mask_rate, std::size_t num_entities,
                             Rng& rng, MaskStats* stats = nullptr);
TokenSequence apply_mtp_mask(const TokenSequence& seq, double mask_rate, std::size_t num_entities,
                             std::uint64_t seed, MaskStats* stats = nullptr);

// Replaces selected positions by their labels and clears the labels.
TokenSequence unmask(const TokenSequence& seq);

// max_len = 2 * longest + 3, clamped to `cap`.
std::size_t default_pair_length(std::size_t longest_set, std::size_t cap = 128);

// Binary batch file: magic "FLTB", version, count, max_len, then per sequence
// ids/labels as int32 and segments/attention as uint8, plus one int32 target
// per sequence. Little-endian.
void write_batch_file(const std::filesystem::path& path, const std::vector<TokenSequence>& seqs,
                      const std::vector<std::int32_t>& targets);
void read_batch_file(const std::filesystem::path& path, std::vector<TokenSequence>& seqs,
                     std::vector<std::int32_t>& targets);

}  // namespace fcalink
