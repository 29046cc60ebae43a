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

#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace fcalink {

// Fixed-size set of small integers packed into 64-bit words. Bits past
// size() are always zero, so word-wise comparisons and hashes are exact.
class Bitset {
 public:
  using Word = std::uint64_t;
  static constexpr std::size_t kWordBits = 64;

  Bitset() = default;
  explicit Bitset(std::size_t size, bool filled = false)
      : size_(size), words_((size + kWordBits - 1) / kWordBits, filled ? ~Word{0} : Word{0}) {
    trim();
  }

  std::size_t size() const noexcept { return size_; }
  std::size_t word_count() const noexcept { return words_.size(); }
  const Word* words() const noexcept { return words_.data(); }

  bool test(std::size_t i) const { return (words_[i / kWordBits] >> (i % kWordBits)) & 1U; }
  void set(std::size_t i) { words_[i / kWordBits] |= Word{1} << (i % kWordBits); }
  void reset(std::size_t i) { words_[i / kWordBits] &= ~(Word{1} << (i % kWordBits)); }

  void fill() {
    for (auto& w : words_) w = ~Word{0};
    trim();
  }
  void clear() {
    for (auto& w : words_) w = 0;
  }

  std::size_t count() const noexcept {
    std::size_t n = 0;
    for (Word w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }
  bool none() const noexcept {
    for (Word w : words_)
      if (w != 0) return false;
    return true;
  }

  Bitset& operator&=(const Bitset& o) {
    for (std::size_t k = 0; k < words_.size(); ++k) words_[k] &= o.words_[k];
    return *this;
  }
  Bitset& operator|=(const Bitset& o) {
    for (std::size_t k = 0; k < words_.size(); ++k) words_[k] |= o.words_[k];
    return *this;
  }
  friend Bitset operator&(Bitset a, const Bitset& b) { return a &= b; }
  friend Bitset operator|(Bitset a, const Bitset& b) { return a |= b; }

  // this ⊆ o
  bool is_subset_of(const Bitset& o) const noexcept {
    for (std::size_t k = 0; k < words_.size(); ++k)
      if (words_[k] & ~o.words_[k]) return false;
    return true;
  }
  bool intersects(const Bitset& o) const noexcept {
    for (std::size_t k = 0; k < words_.size(); ++k)
      if (words_[k] & o.words_[k]) return true;
    return false;
  }

  // True when this and o agree on every bit below `limit`.
  bool equal_below(const Bitset& o, std::size_t limit) const noexcept {
    const std::size_t full = limit / kWordBits;
    for (std::size_t k = 0; k < full; ++k)
      if (words_[k] != o.words_[k]) return false;
    const std::size_t rest = limit % kWordBits;
    if (rest == 0) return true;
    const Word mask = (Word{1} << rest) - 1;
    return ((words_[full] ^ o.words_[full]) & mask) == 0;
  }

  // Calls f(i) for every set bit in ascending order.
  template <class F>
  void for_each(F&& f) const {
    for (std::size_t k = 0; k < words_.size(); ++k) {
      Word w = words_[k];
      while (w) {
        const auto bit = static_cast<std::size_t>(std::countr_zero(w));
        f(k * kWordBits + bit);
        w &= w - 1;
      }
    }
  }

  std::vector<std::uint32_t> to_indices() const {
    std::vector<std::uint32_t> out;
    out.reserve(count());
    for_each([&](std::size_t i) { out.push_back(static_cast<std::uint32_t>(i)); });
    return out;
  }

  template <class Range>
  static Bitset from_indices(std::size_t size, const Range& indices) {
    Bitset b(size);
    for (auto i : indices) b.set(static_cast<std::size_t>(i));
    return b;
  }

  friend bool operator==(const Bitset& a, const Bitset& b) {
    return a.size_ == b.size_ && a.words_ == b.words_;
  }

  // Lexicographic order of the ascending index lists ({0,5} < {1}; a proper
  // prefix sorts first). Both operands must have the same size().
  friend bool lex_less(const Bitset& a, const Bitset& b) {
    const std::size_t n = a.words_.size();
    for (std::size_t k = 0; k < n; ++k) {
      const Word diff = a.words_[k] ^ b.words_[k];
      if (diff == 0) continue;
      const Word low = diff & (~diff + 1);
      const Word above = ~(low | (low - 1));
      const bool a_has = (a.words_[k] & low) != 0;
      const Bitset& other = a_has ? b : a;
      bool other_continues = (other.words_[k] & above) != 0;
      for (std::size_t j = k + 1; j < n && !other_continues; ++j) other_continues = other.words_[j] != 0;
      // The set holding the differing index wins unless the other set ends there.
      return a_has ? other_continues : !other_continues;
    }
    return false;
  }

  std::size_t hash() const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ size_;
    for (Word w : words_) {
      h ^= w;
      h *= 0x100000001b3ULL;
      h ^= h >> 29;
    }
    return static_cast<std::size_t>(h);
  }

 private:
  void trim() {
    const std::size_t rest = size_ % kWordBits;
    if (rest != 0 && !words_.empty()) words_.back() &= (Word{1} << rest) - 1;
  }

  std::size_t size_ = 0;
  std::vector<Word> words_;
};

struct BitsetHash {
  std::size_t operator()(const Bitset& b) const noexcept { return b.hash(); }
};

}  // namespace fcalink
