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

#include <cmath>
#include <filesystem>

#include "fcalink/error.hpp"
#include "fcalink/tokenizer.hpp"

using namespace fcalink;

namespace {

Vocab vocab_of(std::size_t n, Side side = Side::kObject) {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i) labels.push_back("g" + std::to_string(i + 1));
  return Vocab(side, labels);
}

}  // namespace

TEST_CASE("vocabulary layout") {
  const Vocab v = vocab_of(3);
  CHECK(v.size() == 7);
  CHECK(v.token(0) == 4);
  CHECK(v.entity(6) == 2);
  CHECK(Vocab::is_special(kMask));
  CHECK_FALSE(Vocab::is_special(4));
  CHECK_THROWS_AS(v.token(3), UsageError);
  CHECK(Vocab::from_json(v.to_json()) == v);
  CHECK(v.to_json().at("specials").at("[PAD]") == 0);
}

TEST_CASE("pair encoding") {
  const Vocab v = vocab_of(5);
  const TokenId g1 = v.token(0), g2 = v.token(1), g3 = v.token(2);
  SUBCASE("layout and segments") {
    const auto s = encode_pair(v, {0, 1}, {2}, 8);
    CHECK(s.ids == std::vector<TokenId>{kCls, g1, g2, kSep, g3, kSep, kPad, kPad});
    CHECK(s.segments == std::vector<std::uint8_t>{0, 0, 0, 0, 1, 1, 1, 1});
    CHECK(s.attention == std::vector<std::uint8_t>{1, 1, 1, 1, 1, 1, 0, 0});
    CHECK(std::all_of(s.mtp_labels.begin(), s.mtp_labels.end(), [](TokenId t) { return t == kIgnoreLabel; }));
  }
  SUBCASE("empty sets") {
    const auto s = encode_pair(v, {}, {}, 5);
    CHECK(s.ids == std::vector<TokenId>{kCls, kSep, kSep, kPad, kPad});
  }
  SUBCASE("four plus three payload tokens") {
    const auto s = encode_pair(v, {0, 1, 2}, {3, 4}, 10);
    // [CLS] + three entities + [SEP] is the first segment: four zeros after [CLS].
    const std::vector<std::uint8_t> payload(s.segments.begin() + 1, s.segments.begin() + 8);
    CHECK(payload == std::vector<std::uint8_t>{0, 0, 0, 0, 1, 1, 1});
  }
  SUBCASE("input order does not matter") {
    CHECK(encode_pair(v, {2, 0, 1}, {4, 3}, 9) == encode_pair(v, {0, 1, 2}, {3, 4}, 9));
  }
  SUBCASE("overflow names the offender") {
    try {
      encode_pair(v, {0, 1, 2}, {3, 4}, 7, "concept pair (3, 9)");
      FAIL("expected overflow");
    } catch (const UsageError& e) {
      CHECK(std::string(e.what()).find("concept pair (3, 9)") != std::string::npos);
    }
  }
  SUBCASE("single layout") {
    const auto s = encode_single(v, {3}, 3);
    CHECK(s.ids == std::vector<TokenId>{kCls, v.token(3), kSep});
    CHECK(s.segments == std::vector<std::uint8_t>{0, 0, 0});
  }
  CHECK(default_pair_length(10) == 23);
  CHECK(default_pair_length(100) == 128);
}

TEST_CASE("masking") {
  const Vocab v = vocab_of(20);
  const auto seq = encode_pair(v, {0, 1, 2, 3, 4, 5}, {6, 7, 8, 9}, 16);
  SUBCASE("rate 0 changes nothing") {
    CHECK(apply_mtp_mask(seq, 0.0, 20, 3) == seq);
  }
  SUBCASE("selection count, specials untouched, unmask restores") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto m = apply_mtp_mask(seq, 0.15, 20, seed);
      std::size_t selected = 0;
      for (std::size_t i = 0; i < m.length(); ++i) {
        if (m.mtp_labels[i] != kIgnoreLabel) {
          ++selected;
          CHECK_FALSE(Vocab::is_special(seq.ids[i]));
          CHECK(m.mtp_labels[i] == seq.ids[i]);
        } else {
          CHECK(m.ids[i] == seq.ids[i]);
        }
      }
      CHECK(selected == 2);  // ceil(0.15 * 10)
      CHECK(unmask(m) == seq);
    }
  }
  SUBCASE("single entity at rate 1 reaches the [MASK] branch for some seed") {
    const auto one = encode_single(v, {5}, 3);
    bool found = false;
    for (std::uint64_t seed = 0; seed < 20 && !found; ++seed) {
      MaskStats st;
      const auto m = apply_mtp_mask(one, 1.0, 20, seed, &st);
      if (st.masked == 1) {
        CHECK(m.ids[1] == kMask);
        CHECK(m.mtp_labels[1] == v.token(5));
        found = true;
      }
    }
    CHECK(found);
  }
  SUBCASE("80/10/10 proportions") {
    MaskStats st;
    for (std::uint64_t seed = 0; seed < 6000; ++seed) apply_mtp_mask(seq, 0.2, 20, seed, &st);
    REQUIRE(st.selected >= 10000);
    const double n = static_cast<double>(st.selected);
    CHECK(std::abs(st.masked / n - 0.8) <= 0.02);
    CHECK(std::abs(st.randomized / n - 0.1) <= 0.02);
    CHECK(std::abs(st.kept / n - 0.1) <= 0.02);
  }
}

TEST_CASE("batch file round trip") {
  const Vocab v = vocab_of(9);
  std::vector<TokenSequence> seqs;
  std::vector<std::int32_t> targets;
  for (std::uint64_t s = 0; s < 5; ++s) {
    seqs.push_back(apply_mtp_mask(encode_pair(v, {0, 2, 4}, {1, 8}, 12), 0.3, 9, s));
    targets.push_back(static_cast<std::int32_t>(s % 2));
  }
  const auto path = std::filesystem::temp_directory_path() / "fcalink_batch.bin";
  write_batch_file(path, seqs, targets);
  std::vector<TokenSequence> back;
  std::vector<std::int32_t> back_targets;
  read_batch_file(path, back, back_targets);
  CHECK(back == seqs);
  CHECK(back_targets == targets);
  std::filesystem::remove(path);
}
