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

#include "fcalink/error.hpp"
#include "fcalink/metrics.hpp"
#include "fcalink/rng.hpp"
#include "oracles.hpp"

using namespace fcalink;
using namespace fcalink::metrics;

namespace {

ScoredSet make(std::vector<double> s, std::vector<int> y) { return {std::move(s), std::move(y)}; }

ScoredSet random_set(Rng& rng, std::size_t n, bool coarse) {
  ScoredSet s;
  for (std::size_t i = 0; i < n; ++i) {
    // Coarse scores produce ties and values sitting exactly on the grid.
    s.scores.push_back(coarse ? static_cast<double>(rng.uniform_index(21)) / 20.0 : rng.uniform01());
    s.labels.push_back(static_cast<int>(rng.uniform_index(2)));
  }
  return s;
}

}  // namespace

TEST_CASE("confusion counts") {
  const auto c = confusion(make({0.9, 0.1}, {1, 0}), 0.5);
  CHECK(c.tp == 1);
  CHECK(c.tn == 1);
  CHECK(c.fp == 0);
  CHECK(c.fn == 0);
  const auto all_neg = confusion(make({0.9, 1.0, 0.2}, {1, 1, 0}), 1.0);
  CHECK(all_neg.tp + all_neg.fp == 0);
  const auto tie = confusion(make({0.6, 0.6}, {1, 0}), 0.55);
  CHECK(tie.tp == 1);
  CHECK(tie.fp == 1);
}

TEST_CASE("threshold sweep") {
  const auto b = best_f1_sweep(make({0.9, 0.6, 0.2}, {1, 1, 0}));
  CHECK(b.f1 == 1.0);
  CHECK(b.threshold == 0.2);  // first grid point above 0.2 and below 0.6
  const auto all_pos = best_f1_sweep(make({0.3, 0.7, 0.01}, {1, 1, 1}));
  CHECK(all_pos.f1 == 1.0);
  CHECK(all_pos.threshold == 0.0);
  // Perfect anti-correlation: predicting everything positive is best.
  const auto anti = best_f1_sweep(make({0.1, 0.2, 0.8, 0.9}, {1, 1, 0, 0}));
  CHECK(anti.threshold == 0.0);
  CHECK(anti.f1 == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(best_f1_sweep(ScoredSet{}), UsageError);
}

TEST_CASE("ROC AUC") {
  CHECK(roc_auc(make({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0})) == 1.0);
  CHECK(roc_auc(make({0.9, 0.8, 0.4, 0.3}, {1, 0, 1, 0})) == 0.75);
  CHECK(roc_auc(make({0.5, 0.5, 0.5}, {1, 0, 0})) == 0.5);
  CHECK_THROWS_AS(roc_auc(make({0.1, 0.2}, {1, 1})), DataError);
  Rng rng(5);
  ScoredSet big;
  for (int i = 0; i < 20000; ++i) {
    big.scores.push_back(rng.uniform01());
    big.labels.push_back(static_cast<int>(rng.uniform_index(2)));
  }
  CHECK(std::abs(roc_auc(big) - 0.5) < 0.02);
}

TEST_CASE("AUPR") {
  CHECK(aupr(make({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0})) == 1.0);
  CHECK(aupr(make({0.5, 0.5, 0.5, 0.5}, {1, 0, 0, 0})) == 0.25);
  const auto s = make({0.9, 0.8, 0.4, 0.3}, {1, 0, 1, 0});
  CHECK(aupr(s) == oracle::average_precision(s.scores, s.labels));
  CHECK(aupr(s) == doctest::Approx(0.5 * 1.0 + 0.5 * (2.0 / 3.0)));
  CHECK_THROWS_AS(aupr(make({0.1, 0.2}, {0, 0})), DataError);
}

TEST_CASE("metrics agree with the brute-force oracles") {
  Rng rng(77);
  for (int trial = 0; trial < 400; ++trial) {
    const auto s = random_set(rng, 2 + rng.uniform_index(49), trial % 2 == 0);
    const auto bf = oracle::best_f1(s.scores, s.labels);
    const auto got = best_f1_sweep(s);
    CHECK(got.f1 == bf.first);
    CHECK(got.threshold == bf.second);
    if (s.positives() == 0 || s.negatives() == 0) continue;
    CHECK(roc_auc(s) == oracle::pairwise_auc(s.scores, s.labels));
    CHECK(aupr(s) == oracle::average_precision(s.scores, s.labels));
  }
}

TEST_CASE("metrics depend only on the multiset of samples") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    auto s = random_set(rng, 30, true);
    if (s.positives() == 0 || s.negatives() == 0) continue;
    const auto before = evaluate(s);
    std::vector<std::size_t> idx(s.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    rng.shuffle(idx);
    ScoredSet t;
    for (auto i : idx) {
      t.scores.push_back(s.scores[i]);
      t.labels.push_back(s.labels[i]);
    }
    const auto after = evaluate(t);
    CHECK(to_json(before) == to_json(after));
  }
}

TEST_CASE("report JSON keys") {
  const auto j = to_json(evaluate(make({0.9, 0.1}, {1, 0})));
  for (const char* k : {"f1", "threshold", "auc", "aupr", "n_pos", "n_neg"}) CHECK(j.contains(k));
}
