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

#include "fcalink/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "fcalink/error.hpp"

namespace fcalink::metrics {

std::size_t ScoredSet::positives() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

void ScoredSet::validate() const {
  if (scores.size() != labels.size()) throw UsageError("scores and labels differ in length");
  for (int y : labels)
    if (y != 0 && y != 1) throw UsageError("labels must be 0 or 1");
}

Confusion confusion(const ScoredSet& set, double threshold) {
  set.validate();
  Confusion c;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const bool predicted = set.scores[i] > threshold;
    if (set.labels[i] == 1)
      predicted ? ++c.tp : ++c.fn;
    else
      predicted ? ++c.fp : ++c.tn;
  }
  return c;
}

double f1_score(const Confusion& c) {
  if (c.tp == 0) return 0.0;
  const double tp = static_cast<double>(c.tp);
  const double precision = tp / (tp + static_cast<double>(c.fp));
  const double recall = tp / (tp + static_cast<double>(c.fn));
  return 2 * precision * recall / (precision + recall);
}

double sweep_threshold(int step) { return static_cast<double>(step) / kSweepSteps; }

BestF1 best_f1_sweep(const ScoredSet& set) {
  if (set.size() == 0) throw UsageError("cannot sweep an empty scored set");
  BestF1 best{-1.0, 0.0};
  for (int i = 0; i < kSweepSteps; ++i) {
    const double th = sweep_threshold(i);
    const double f1 = f1_score(confusion(set, th));
    if (f1 > best.f1) best = {f1, th};
  }
  return best;
}

namespace {

std::vector<std::size_t> descending_order(const ScoredSet& set) {
  std::vector<std::size_t> order(set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return set.scores[a] > set.scores[b]; });
  return order;
}

}  // namespace

double roc_auc(const ScoredSet& set) {
  set.validate();
  const std::size_t pos = set.positives();
  const std::size_t neg = set.size() - pos;
  if (pos == 0 || neg == 0) throw DataError("ROC AUC needs both positive and negative samples");
  // Walk tie groups from the top; each positive beats every negative below its
  // group and half of the negatives inside it. Counts are kept in halves.
  const auto order = descending_order(set);
  double halves = 0;
  std::size_t neg_below = neg;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::size_t gp = 0;
    std::size_t gn = 0;
    while (j < order.size() && set.scores[order[j]] == set.scores[order[i]]) {
      set.labels[order[j]] == 1 ? ++gp : ++gn;
      ++j;
    }
    neg_below -= gn;
    halves += static_cast<double>(gp) * static_cast<double>(2 * neg_below + gn);
    i = j;
  }
  return halves / 2.0 / (static_cast<double>(pos) * static_cast<double>(neg));
}

double aupr(const ScoredSet& set) {
  set.validate();
  const std::size_t pos = set.positives();
  if (pos == 0) throw DataError("AUPR needs at least one positive sample");
  const auto order = descending_order(set);
  double area = 0;
  double prev_recall = 0;
  std::size_t tp = 0;
  std::size_t seen = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && set.scores[order[j]] == set.scores[order[i]]) {
      tp += static_cast<std::size_t>(set.labels[order[j]] == 1);
      ++j;
    }
    seen = j;
    const double recall = static_cast<double>(tp) / static_cast<double>(pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(seen);
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return area;
}

Report evaluate(const ScoredSet& set) {
  Report r;
  r.n_pos = set.positives();
  r.n_neg = set.size() - r.n_pos;
  const BestF1 best = best_f1_sweep(set);
  r.f1 = best.f1;
  r.threshold = best.threshold;
  r.auc = roc_auc(set);
  r.aupr = aupr(set);
  return r;
}

nlohmann::json to_json(const Report& r) {
  return {{"f1", r.f1},     {"threshold", r.threshold}, {"auc", r.auc},
          {"aupr", r.aupr}, {"n_pos", r.n_pos},         {"n_neg", r.n_neg}};
}

}  // namespace fcalink::metrics
