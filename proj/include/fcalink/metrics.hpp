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
#include <vector>

#include <nlohmann/json.hpp>

namespace fcalink::metrics {

// Scores in [0, 1] with parallel 0/1 labels.
struct ScoredSet {
  std::vector<double> scores;
  std::vector<int> labels;

  std::size_t size() const noexcept { return scores.size(); }
  std::size_t positives() const;
  std::size_t negatives() const { return size() - positives(); }
  void validate() const;
};

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
};

// A sample is predicted positive iff score > threshold.
Confusion confusion(const ScoredSet& set, double threshold);

// Harmonic mean of precision and recall; 0 when there are no true positives.
double f1_score(const Confusion& c);

// The sweep grid: thresholds i / 20 for i = 0..19.
inline constexpr int kSweepSteps = 20;
double sweep_threshold(int step);

struct BestF1 {
  double f1 = 0.0;
  double threshold = 0.0;
};

// Highest F1 over the grid; ties resolve to the smallest threshold.
BestF1 best_f1_sweep(const ScoredSet& set);

// Area under the ROC curve, equal to the probability that a random positive
// outranks a random negative (ties count one half). Needs both classes.
double roc_auc(const ScoredSet& set);

// Average precision over the descending-score sweep; tied scores form one
// threshold. Needs at least one positive.
double aupr(const ScoredSet& set);

struct Report {
  double f1 = 0.0;
  double threshold = 0.0;
  double auc = 0.0;
  double aupr = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

Report evaluate(const ScoredSet& set);
nlohmann::json to_json(const Report& r);

}  // namespace fcalink::metrics
