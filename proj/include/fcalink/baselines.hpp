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
#include <vector>

#include <Eigen/Dense>

#include "fcalink/context.hpp"

namespace fcalink::baselines {

// |N(u1) ∩ N(u2)| over attribute neighbourhoods.
std::size_t common_neighbors_oo(const BipartiteContext& ctx, ObjectId u1, ObjectId u2);

// Common-neighbour score for a cross pair: the number of attributes of u that
// are shared with at least one object already linked to v, |N(u) ∩ N(N(v))|.
std::size_t common_neighbors_oa(const BipartiteContext& ctx, ObjectId u, AttributeId v);

// Common neighbours in the object projection (objects linked when they share an
// attribute): the number of other objects co-occurring with every member.
std::size_t common_neighbors_projected(const BipartiteContext& ctx,
                                       const std::vector<ObjectId>& group);

struct FactorModel {
  Eigen::MatrixXd object_factors;     // |U| × k
  Eigen::MatrixXd attribute_factors;  // |V| × k
  std::size_t rank = 0;
  double lambda = 0.0;
  std::vector<double> loss_history;   // objective after each sweep
};

struct MfOptions {
  std::size_t rank = 32;
  double lambda = 0.1;
  std::size_t epochs = 20;
  std::uint64_t seed = 0;
};

// Alternating least squares on the full 0/1 incidence matrix (missing cells
// are zeros): minimises ||R - P Qᵀ||² + λ(||P||² + ||Q||²).
FactorModel train_mf(const BipartiteContext& ctx, const MfOptions& options);
double score_mf(const FactorModel& model, ObjectId u, AttributeId v);
// Group score: the best attribute's weakest member, max_v min_{u in group} score_mf(u, v).
double score_mf_group(const FactorModel& model, const std::vector<ObjectId>& group);
double mf_objective(const FactorModel& model, const Eigen::MatrixXd& incidence);
Eigen::MatrixXd incidence_matrix(const BipartiteContext& ctx);

}  // namespace fcalink::baselines
