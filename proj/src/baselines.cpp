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

#include "fcalink/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>

#include "fcalink/error.hpp"
#include "fcalink/rng.hpp"

namespace fcalink::baselines {

std::size_t common_neighbors_oo(const BipartiteContext& ctx, ObjectId u1, ObjectId u2) {
  if (u1 >= ctx.num_objects() || u2 >= ctx.num_objects())
    throw UsageError("object id out of range");
  const auto& a = ctx.attributes_of(u1);
  const auto& b = ctx.attributes_of(u2);
  std::size_t n = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

std::size_t common_neighbors_oa(const BipartiteContext& ctx, ObjectId u, AttributeId v) {
  if (u >= ctx.num_objects() || v >= ctx.num_attributes())
    throw UsageError("node id out of range");
  std::vector<bool> reach(ctx.num_attributes(), false);
  for (ObjectId w : ctx.objects_of(v))
    for (AttributeId m : ctx.attributes_of(w)) reach[m] = true;
  std::size_t n = 0;
  for (AttributeId m : ctx.attributes_of(u)) n += reach[m] ? 1 : 0;
  return n;
}

std::size_t common_neighbors_projected(const BipartiteContext& ctx,
                                       const std::vector<ObjectId>& group) {
  if (group.empty()) throw UsageError("empty object group");
  std::vector<std::size_t> hits(ctx.num_objects(), 0);
  for (ObjectId u : group) {
    if (u >= ctx.num_objects()) throw UsageError("object id out of range");
    std::vector<bool> seen(ctx.num_objects(), false);
    for (AttributeId m : ctx.attributes_of(u))
      for (ObjectId w : ctx.objects_of(m)) seen[w] = true;
    for (ObjectId w = 0; w < ctx.num_objects(); ++w) hits[w] += seen[w] ? 1 : 0;
  }
  for (ObjectId u : group) hits[u] = 0;
  return static_cast<std::size_t>(
      std::count(hits.begin(), hits.end(), group.size()));
}

Eigen::MatrixXd incidence_matrix(const BipartiteContext& ctx) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ctx.num_objects()),
                                            static_cast<Eigen::Index>(ctx.num_attributes()));
  for (const Edge& e : ctx.edges()) r(e.object, e.attribute) = 1.0;
  return r;
}

double score_mf_group(const FactorModel& model, const std::vector<ObjectId>& group) {
  if (group.empty()) throw UsageError("empty object group");
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index v = 0; v < model.attribute_factors.rows(); ++v) {
    double weakest = std::numeric_limits<double>::infinity();
    for (ObjectId u : group) weakest = std::min(weakest, score_mf(model, u, static_cast<AttributeId>(v)));
    best = std::max(best, weakest);
  }
  return best;
}

double mf_objective(const FactorModel& model, const Eigen::MatrixXd& incidence) {
  const Eigen::MatrixXd residual =
      incidence - model.object_factors * model.attribute_factors.transpose();
  return residual.squaredNorm() + model.lambda * (model.object_factors.squaredNorm() +
                                                  model.attribute_factors.squaredNorm());
}

namespace {

// Solves each row of `target` = R_rows · other · (otherᵀ other + λI)⁻¹.
void solve_side(const Eigen::MatrixXd& r, const Eigen::MatrixXd& other, double lambda,
                Eigen::MatrixXd& target) {
  const auto k = other.cols();
  Eigen::MatrixXd gram = other.transpose() * other;
  gram += lambda * Eigen::MatrixXd::Identity(k, k);
  const Eigen::LDLT<Eigen::MatrixXd> solver(gram);
  const Eigen::MatrixXd rhs = (r * other).transpose();  // k × rows
  target = solver.solve(rhs).transpose();
}

}  // namespace

FactorModel train_mf(const BipartiteContext& ctx, const MfOptions& options) {
  if (options.rank == 0) throw UsageError("factor rank must be >= 1");
  if (options.rank > std::min(ctx.num_objects(), ctx.num_attributes()))
    throw UsageError("factor rank exceeds min(|U|, |V|)");
  if (options.lambda < 0) throw UsageError("regularisation must be non-negative");
  FactorModel model;
  model.rank = options.rank;
  model.lambda = options.lambda;
  const auto k = static_cast<Eigen::Index>(options.rank);
  Rng rng(options.seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(options.rank));
  model.object_factors.resize(static_cast<Eigen::Index>(ctx.num_objects()), k);
  model.attribute_factors.resize(static_cast<Eigen::Index>(ctx.num_attributes()), k);
  for (Eigen::Index i = 0; i < model.object_factors.size(); ++i)
    model.object_factors.data()[i] = rng.normal(0.0, scale);
  for (Eigen::Index i = 0; i < model.attribute_factors.size(); ++i)
    model.attribute_factors.data()[i] = rng.normal(0.0, scale);

  const Eigen::MatrixXd r = incidence_matrix(ctx);
  const Eigen::MatrixXd rt = r.transpose();
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    solve_side(r, model.attribute_factors, options.lambda, model.object_factors);
    solve_side(rt, model.object_factors, options.lambda, model.attribute_factors);
    const double loss = mf_objective(model, r);
    if (!std::isfinite(loss)) throw DivergenceError("matrix factorisation diverged");
    model.loss_history.push_back(loss);
  }
  return model;
}

double score_mf(const FactorModel& model, ObjectId u, AttributeId v) {
  if (u >= model.object_factors.rows() || v >= model.attribute_factors.rows())
    throw UsageError("node id out of range");
  return model.object_factors.row(u).dot(model.attribute_factors.row(v));
}

}  // namespace fcalink::baselines
