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

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "fcalink/error.hpp"
#include "fcalink/rng.hpp"

namespace fcalink::nn {

template <class T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using RowVector = Eigen::Matrix<T, 1, Eigen::Dynamic>;
template <class T>
using MatrixMap = Eigen::Map<Matrix<T>>;
template <class T>
using ConstMatrixMap = Eigen::Map<const Matrix<T>>;
template <class T>
using RowMap = Eigen::Map<RowVector<T>>;
template <class T>
using ConstRowMap = Eigen::Map<const RowVector<T>>;

// A named, row-major 2-D parameter block. Vectors are stored as 1×n.
template <class T>
struct Tensor {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> data;

  MatrixMap<T> mat() {
    return {data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
  }
  ConstMatrixMap<T> mat() const {
    return {data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
  }
  RowMap<T> row() { return {data.data(), static_cast<Eigen::Index>(data.size())}; }
  ConstRowMap<T> row() const { return {data.data(), static_cast<Eigen::Index>(data.size())}; }
};

// Ordered collection of named tensors. Gradients and optimiser moments use a
// ParamSet with the same layout as the parameters they belong to.
template <class T>
class ParamSet {
 public:
  Tensor<T>& add(std::string name, std::size_t rows, std::size_t cols) {
    if (index_.count(name)) throw UsageError("duplicate tensor '" + name + "'");
    index_.emplace(name, tensors_.size());
    tensors_.push_back({std::move(name), rows, cols, std::vector<T>(rows * cols, T(0))});
    return tensors_.back();
  }

  bool contains(std::string_view name) const { return index_.find(name) != index_.end(); }

  Tensor<T>& at(std::string_view name) { return tensors_[lookup(name)]; }
  const Tensor<T>& at(std::string_view name) const { return tensors_[lookup(name)]; }

  std::vector<Tensor<T>>& tensors() noexcept { return tensors_; }
  const std::vector<Tensor<T>>& tensors() const noexcept { return tensors_; }

  std::size_t num_values() const noexcept {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.data.size();
    return n;
  }

  ParamSet zeros_like() const {
    ParamSet out;
    for (const auto& t : tensors_) out.add(t.name, t.rows, t.cols);
    return out;
  }

  void set_zero() {
    for (auto& t : tensors_) std::fill(t.data.begin(), t.data.end(), T(0));
  }

  bool all_finite() const {
    for (const auto& t : tensors_)
      for (T v : t.data)
        if (!std::isfinite(v)) return false;
    return true;
  }

  template <class U>
  ParamSet<U> cast() const {
    ParamSet<U> out;
    for (const auto& t : tensors_) {
      auto& u = out.add(t.name, t.rows, t.cols);
      for (std::size_t i = 0; i < t.data.size(); ++i) u.data[i] = static_cast<U>(t.data[i]);
    }
    return out;
  }

  // Copies every tensor named `from_prefix + x` in `src` to `to_prefix + x` here.
  // Returns the number of tensors copied; shapes must agree.
  std::size_t copy_prefixed(const ParamSet& src, std::string_view from_prefix,
                            std::string_view to_prefix) {
    std::size_t copied = 0;
    for (const auto& t : src.tensors()) {
      if (t.name.rfind(from_prefix, 0) != 0) continue;
      const std::string target = std::string(to_prefix) + t.name.substr(from_prefix.size());
      auto& dst = at(target);
      if (dst.rows != t.rows || dst.cols != t.cols)
        throw UsageError("shape mismatch copying '" + t.name + "' into '" + target + "'");
      dst.data = t.data;
      ++copied;
    }
    return copied;
  }

  friend bool operator==(const ParamSet& a, const ParamSet& b) {
    if (a.tensors_.size() != b.tensors_.size()) return false;
    for (std::size_t i = 0; i < a.tensors_.size(); ++i) {
      const auto& x = a.tensors_[i];
      const auto& y = b.tensors_[i];
      if (x.name != y.name || x.rows != y.rows || x.cols != y.cols || x.data != y.data) return false;
    }
    return true;
  }

 private:
  std::size_t lookup(std::string_view name) const {
    const auto it = index_.find(name);
    if (it == index_.end()) throw UsageError("no tensor named '" + std::string(name) + "'");
    return it->second;
  }

  std::vector<Tensor<T>> tensors_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

// Fills with N(0, stddev) from a seeded stream.
template <class T>
void fill_normal(Tensor<T>& t, double stddev, Rng& rng) {
  for (auto& v : t.data) v = static_cast<T>(rng.normal(0.0, stddev));
}

template <class T>
void fill_constant(Tensor<T>& t, T value) {
  std::fill(t.data.begin(), t.data.end(), value);
}

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Rescale gradients whose global L2 norm exceeds this; 0 disables.
  double clip_norm = 1.0;
};

// Adaptive-moment gradient descent with bias correction.
template <class T>
class Adam {
 public:
  Adam(const ParamSet<T>& params, AdamOptions options)
      : options_(options), m_(params.zeros_like()), v_(params.zeros_like()) {}

  void step(ParamSet<T>& params, const ParamSet<T>& grads) {
    ++t_;
    double scale = 1.0;
    if (options_.clip_norm > 0) {
      double sq = 0;
      for (const auto& g : grads.tensors())
        for (T x : g.data) sq += static_cast<double>(x) * static_cast<double>(x);
      const double norm = std::sqrt(sq);
      if (norm > options_.clip_norm) scale = options_.clip_norm / norm;
    }
    const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
    const auto b1 = static_cast<T>(options_.beta1);
    const auto b2 = static_cast<T>(options_.beta2);
    const auto lr = static_cast<T>(options_.learning_rate * std::sqrt(c2) / c1);
    const auto eps = static_cast<T>(options_.epsilon);
    auto& ps = params.tensors();
    for (std::size_t i = 0; i < ps.size(); ++i) {
      auto& p = ps[i].data;
      const auto& g = grads.tensors()[i].data;
      auto& m = m_.tensors()[i].data;
      auto& v = v_.tensors()[i].data;
      for (std::size_t k = 0; k < p.size(); ++k) {
        const T gk = g[k] * static_cast<T>(scale);
        m[k] = b1 * m[k] + (T(1) - b1) * gk;
        v[k] = b2 * v[k] + (T(1) - b2) * gk * gk;
        p[k] -= lr * m[k] / (std::sqrt(v[k]) + eps);
      }
    }
  }

  std::size_t steps() const noexcept { return t_; }

 private:
  AdamOptions options_;
  ParamSet<T> m_;
  ParamSet<T> v_;
  std::size_t t_ = 0;
};

}  // namespace fcalink::nn
