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

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "fcalink/tensor.hpp"

namespace fcalink::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Central differences against `grads` for every value of the tensors whose
// name starts with `prefix`. Relative error uses max(|a|, |n|, floor).
inline GradCheckResult grad_check(nn::ParamSet<double>& params, const nn::ParamSet<double>& grads,
                                  const std::function<double()>& loss, const std::string& prefix,
                                  double h = 1e-5, double floor = 1e-6) {
  GradCheckResult r;
  for (std::size_t ti = 0; ti < params.tensors().size(); ++ti) {
    auto& t = params.tensors()[ti];
    if (t.name.rfind(prefix, 0) != 0) continue;
    const auto& g = grads.tensors()[ti].data;
    for (std::size_t i = 0; i < t.data.size(); ++i) {
      const double keep = t.data[i];
      t.data[i] = keep + h;
      const double up = loss();
      t.data[i] = keep - h;
      const double down = loss();
      t.data[i] = keep;
      const double numeric = (up - down) / (2 * h);
      const double err =
          std::abs(g[i] - numeric) / std::max({std::abs(g[i]), std::abs(numeric), floor});
      if (err > r.max_rel_error) r = {err, t.name, i, g[i], numeric};
    }
  }
  return r;
}

}  // namespace fcalink::testing
