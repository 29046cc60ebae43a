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

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "fcalink/tensor.hpp"

namespace fcalink {

// On-disk layout (little-endian):
//   magic "FLCKPT\0\0" | u32 version | u64 header bytes | header JSON
//   u64 tensor count | per tensor: u32 name bytes, name, u32 ndim (=2),
//   u64 rows, u64 cols, rows*cols IEEE-754 float32 values
// The header carries the model kind and encoder config(s).
struct Checkpoint {
  nlohmann::json header;
  nn::ParamSet<float> params;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace fcalink
