// Copyright 2026 The LEARN Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "learn/nn/layers.hpp"

namespace learn::nn {

// LNCK layout (little-endian):
//   "LNCK", u32 version, u64 header_len, header_len bytes of UTF-8 JSON,
//   u64 param_count, then per parameter:
//   u32 name_len, name bytes, u32 rank, rank x u64 dims, f32 data.
inline constexpr char kCheckpointMagic[4] = {'L', 'N', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct StoredArray {
  std::string name;
  Shape shape;
  std::vector<float> data;
};

struct Checkpoint {
  std::string header_json;
  std::vector<StoredArray> arrays;

  const StoredArray* find(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& path,
                     const std::string& header_json,
                     const ParamList<float>& params);

Checkpoint load_checkpoint(const std::filesystem::path& path);

// Copies stored values into `params` by name; every parameter must be present
// with an identical shape.
void restore_params(const Checkpoint& checkpoint, ParamList<float>& params);

}  // namespace learn::nn
