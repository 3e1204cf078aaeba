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

#include "learn/nn/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "learn/binary_io.hpp"

namespace learn::nn {

const StoredArray* Checkpoint::find(const std::string& name) const {
  const auto it = std::find_if(arrays.begin(), arrays.end(),
                               [&](const StoredArray& a) { return a.name == name; });
  return it == arrays.end() ? nullptr : &*it;
}

void save_checkpoint(const std::filesystem::path& path,
                     const std::string& header_json,
                     const ParamList<float>& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(kCheckpointMagic, 4);
  binary::write_le<std::uint32_t>(out, kCheckpointVersion);
  binary::write_le<std::uint64_t>(out, header_json.size());
  out.write(header_json.data(), static_cast<std::streamsize>(header_json.size()));
  binary::write_le<std::uint64_t>(out, params.size());
  for (const auto& [name, tensor] : params) {
    binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    binary::write_le<std::uint32_t>(out,
                                    static_cast<std::uint32_t>(tensor.rank()));
    for (const auto d : tensor.shape()) binary::write_le<std::uint64_t>(out, d);
    for (const float x : tensor.data()) binary::write_f32(out, x);
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    throw Error(ErrorCode::kBadMagic, path.string() + ": not an LNCK file");
  }
  const auto version = binary::read_le<std::uint32_t>(in, "version");
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::kBadVersion, path.string() +
                                            ": unsupported LNCK version " +
                                            std::to_string(version));
  }
  Checkpoint ck;
  const auto header_len = binary::read_le<std::uint64_t>(in, "header length");
  ck.header_json.resize(header_len);
  if (!in.read(ck.header_json.data(), static_cast<std::streamsize>(header_len))) {
    throw Error(ErrorCode::kIo, path.string() + ": truncated header");
  }
  const auto count = binary::read_le<std::uint64_t>(in, "param count");
  for (std::uint64_t i = 0; i < count; ++i) {
    StoredArray arr;
    const auto name_len = binary::read_le<std::uint32_t>(in, "name length");
    arr.name.resize(name_len);
    if (!in.read(arr.name.data(), name_len)) {
      throw Error(ErrorCode::kIo, path.string() + ": truncated name");
    }
    const auto rank = binary::read_le<std::uint32_t>(in, "rank");
    for (std::uint32_t r = 0; r < rank; ++r) {
      arr.shape.push_back(
          static_cast<std::size_t>(binary::read_le<std::uint64_t>(in, "dim")));
    }
    arr.data.resize(shape_size(arr.shape));
    for (auto& x : arr.data) x = binary::read_f32(in, arr.name);
    ck.arrays.push_back(std::move(arr));
  }
  return ck;
}

void restore_params(const Checkpoint& checkpoint, ParamList<float>& params) {
  for (auto& [name, tensor] : params) {
    const auto* stored = checkpoint.find(name);
    if (stored == nullptr) {
      throw Error(ErrorCode::kDimMismatch,
                  "checkpoint is missing parameter " + name);
    }
    if (stored->shape != tensor.shape()) {
      throw Error(ErrorCode::kDimMismatch,
                  "parameter " + name + " has shape " +
                      shape_string(stored->shape) + " in checkpoint, model expects " +
                      shape_string(tensor.shape()));
    }
    std::copy(stored->data.begin(), stored->data.end(),
              tensor.mutable_data().begin());
  }
}

}  // namespace learn::nn
