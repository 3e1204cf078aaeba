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

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "learn/error.hpp"

// Little-endian primitives shared by the embedding and checkpoint formats.
namespace learn::binary {

template <class UInt>
void write_le(std::ostream& out, UInt value) {
  char bytes[sizeof(UInt)];
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  }
  out.write(bytes, sizeof(UInt));
}

inline void write_f32(std::ostream& out, float value) {
  write_le(out, std::bit_cast<std::uint32_t>(value));
}

template <class UInt>
UInt read_le(std::istream& in, const std::string& what) {
  unsigned char bytes[sizeof(UInt)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(UInt))) {
    throw Error(ErrorCode::kIo, "unexpected end of file reading " + what);
  }
  UInt value = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    value |= static_cast<UInt>(bytes[i]) << (8 * i);
  }
  return value;
}

inline float read_f32(std::istream& in, const std::string& what) {
  return std::bit_cast<float>(read_le<std::uint32_t>(in, what));
}

}  // namespace learn::binary
