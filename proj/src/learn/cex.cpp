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

#include "learn/cex.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "learn/binary_io.hpp"
#include "learn/error.hpp"
#include "learn/rng.hpp"

namespace learn::cex {

PromptTemplate PromptTemplate::three_field() {
  return PromptTemplate{{"title", "category", "brand"}};
}

PromptTemplate PromptTemplate::six_field() {
  return PromptTemplate{
      {"title", "category", "brand", "price", "keywords", "attributes"}};
}

PromptTemplate PromptTemplate::parse(std::string_view text) {
  if (text == "3") return three_field();
  if (text == "6") return six_field();
  PromptTemplate tmpl;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    if (comma == std::string_view::npos) comma = text.size();
    auto field = text.substr(start, comma - start);
    while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
    while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
    if (field.empty()) {
      throw Error(ErrorCode::kConfig,
                  "empty field in prompt template '" + std::string(text) + "'");
    }
    tmpl.fields.emplace_back(field);
    start = comma + 1;
  }
  return tmpl;
}

namespace {
const std::string& field_value(const data::Item& item,
                               const std::string& name) {
  if (name == "title") return item.title;
  if (name == "category") return item.category;
  if (name == "brand") return item.brand;
  return item.extra(name);
}
}  // namespace

std::string compose_prompt(const data::Item& item,
                           const PromptTemplate& tmpl) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.fields.size(); ++i) {
    if (i > 0) out += ", ";
    const auto& name = tmpl.fields[i];
    const auto& value = field_value(item, name);
    out += name;
    out += ": ";
    out += value.empty() ? std::string(kUnknownField) : value;
  }
  return out;
}

std::vector<float> average_pool(std::span<const float> hidden_states,
                                std::size_t dim) {
  if (dim == 0 || hidden_states.size() % dim != 0) {
    throw Error(ErrorCode::kShapeMismatch,
                "hidden state buffer is not a multiple of dim");
  }
  const std::size_t rows = hidden_states.size() / dim;
  if (rows == 0) {
    throw Error(ErrorCode::kEmptyInput, "average_pool needs at least one row");
  }
  std::vector<double> acc(dim, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < dim; ++c) {
      acc[c] += hidden_states[r * dim + c];
    }
  }
  std::vector<float> out(dim);
  for (std::size_t c = 0; c < dim; ++c) {
    out[c] = static_cast<float>(acc[c] / static_cast<double>(rows));
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const char ch : bytes) {
    hash ^= static_cast<unsigned char>(ch);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::vector<float> pseudo_embed(std::string_view text, std::size_t dim) {
  if (dim == 0) {
    throw Error(ErrorCode::kInvalidArgument, "pseudo_embed dim must be >= 1");
  }
  std::uint64_t state = fnv1a64(text);
  std::vector<double> v(dim);
  double norm2 = 0.0;
  for (auto& x : v) {
    const double unit =
        static_cast<double>(splitmix64_next(state) >> 11) * 0x1.0p-53;
    x = unit * 2.0 - 1.0;
    norm2 += x * x;
  }
  const double norm = std::sqrt(norm2);
  std::vector<float> out(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    out[i] = static_cast<float>(norm > 0.0 ? v[i] / norm : 0.0);
  }
  return out;
}

EmbeddingStore::EmbeddingStore(std::size_t dim,
                               std::span<const EmbeddingRecord> records)
    : dim_(dim) {
  if (dim == 0) {
    throw Error(ErrorCode::kInvalidArgument, "embedding dim must be >= 1");
  }
  ids_.reserve(records.size());
  values_.reserve(records.size() * dim);
  for (const auto& rec : records) add(rec.item_id, rec.vec);
}

void EmbeddingStore::add(ItemId id, std::span<const float> vec) {
  if (vec.size() != dim_) {
    throw Error(ErrorCode::kDimMismatch,
                "item " + std::to_string(id) + " has length " +
                    std::to_string(vec.size()) + ", store dim is " +
                    std::to_string(dim_),
                id);
  }
  for (const float x : vec) {
    if (!std::isfinite(x)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "item " + std::to_string(id) + " has a non-finite component",
                  id);
    }
  }
  if (!rows_.emplace(id, ids_.size()).second) {
    throw Error(ErrorCode::kDuplicateId,
                "duplicate embedding for item " + std::to_string(id), id);
  }
  ids_.push_back(id);
  values_.insert(values_.end(), vec.begin(), vec.end());
}

std::span<const float> EmbeddingStore::lookup(ItemId id) const {
  const auto it = rows_.find(id);
  if (it == rows_.end()) {
    throw Error(ErrorCode::kMissingItem,
                "no content embedding for item " + std::to_string(id), id);
  }
  return std::span<const float>(values_).subspan(it->second * dim_, dim_);
}

namespace {

StoreHeader read_header(std::istream& in, const std::filesystem::path& path) {
  char magic[4];
  if (!in.read(magic, 4)) {
    throw Error(ErrorCode::kBadMagic, path.string() + ": file too short");
  }
  if (std::memcmp(magic, kStoreMagic, 4) != 0) {
    throw Error(ErrorCode::kBadMagic, path.string() + ": not an LNEB file");
  }
  StoreHeader header;
  header.version = binary::read_le<std::uint32_t>(in, "version");
  if (header.version != kStoreVersion) {
    throw Error(ErrorCode::kBadVersion,
                path.string() + ": unsupported LNEB version " +
                    std::to_string(header.version));
  }
  header.dim = binary::read_le<std::uint32_t>(in, "dim");
  header.count = binary::read_le<std::uint64_t>(in, "count");
  if (header.dim == 0) {
    throw Error(ErrorCode::kDimMismatch, path.string() + ": dim is zero");
  }
  return header;
}

std::ifstream open_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return in;
}

}  // namespace

StoreHeader read_store_header(const std::filesystem::path& path) {
  auto in = open_binary(path);
  return read_header(in, path);
}

EmbeddingStore EmbeddingStore::open(const std::filesystem::path& path) {
  auto in = open_binary(path);
  const auto header = read_header(in, path);
  EmbeddingStore store;
  store.dim_ = header.dim;
  const std::size_t record_bytes = 8 + 4 * static_cast<std::size_t>(header.dim);
  std::vector<unsigned char> buf(record_bytes);
  std::vector<float> vec(header.dim);
  for (std::uint64_t r = 0; r < header.count; ++r) {
    if (!in.read(reinterpret_cast<char*>(buf.data()),
                 static_cast<std::streamsize>(record_bytes))) {
      throw Error(ErrorCode::kIo, path.string() + ": truncated at record " +
                                      std::to_string(r));
    }
    ItemId id = 0;
    for (int b = 0; b < 8; ++b) id |= static_cast<ItemId>(buf[b]) << (8 * b);
    for (std::size_t c = 0; c < header.dim; ++c) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) {
        bits |= static_cast<std::uint32_t>(buf[8 + 4 * c + b]) << (8 * b);
      }
      vec[c] = std::bit_cast<float>(bits);
    }
    store.add(id, vec);
  }
  return store;
}

void store_write(const std::filesystem::path& path, std::size_t dim,
                 std::span<const EmbeddingRecord> records) {
  // Validates dims, finiteness and uniqueness before touching the file.
  const EmbeddingStore validated(dim, records);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(kStoreMagic, 4);
  binary::write_le<std::uint32_t>(out, kStoreVersion);
  binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(dim));
  binary::write_le<std::uint64_t>(out, records.size());
  for (const auto& rec : records) {
    binary::write_le<std::uint64_t>(out, rec.item_id);
    for (const float x : rec.vec) binary::write_f32(out, x);
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

std::vector<EmbeddingRecord> embed_catalog(const data::ItemCatalog& catalog,
                                           std::size_t dim,
                                           const PromptTemplate& tmpl) {
  std::vector<EmbeddingRecord> records;
  records.reserve(catalog.size());
  for (const auto& item : catalog.items()) {
    records.push_back({item.item_id, pseudo_embed(compose_prompt(item, tmpl), dim)});
  }
  return records;
}

}  // namespace learn::cex
