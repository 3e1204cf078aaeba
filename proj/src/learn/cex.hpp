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
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "learn/data.hpp"

namespace learn::cex {

using data::ItemId;

// Ordered list of item fields rendered as "name: value" joined by ", ".
// title/category/brand read the Item fields; any other name reads extras.
struct PromptTemplate {
  std::vector<std::string> fields;

  static PromptTemplate three_field();
  static PromptTemplate six_field();
  // "3", "6", or a comma-separated field list such as "title,brand".
  static PromptTemplate parse(std::string_view text);

  friend bool operator==(const PromptTemplate&,
                         const PromptTemplate&) = default;
};

inline constexpr std::string_view kUnknownField = "unknown";

std::string compose_prompt(const data::Item& item,
                           const PromptTemplate& tmpl = PromptTemplate::three_field());

// Row-wise mean of a row-major L x dim matrix.
std::vector<float> average_pool(std::span<const float> hidden_states,
                                std::size_t dim);

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

// Deterministic stand-in for a frozen text encoder. Bit-exact across
// platforms: FNV-1a-64 seed, splitmix64 stream, components in [-1, 1),
// L2-normalized in double precision before narrowing to f32.
std::vector<float> pseudo_embed(std::string_view text, std::size_t dim);

// Read-only item_id -> content vector lookup.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual std::size_t dim() const = 0;
  virtual bool contains(ItemId id) const = 0;
  // Throws MissingItem for unknown ids.
  virtual std::span<const float> lookup(ItemId id) const = 0;
  virtual std::vector<ItemId> ids() const = 0;
};

struct EmbeddingRecord {
  ItemId item_id = 0;
  std::vector<float> vec;
};

// In-memory provider, filled from records or from an LNEB file.
class EmbeddingStore final : public EmbeddingProvider {
 public:
  EmbeddingStore(std::size_t dim, std::span<const EmbeddingRecord> records);

  static EmbeddingStore open(const std::filesystem::path& path);

  std::size_t dim() const override { return dim_; }
  std::size_t count() const noexcept { return ids_.size(); }
  bool contains(ItemId id) const override { return rows_.contains(id); }
  std::span<const float> lookup(ItemId id) const override;
  // File order.
  std::vector<ItemId> ids() const override { return ids_; }

 private:
  EmbeddingStore() = default;
  void add(ItemId id, std::span<const float> vec);

  std::size_t dim_ = 0;
  std::vector<ItemId> ids_;
  std::vector<float> values_;
  std::unordered_map<ItemId, std::size_t> rows_;
};

// LNEB: "LNEB", u32 version, u32 dim, u64 count, count x (u64 id, dim x f32).
inline constexpr char kStoreMagic[4] = {'L', 'N', 'E', 'B'};
inline constexpr std::uint32_t kStoreVersion = 1;

void store_write(const std::filesystem::path& path, std::size_t dim,
                 std::span<const EmbeddingRecord> records);

struct StoreHeader {
  std::uint32_t version = 0;
  std::uint32_t dim = 0;
  std::uint64_t count = 0;
};

inline EmbeddingStore store_open(const std::filesystem::path& path) {
  return EmbeddingStore::open(path);
}

StoreHeader read_store_header(const std::filesystem::path& path);

// Composes prompts for every catalog item and embeds them with pseudo_embed.
std::vector<EmbeddingRecord> embed_catalog(const data::ItemCatalog& catalog,
                                           std::size_t dim,
                                           const PromptTemplate& tmpl);

}  // namespace learn::cex
