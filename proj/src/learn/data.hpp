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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace learn::data {

using ItemId = std::uint64_t;
using UserId = std::uint64_t;
using Timestamp = std::int64_t;

struct Item {
  ItemId item_id = 0;
  std::string title;
  std::string category;
  std::string brand;
  std::vector<std::pair<std::string, std::string>> extras;

  // Empty string when the key is absent.
  const std::string& extra(std::string_view key) const;

  friend bool operator==(const Item&, const Item&) = default;
};

class ItemCatalog {
 public:
  ItemCatalog() = default;
  explicit ItemCatalog(std::vector<Item> items);

  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }
  const std::vector<Item>& items() const noexcept { return items_; }
  bool contains(ItemId id) const { return index_.contains(id); }
  const Item& at(ItemId id) const;

  // Ids in file order.
  std::vector<ItemId> ids() const;

  friend bool operator==(const ItemCatalog& a, const ItemCatalog& b) {
    return a.items_ == b.items_;
  }

 private:
  std::vector<Item> items_;
  std::unordered_map<ItemId, std::size_t> index_;
};

struct Event {
  ItemId item_id = 0;
  Timestamp timestamp = 0;
  friend bool operator==(const Event&, const Event&) = default;
};

inline constexpr Timestamp kNoSplit = std::numeric_limits<Timestamp>::max();

// A user's chronological events. Events with timestamp < split_ts form the
// history; the rest form the target.
struct InteractionSequence {
  UserId user_id = 0;
  std::vector<Event> events;
  Timestamp split_ts = kNoSplit;

  std::size_t history_length() const;
  std::span<const Event> history() const;
  std::span<const Event> target() const;
  std::vector<ItemId> history_items() const;
  std::vector<ItemId> target_items() const;
  std::vector<ItemId> items() const;

  friend bool operator==(const InteractionSequence&,
                         const InteractionSequence&) = default;
};

struct LoadStats {
  std::size_t users_seen = 0;
  std::size_t excluded_empty_history = 0;
  std::size_t excluded_empty_target = 0;
};

struct LoadOptions {
  // Reject users whose events appear out of timestamp order in the file
  // instead of stable-sorting them.
  bool require_sorted = false;
};

ItemCatalog load_catalog(const std::filesystem::path& path);
void write_catalog(const std::filesystem::path& path,
                   const ItemCatalog& catalog);

// Every user's full event list (split_ts = kNoSplit), ordered by user_id.
std::vector<InteractionSequence> load_event_log(
    const std::filesystem::path& path, LoadOptions options = {});

// Sequences split at `split_ts`; users with an empty history or empty target
// are skipped and counted in `stats`.
std::vector<InteractionSequence> load_interactions(
    const std::filesystem::path& path, Timestamp split_ts,
    LoadStats* stats = nullptr, LoadOptions options = {});

void write_interactions(const std::filesystem::path& path,
                        std::span<const InteractionSequence> sequences);

struct LeaveOneOutSplit {
  std::vector<ItemId> train;
  ItemId valid = 0;
  ItemId test = 0;
};

LeaveOneOutSplit split_leave_one_out(const InteractionSequence& seq);

}  // namespace learn::data
