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

#include "learn/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <string_view>

#include "json.hpp"
#include "learn/error.hpp"

namespace learn::data {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

template <class Int>
Int parse_int(std::string_view text, std::size_t line_no,
              const char* column) {
  Int value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc{} || ptr != end) {
    throw Error(ErrorCode::kParse,
                "line " + std::to_string(line_no) + ": bad " + column + " '" +
                    std::string(text) + "'",
                line_no);
  }
  return value;
}

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open " + path.string());
  }
  return in;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::kIo, "cannot write " + path.string());
  }
  return out;
}

// Strips a trailing CR; returns false for blank lines.
bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

void check_field(const std::string& value, const char* what) {
  if (value.find_first_of("\t\n\r") != std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(what) + " contains a tab or newline: " + value);
  }
}

}  // namespace

const std::string& Item::extra(std::string_view key) const {
  static const std::string kEmpty;
  for (const auto& [k, v] : extras) {
    if (k == key) return v;
  }
  return kEmpty;
}

ItemCatalog::ItemCatalog(std::vector<Item> items) : items_(std::move(items)) {
  index_.reserve(items_.size());
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (!index_.emplace(items_[i].item_id, i).second) {
      throw Error(ErrorCode::kDuplicateId,
                  "duplicate item_id " + std::to_string(items_[i].item_id),
                  items_[i].item_id);
    }
  }
}

const Item& ItemCatalog::at(ItemId id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) {
    throw Error(ErrorCode::kMissingItem,
                "item " + std::to_string(id) + " not in catalog", id);
  }
  return items_[it->second];
}

std::vector<ItemId> ItemCatalog::ids() const {
  std::vector<ItemId> out;
  out.reserve(items_.size());
  for (const auto& item : items_) out.push_back(item.item_id);
  return out;
}

std::size_t InteractionSequence::history_length() const {
  const auto it = std::lower_bound(
      events.begin(), events.end(), split_ts,
      [](const Event& e, Timestamp ts) { return e.timestamp < ts; });
  return static_cast<std::size_t>(it - events.begin());
}

std::span<const Event> InteractionSequence::history() const {
  return std::span<const Event>(events).first(history_length());
}

std::span<const Event> InteractionSequence::target() const {
  return std::span<const Event>(events).subspan(history_length());
}

namespace {
std::vector<ItemId> item_ids(std::span<const Event> events) {
  std::vector<ItemId> out;
  out.reserve(events.size());
  for (const auto& e : events) out.push_back(e.item_id);
  return out;
}
}  // namespace

std::vector<ItemId> InteractionSequence::history_items() const {
  return item_ids(history());
}

std::vector<ItemId> InteractionSequence::target_items() const {
  return item_ids(target());
}

std::vector<ItemId> InteractionSequence::items() const {
  return item_ids(events);
}

ItemCatalog load_catalog(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  std::vector<Item> items;
  std::string line;
  std::size_t line_no = 0;
  while (next_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() < 4 || fields.size() > 5) {
      throw Error(ErrorCode::kParse,
                  "line " + std::to_string(line_no) + ": expected 4 or 5 columns",
                  line_no);
    }
    Item item;
    item.item_id = parse_int<ItemId>(fields[0], line_no, "item_id");
    item.title = fields[1];
    item.category = fields[2];
    item.brand = fields[3];
    if (fields.size() == 5 && !fields[4].empty()) {
      nlohmann::ordered_json extras;
      try {
        extras = nlohmann::ordered_json::parse(fields[4]);
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kParse,
                    "line " + std::to_string(line_no) +
                        ": extras_json: " + e.what(),
                    line_no);
      }
      if (!extras.is_object()) {
        throw Error(ErrorCode::kParse,
                    "line " + std::to_string(line_no) +
                        ": extras_json must be an object",
                    line_no);
      }
      for (const auto& [key, value] : extras.items()) {
        if (!value.is_string()) {
          throw Error(ErrorCode::kParse,
                      "line " + std::to_string(line_no) + ": extras value '" +
                          key + "' is not a string",
                      line_no);
        }
        item.extras.emplace_back(key, value.get<std::string>());
      }
    }
    items.push_back(std::move(item));
  }
  return ItemCatalog(std::move(items));
}

void write_catalog(const std::filesystem::path& path,
                   const ItemCatalog& catalog) {
  auto out = open_for_write(path);
  for (const auto& item : catalog.items()) {
    check_field(item.title, "title");
    check_field(item.category, "category");
    check_field(item.brand, "brand");
    nlohmann::ordered_json extras = nlohmann::ordered_json::object();
    for (const auto& [k, v] : item.extras) extras[k] = v;
    out << item.item_id << '\t' << item.title << '\t' << item.category << '\t'
        << item.brand << '\t' << extras.dump() << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

std::vector<InteractionSequence> load_event_log(
    const std::filesystem::path& path, LoadOptions options) {
  auto in = open_for_read(path);
  std::map<UserId, std::vector<Event>> by_user;
  std::string line;
  std::size_t line_no = 0;
  while (next_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw Error(ErrorCode::kParse,
                  "line " + std::to_string(line_no) + ": expected 3 columns",
                  line_no);
    }
    const auto user = parse_int<UserId>(fields[0], line_no, "user_id");
    Event event{parse_int<ItemId>(fields[1], line_no, "item_id"),
                parse_int<Timestamp>(fields[2], line_no, "timestamp")};
    auto& events = by_user[user];
    if (options.require_sorted && !events.empty() &&
        event.timestamp < events.back().timestamp) {
      throw Error(ErrorCode::kUnsortedInput,
                  "user " + std::to_string(user) +
                      " has out-of-order timestamps at line " +
                      std::to_string(line_no),
                  user);
    }
    events.push_back(event);
  }

  std::vector<InteractionSequence> out;
  out.reserve(by_user.size());
  for (auto& [user, events] : by_user) {
    std::stable_sort(events.begin(), events.end(),
                     [](const Event& a, const Event& b) {
                       return a.timestamp < b.timestamp;
                     });
    out.push_back(InteractionSequence{user, std::move(events), kNoSplit});
  }
  return out;
}

std::vector<InteractionSequence> load_interactions(
    const std::filesystem::path& path, Timestamp split_ts, LoadStats* stats,
    LoadOptions options) {
  LoadStats local;
  std::vector<InteractionSequence> out;
  for (auto& seq : load_event_log(path, options)) {
    ++local.users_seen;
    seq.split_ts = split_ts;
    const auto h = seq.history_length();
    if (h == 0) {
      ++local.excluded_empty_history;
      continue;
    }
    if (h == seq.events.size()) {
      ++local.excluded_empty_target;
      continue;
    }
    out.push_back(std::move(seq));
  }
  if (stats != nullptr) *stats = local;
  return out;
}

void write_interactions(const std::filesystem::path& path,
                        std::span<const InteractionSequence> sequences) {
  auto out = open_for_write(path);
  for (const auto& seq : sequences) {
    for (const auto& e : seq.events) {
      out << seq.user_id << '\t' << e.item_id << '\t' << e.timestamp << '\n';
    }
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

LeaveOneOutSplit split_leave_one_out(const InteractionSequence& seq) {
  const auto n = seq.events.size();
  if (n < 3) {
    throw Error(ErrorCode::kTooShort,
                "user " + std::to_string(seq.user_id) + " has " +
                    std::to_string(n) + " events; leave-one-out needs 3",
                seq.user_id);
  }
  LeaveOneOutSplit split;
  split.train.reserve(n - 2);
  for (std::size_t i = 0; i + 2 < n; ++i) {
    split.train.push_back(seq.events[i].item_id);
  }
  split.valid = seq.events[n - 2].item_id;
  split.test = seq.events[n - 1].item_id;
  return split;
}

}  // namespace learn::data
