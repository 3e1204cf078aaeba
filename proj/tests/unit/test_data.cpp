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

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "catch_amalgamated.hpp"
#include "learn/data.hpp"
#include "learn/error.hpp"
#include "learn/rng.hpp"
#include "expect.hpp"
#include "oracles.hpp"

using namespace learn;
using learn::testing::code_of;
using learn::testing::TempDir;

namespace {

void write(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

}  // namespace

TEST_CASE("catalog loads four and five column rows") {
  TempDir dir("data");
  write(dir / "c.tsv",
        "7\tMouse\tElectronics\tLogi\t{\"price\":\"9\",\"keywords\":\"a, b\"}\n"
        "3\tTea\tGrocery\tTwinings\n"
        "\n"
        "5\tBook\tBooks\t\t\n");
  const auto cat = data::load_catalog(dir / "c.tsv");
  REQUIRE(cat.size() == 3);
  CHECK(cat.ids() == std::vector<data::ItemId>{7, 3, 5});
  CHECK(cat.at(7).extra("price") == "9");
  CHECK(cat.at(7).extras.front().first == "price");  // file order kept
  CHECK(cat.at(3).extras.empty());
  CHECK(cat.at(5).brand.empty());
  CHECK(cat.contains(5));
  CHECK_FALSE(cat.contains(6));
}

TEST_CASE("catalog errors name the line or id") {
  TempDir dir("data");
  write(dir / "dup.tsv", "1\ta\tb\tc\n1\td\te\tf\n");
  try {
    data::load_catalog(dir / "dup.tsv");
    FAIL("expected DuplicateId");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDuplicateId);
    CHECK(e.subject() == 1u);
  }
  write(dir / "cols.tsv", "1\ta\tb\tc\n2\tonly\n");
  try {
    data::load_catalog(dir / "cols.tsv");
    FAIL("expected Parse");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParse);
    CHECK(e.subject() == 2u);
  }
  write(dir / "id.tsv", "x1\ta\tb\tc\n");
  CHECK(code_of([&] { data::load_catalog(dir / "id.tsv"); }) == ErrorCode::kParse);
  write(dir / "json.tsv", "1\ta\tb\tc\t[1]\n");
  CHECK(code_of([&] { data::load_catalog(dir / "json.tsv"); }) == ErrorCode::kParse);
  write(dir / "num.tsv", "1\ta\tb\tc\t{\"price\":3}\n");
  CHECK(code_of([&] { data::load_catalog(dir / "num.tsv"); }) == ErrorCode::kParse);
  CHECK(code_of([&] { data::load_catalog(dir / "missing.tsv"); }) == ErrorCode::kIo);
}

TEST_CASE("catalog round-trips through write_catalog") {
  TempDir dir("data");
  const auto cat = data::load_catalog(std::string(LEARN_FIXTURES) + "/catalog20.tsv");
  data::write_catalog(dir / "out.tsv", cat);
  const auto back = data::load_catalog(dir / "out.tsv");
  REQUIRE(back.size() == cat.size());
  for (const auto id : cat.ids()) {
    CHECK(back.at(id).title == cat.at(id).title);
    CHECK(back.at(id).extras == cat.at(id).extras);
  }
  data::Item bad;
  bad.item_id = 1;
  bad.title = "tab\there";
  CHECK(code_of([&] { data::write_catalog(dir / "bad.tsv", data::ItemCatalog({bad})); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("event log groups users and orders events by time") {
  TempDir dir("data");
  write(dir / "e.tsv", "2\t10\t5\n1\t11\t3\n2\t12\t1\n1\t13\t3\n1\t14\t2\n");
  const auto seqs = data::load_event_log(dir / "e.tsv");
  REQUIRE(seqs.size() == 2);
  CHECK(seqs[0].user_id == 1);
  // Stable for equal timestamps: 11 before 13.
  CHECK(seqs[0].items() == std::vector<data::ItemId>{14, 11, 13});
  CHECK(seqs[1].items() == std::vector<data::ItemId>{12, 10});
  CHECK(seqs[0].split_ts == data::kNoSplit);

  data::LoadOptions strict;
  strict.require_sorted = true;
  try {
    data::load_event_log(dir / "e.tsv", strict);
    FAIL("expected UnsortedInput");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnsortedInput);
  }
}

TEST_CASE("timestamp split and exclusion counts") {
  TempDir dir("data");
  // user 1 straddles the split, user 2 is all history, user 3 all target.
  write(dir / "e.tsv", "1\t1\t1\n1\t2\t5\n1\t3\t9\n2\t4\t1\n3\t5\t8\n");
  data::LoadStats stats;
  const auto seqs = data::load_interactions(dir / "e.tsv", 5, &stats);
  REQUIRE(seqs.size() == 1);
  CHECK(seqs[0].history_items() == std::vector<data::ItemId>{1});
  CHECK(seqs[0].target_items() == std::vector<data::ItemId>{2, 3});
  CHECK(stats.users_seen == 3);
  CHECK(stats.excluded_empty_target == 1);
  CHECK(stats.excluded_empty_history == 1);
}

TEST_CASE("interactions round-trip") {
  TempDir dir("data");
  write(dir / "e.tsv", "4\t1\t10\n4\t2\t20\n9\t3\t7\n");
  const auto seqs = data::load_event_log(dir / "e.tsv");
  data::write_interactions(dir / "o.tsv", seqs);
  CHECK(data::load_event_log(dir / "o.tsv") == seqs);
}

TEST_CASE("leave-one-out split") {
  data::InteractionSequence seq;
  seq.user_id = 3;
  for (data::ItemId i = 1; i <= 5; ++i) seq.events.push_back({i, static_cast<data::Timestamp>(i)});
  const auto s = data::split_leave_one_out(seq);
  CHECK(s.train == std::vector<data::ItemId>{1, 2, 3});
  CHECK(s.valid == 4);
  CHECK(s.test == 5);
  seq.events.resize(2);
  CHECK(code_of([&] { data::split_leave_one_out(seq); }) == ErrorCode::kTooShort);
}

TEST_CASE("random logs: split halves concatenate to the stable-sorted events") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    TempDir dir("data");
    Rng rng(seed);
    // user -> (timestamp, item) in file order
    std::map<data::UserId, std::vector<data::Event>> truth;
    std::ostringstream text;
    const std::size_t lines = 40 + rng.below(60);
    for (std::size_t i = 0; i < lines; ++i) {
      const data::UserId u = 1 + rng.below(6);
      const data::ItemId item = 100 + rng.below(50);
      const auto ts = static_cast<data::Timestamp>(rng.below(20));  // many ties
      text << u << '\t' << item << '\t' << ts << '\n';
      truth[u].push_back({item, ts});
    }
    write(dir / "e.tsv", text.str());
    const data::Timestamp split = 10;
    const auto seqs = data::load_interactions(dir / "e.tsv", split);
    for (const auto& s : seqs) {
      auto want = truth.at(s.user_id);
      std::stable_sort(want.begin(), want.end(),
                       [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
      std::vector<data::ItemId> want_ids;
      for (const auto& e : want) want_ids.push_back(e.item_id);
      auto joined = s.history_items();
      const auto tail = s.target_items();
      joined.insert(joined.end(), tail.begin(), tail.end());
      CHECK(joined == want_ids);
      for (const auto& e : s.history()) CHECK(e.timestamp < split);
      for (const auto& e : s.target()) CHECK(e.timestamp >= split);
    }

    // Reloading and re-serializing is byte-stable.
    const auto log = data::load_event_log(dir / "e.tsv");
    data::write_interactions(dir / "a.tsv", log);
    data::write_interactions(dir / "b.tsv", data::load_event_log(dir / "e.tsv"));
    CHECK(testing::read_file(dir / "a.tsv") == testing::read_file(dir / "b.tsv"));
    CHECK(data::load_event_log(dir / "a.tsv") == log);
  }
}
