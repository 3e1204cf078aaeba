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

#include <string>

#include "catch_amalgamated.hpp"
#include "expect.hpp"
#include "learn/config.hpp"

using namespace learn;
using namespace learn::config;
using nlohmann::json;
using learn::testing::code_of;

namespace {

std::string config_error(const json& j) {
  try {
    parse_run_config(j);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfig);
    return e.what();
  }
  FAIL("config accepted");
  return {};
}

bool mentions(const std::string& text, const std::string& part) {
  return text.find(part) != std::string::npos;
}

}  // namespace

TEST_CASE("defaults") {
  const auto c = parse_run_config(json::object());
  CHECK(c.output_dir == "run");
  CHECK(c.checkpoint_path() == "run/checkpoint.lnck");
  CHECK(c.embedding_source == EmbeddingSource::kContent);
  CHECK(c.train_view == TrainView::kLeaveOneOut);
  CHECK(c.model_preset == "desk");
  CHECK(c.model.d_model == 128);
  CHECK(c.model.n_layers == 4);
  CHECK(c.model.d_out == 64);
  CHECK(c.model.max_len == 128);
  CHECK(c.sampling.n_hist == 10);
  CHECK(c.sampling.n_tar == 10);
  CHECK(c.sampling.weighted);
  CHECK(c.optim.mask_same_id);
  CHECK(c.eval.ks == std::vector<std::size_t>{10});
  CHECK(c.problems().empty());
}

TEST_CASE("base preset with explicit overrides") {
  const auto c = parse_run_config(
      json::parse(R"({"model": {"preset": "base", "d_out": 32, "item_tower": "b"}})"));
  CHECK(c.model.d_model == 768);
  CHECK(c.model.n_layers == 12);
  CHECK(c.model.n_heads == 12);
  CHECK(c.model.d_out == 32);
  CHECK(c.model.item_tower == pal::ItemTowerVariant::kB);
}

TEST_CASE("every problem is reported at once") {
  const auto msg = config_error(json::parse(R"({
    "catalgo": "x.tsv",
    "seed": "seven",
    "train_view": "sideways",
    "model": {"n_heads": 3, "widht": 1},
    "sampling": {"n_hist": 0},
    "optim": {"lr": -1},
    "eval": {"protocol": "auc"}
  })"));
  CHECK(mentions(msg, "unknown key config.catalgo"));
  CHECK(mentions(msg, "unknown key model.widht"));
  CHECK(mentions(msg, "config.seed has the wrong type"));
  CHECK(mentions(msg, "sideways"));
  CHECK(mentions(msg, "auc"));
  CHECK(mentions(msg, "divisible"));
  CHECK(mentions(msg, "n_hist"));
  CHECK(mentions(msg, "lr"));
}

TEST_CASE("command requirements") {
  auto c = parse_run_config(json::object());
  CHECK(code_of([&] { validate(c, "train"); }) == ErrorCode::kConfig);
  const auto p = c.problems("train");
  CHECK(p.size() == 2);  // interactions and embeddings
  c.interactions = "i.tsv";
  c.embedding_source = EmbeddingSource::kId;
  CHECK(c.problems("eval").empty());
  CHECK(c.problems("train").size() == 1);  // id tables need the catalog
  c.catalog = "c.tsv";
  CHECK(c.problems("train").empty());
  c.eval.protocol = eval::Protocol::kMultiTarget;
  CHECK(c.problems("eval").size() == 1);
  c.split_ts = 50;
  validate(c, "eval");
  c.eval.ks = {5, 0};
  CHECK(c.problems().size() == 1);
}

TEST_CASE("variant C accepts an inferred content width") {
  auto c = parse_run_config(json::parse(R"({"model": {"item_tower": "c"}})"));
  CHECK(c.problems().empty());
  c.model.d_content = 24;
  CHECK_FALSE(c.problems().empty());
  c.model = c.model.resolved();
  CHECK(c.problems().empty());
}

TEST_CASE("serialization round trip") {
  auto c = parse_run_config(json::parse(R"({
    "catalog": "c.tsv", "interactions": "i.tsv", "embeddings": "e.lneb",
    "output_dir": "out", "train_view": "timestamp", "split_ts": 1234,
    "prompt_template": "6", "seed": 99,
    "model": {"d_model": 32, "n_layers": 1, "n_heads": 2, "d_out": 16},
    "sampling": {"max_hist": 20, "weighted": false},
    "optim": {"epochs": 3, "temperature": 0.1, "mask_same_id": false},
    "eval": {"protocol": "multi_target", "ks": [50, 100], "held_out": "valid"}
  })"));
  CHECK(c.split_ts == std::optional<data::Timestamp>(1234));
  CHECK_FALSE(c.sampling.weighted);
  const auto again = parse_run_config(json::parse(c.to_json().dump()));
  CHECK(again.to_json() == c.to_json());
  CHECK(again.model == c.model);
  CHECK(again.sampling == c.sampling);
  CHECK(again.optim == c.optim);
  CHECK(again.eval.ks == std::vector<std::size_t>{50, 100});
  CHECK(again.eval.held_out == eval::HeldOut::kValid);
  CHECK(source_name(again.embedding_source) == "content");
  CHECK(view_name(again.train_view) == "timestamp");
}

TEST_CASE("merge lets the patch win recursively") {
  const auto base = json::parse(R"({"seed": 1, "model": {"d_model": 64, "n_layers": 2}, "eval": {"ks": [10]}})");
  const auto patch = json::parse(R"({"seed": 2, "model": {"n_layers": 3}, "eval": {"ks": [5, 20]}})");
  const auto m = merge(base, patch);
  CHECK(m["seed"] == 2);
  CHECK(m["model"]["d_model"] == 64);
  CHECK(m["model"]["n_layers"] == 3);
  CHECK(m["eval"]["ks"] == json::array({5, 20}));
  CHECK(merge(base, json::object()) == base);
}
