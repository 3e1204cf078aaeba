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

#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "catch_amalgamated.hpp"
#include "json.hpp"
#include "learn/learn.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Scratch {
  fs::path path;
  explicit Scratch(const std::string& tag) {
    path = fs::temp_directory_path() /
           ("learn_capi_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

// Takes ownership of a library string.
json take_json(char* s) {
  REQUIRE(s != nullptr);
  auto j = json::parse(s);
  learn_string_free(s);
  return j;
}

const std::string kCatalog = std::string(LEARN_FIXTURES) + "/catalog20.tsv";

}  // namespace

TEST_CASE("status names and exit codes") {
  CHECK(std::string(learn_status_name(LEARN_OK)) == "Ok");
  CHECK(std::string(learn_status_name(LEARN_ERR_IO)) == "IoError");
  CHECK(std::string(learn_status_name(LEARN_ERR_DIM_MISMATCH)) == "DimMismatch");
  CHECK(std::string(learn_status_name(LEARN_ERR_COUNT_EXCEEDS_LEN)) == "CountExceedsLen");
  CHECK(std::string(learn_status_name(LEARN_ERR_CONFIG)) == "ConfigError");
  CHECK(std::string(learn_status_name(LEARN_ERR_RUNTIME)) == "RuntimeError");
  CHECK(std::string(learn_status_name(LEARN_ERR_INTERNAL)) == "Internal");
  CHECK(std::string(learn_status_name(static_cast<learn_status>(57))) == "Unknown");

  CHECK(learn_status_exit_code(LEARN_OK) == 0);
  CHECK(learn_status_exit_code(LEARN_ERR_CONFIG) == 2);
  CHECK(learn_status_exit_code(LEARN_ERR_BAD_HYPERPARAMS) == 2);
  CHECK(learn_status_exit_code(LEARN_ERR_IO) == 3);
  CHECK(learn_status_exit_code(LEARN_ERR_DIM_MISMATCH) == 3);
  CHECK(learn_status_exit_code(LEARN_ERR_MISSING_ITEM) == 3);
  CHECK(learn_status_exit_code(LEARN_ERR_ALL_MASKED_ROW) == 4);
  CHECK(learn_status_exit_code(LEARN_ERR_INTERNAL) == 4);
  CHECK(std::string(learn_version()).size() > 0);
}

TEST_CASE("embedding stores through the C API") {
  Scratch dir("store");
  uint64_t count = 0;
  REQUIRE(learn_embed_pseudo(kCatalog.c_str(), 8, "3", (dir / "e.lneb").c_str(), &count) == LEARN_OK);
  CHECK(count == 20);

  learn_store* store = nullptr;
  REQUIRE(learn_store_open((dir / "e.lneb").c_str(), &store) == LEARN_OK);
  CHECK(learn_store_dim(store) == 8);
  CHECK(learn_store_count(store) == 20);

  char* info = nullptr;
  REQUIRE(learn_inspect((dir / "e.lneb").c_str(), &info) == LEARN_OK);
  const auto header = take_json(info);
  CHECK(header["format"] == "LNEB");
  CHECK(header["count"] == 20);

  std::vector<float> buf(8);
  // First catalog id.
  std::ifstream cat(kCatalog);
  std::string line;
  std::getline(cat, line);
  if (line.rfind("item_id", 0) == 0) std::getline(cat, line);
  const auto first = std::stoull(line.substr(0, line.find('\t')));
  REQUIRE(learn_store_lookup(store, first, buf.data(), buf.size()) == LEARN_OK);
  double n2 = 0;
  for (const float x : buf) n2 += double(x) * x;
  CHECK(std::sqrt(n2) == Catch::Approx(1.0).epsilon(1e-5));

  CHECK(learn_store_lookup(store, 999999, buf.data(), buf.size()) == LEARN_ERR_MISSING_ITEM);
  uint64_t subject = 0;
  CHECK(learn_last_error_subject(&subject) == 1);
  CHECK(subject == 999999);
  CHECK(std::string(learn_last_error()).find("999999") != std::string::npos);

  CHECK(learn_store_lookup(store, first, buf.data(), 4) == LEARN_ERR_INVALID_ARGUMENT);
  CHECK(learn_last_error_subject(&subject) == 0);
  learn_store_close(store);

  learn_store* missing = nullptr;
  CHECK(learn_store_open((dir / "nope.lneb").c_str(), &missing) == LEARN_ERR_IO);
  CHECK(missing == nullptr);
  CHECK(learn_store_open(nullptr, &missing) == LEARN_ERR_INVALID_ARGUMENT);
  learn_store_close(nullptr);

  uint64_t written = 0;
  REQUIRE(learn_write_prompts(kCatalog.c_str(), "6", (dir / "p.tsv").c_str(), &written) == LEARN_OK);
  CHECK(written == 20);
}

TEST_CASE("config resolution reports problems") {
  char* out = nullptr;
  REQUIRE(learn_config_resolve(R"({"seed": 5, "model": {"d_out": 16}})", &out) == LEARN_OK);
  const auto j = take_json(out);
  CHECK(j["seed"] == 5);
  CHECK(j["model"]["d_out"] == 16);
  CHECK(j["model"]["d_model"] == 128);

  out = nullptr;
  CHECK(learn_config_resolve(R"({"sede": 5, "optim": {"lr": "fast"}})", &out) == LEARN_ERR_CONFIG);
  CHECK(out == nullptr);
  const std::string msg = learn_last_error();
  CHECK(msg.find("sede") != std::string::npos);
  CHECK(msg.find("optim.lr") != std::string::npos);
  CHECK(learn_config_resolve("{not json", &out) == LEARN_ERR_CONFIG);
}

TEST_CASE("synthetic train, eval, export and model queries") {
  Scratch dir("run");
  char* out = nullptr;
  REQUIRE(learn_synth(dir.path.string().c_str(),
                      R"({"clusters": 2, "items": 40, "users": 30, "dim": 16})", &out) == LEARN_OK);
  const auto synth = take_json(out);
  CHECK(synth["items"] == 40);
  CHECK(synth["users"] == 30);

  std::ifstream f(synth["config"].get<std::string>());
  auto cfg = json::parse(f);
  cfg["model"] = {{"d_model", 16}, {"n_layers", 1}, {"n_heads", 2}, {"d_out", 8}, {"max_len", 16}};
  cfg["optim"] = {{"batch_size", 8}, {"epochs", 2}};
  cfg["seed"] = 3;
  const auto text = cfg.dump();

  REQUIRE(learn_train(text.c_str(), &out) == LEARN_OK);
  const auto trained = take_json(out);
  CHECK(trained["examples"] == 30);
  CHECK(trained["steps"] == 8);
  CHECK(fs::exists(trained["checkpoint"].get<std::string>()));

  REQUIRE(learn_eval(text.c_str(), &out) == LEARN_OK);
  const auto report = take_json(out);
  CHECK(report["protocol"] == "leave_one_out");
  CHECK(report["n_items"] == 40);
  const double recall = report["metrics"]["Recall@10"];
  CHECK(recall >= 0.0);
  CHECK(recall <= 1.0);

  REQUIRE(learn_export(text.c_str(), &out) == LEARN_OK);
  const auto exported = take_json(out);
  CHECK(exported["n_items"] == 40);
  CHECK(exported["n_users"] == 30);
  CHECK(exported["dim"] == 8);

  learn_model* model = nullptr;
  REQUIRE(learn_model_load(trained["checkpoint"].get<std::string>().c_str(),
                           cfg["embeddings"].get<std::string>().c_str(), &model) == LEARN_OK);
  CHECK(learn_model_dim(model) == 8);
  std::vector<float> item(8), user(8);
  REQUIRE(learn_model_item_embedding(model, 1000, item.data(), item.size()) == LEARN_OK);
  const uint64_t history[] = {1000, 1001, 1002};
  REQUIRE(learn_model_user_embedding(model, history, 3, user.data(), user.size()) == LEARN_OK);
  double n2 = 0;
  for (const float x : user) n2 += double(x) * x;
  CHECK(std::sqrt(n2) == Catch::Approx(1.0).epsilon(1e-5));
  CHECK(learn_model_user_embedding(model, history, 0, user.data(), user.size()) == LEARN_ERR_EMPTY_INPUT);
  CHECK(learn_model_item_embedding(model, 5, item.data(), item.size()) == LEARN_ERR_MISSING_ITEM);
  learn_model_close(model);

  // A store of another width cannot feed this checkpoint.
  uint64_t count = 0;
  REQUIRE(learn_embed_pseudo(synth["dir"].get<std::string>().append("/catalog.tsv").c_str(), 12, "3",
                             (dir / "narrow.lneb").c_str(), &count) == LEARN_OK);
  model = nullptr;
  CHECK(learn_model_load(trained["checkpoint"].get<std::string>().c_str(),
                         (dir / "narrow.lneb").c_str(), &model) == LEARN_ERR_DIM_MISMATCH);
  CHECK(model == nullptr);

  char* info = nullptr;
  REQUIRE(learn_inspect(trained["checkpoint"].get<std::string>().c_str(), &info) == LEARN_OK);
  const auto ck = take_json(info);
  CHECK(ck["format"] == "LNCK");
  CHECK(ck["header"]["model"]["d_out"] == 8);

  // Results are optional.
  CHECK(learn_eval(text.c_str(), nullptr) == LEARN_OK);
}
