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

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "catch_amalgamated.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int rc = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

class Workspace {
 public:
  explicit Workspace(const std::string& tag)
      : dir_(fs::temp_directory_path() / ("learn_cli_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(std::rand()))) {
    fs::create_directories(dir_);
  }
  ~Workspace() {
    std::error_code ec;
    fs::remove_all(dir_, ec);
  }
  std::string operator/(const std::string& name) const { return (dir_ / name).string(); }

  Run run(const std::string& args) const {
    const auto out = dir_ / ".stdout";
    const auto err = dir_ / ".stderr";
    const std::string cmd = std::string("\"") + LEARN_CLI + "\" " + args + " > \"" +
                            out.string() + "\" 2> \"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    Run r;
    r.rc = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

 private:
  fs::path dir_;
};

std::string q(const std::string& s) { return "\"" + s + "\""; }

// Small synthetic world plus fast model flags.
std::string prepare(const Workspace& ws) {
  const auto r = ws.run("synth -o " + q(ws / "data") +
                        R"( --options '{"clusters":2,"items":40,"users":30,"dim":16}')");
  REQUIRE(r.rc == 0);
  return "-c " + q(ws / "data/config.json") + " -o " + q(ws / "run") +
         " --d-model 16 --layers 1 --heads 2 --d-out 8 --epochs 2 --batch-size 8";
}

}  // namespace

TEST_CASE("embed-pseudo is deterministic") {
  Workspace ws("embed");
  {
    std::ofstream cat(ws / "catalog.tsv");
    cat << "1\tred mug\tkitchen\tacme\n2\tblue mug\tkitchen\tacme\n3\tlamp\tliving\tlumo\n";
  }
  const auto a = ws.run("embed-pseudo --catalog " + q(ws / "catalog.tsv") + " --dim 16 -o " + q(ws / "a.lneb"));
  REQUIRE(a.rc == 0);
  CHECK(json::parse(a.out)["count"] == 3);
  const auto b = ws.run("embed-pseudo --catalog " + q(ws / "catalog.tsv") + " --dim 16 -o " + q(ws / "b.lneb"));
  REQUIRE(b.rc == 0);
  CHECK(slurp(ws / "a.lneb") == slurp(ws / "b.lneb"));

  const auto info = ws.run("inspect " + q(ws / "a.lneb"));
  REQUIRE(info.rc == 0);
  const auto j = json::parse(info.out);
  CHECK(j["dim"] == 16);
  CHECK(j["count"] == 3);
}

TEST_CASE("prompts match the golden files") {
  Workspace ws("prompts");
  const std::string fixtures = LEARN_FIXTURES;
  for (const std::string t : {"3", "6"}) {
    const auto r = ws.run("prompts --catalog " + q(fixtures + "/catalog20.tsv") +
                          " --prompt-template " + t + " -o " + q(ws / "p.tsv"));
    REQUIRE(r.rc == 0);
    CHECK(slurp(ws / "p.tsv") == slurp(fixtures + "/prompts" + t + ".golden.tsv"));
  }
}

TEST_CASE("missing input exits with a data error") {
  Workspace ws("missing");
  const auto r = ws.run("embed-pseudo --catalog " + q(ws / "nope.tsv") + " --dim 8 -o " + q(ws / "x.lneb"));
  CHECK(r.rc == 3);
  CHECK(r.err.find("IoError") != std::string::npos);
  CHECK(r.err.find("nope.tsv") != std::string::npos);
  CHECK_FALSE(fs::exists(ws / "x.lneb"));
}

TEST_CASE("config errors exit with 2") {
  Workspace ws("config");
  const auto flags = prepare(ws);
  const auto bad_key = ws.run("train " + flags + " --set bogus=1");
  CHECK(bad_key.rc == 2);
  CHECK(bad_key.err.find("bogus") != std::string::npos);
  const auto bad_value = ws.run("train " + flags + " --set model.n_heads=3 --temperature 0");
  CHECK(bad_value.rc == 2);
  CHECK(bad_value.err.find("divisible") != std::string::npos);
  CHECK(bad_value.err.find("temperature") != std::string::npos);
  CHECK(ws.run("train --no-such-flag").rc == 2);
}

TEST_CASE("flags override the config file") {
  Workspace ws("precedence");
  const auto flags = prepare(ws);
  const auto r = ws.run("train " + flags + " --seed 41 --set optim.lr=0.01 --print-config");
  REQUIRE(r.rc == 0);
  const auto j = json::parse(r.out);
  CHECK(j["seed"] == 41);
  CHECK(j["model"]["d_model"] == 16);
  CHECK(j["optim"]["epochs"] == 2);
  CHECK(j["optim"]["lr"] == 0.01);
  // Untouched file values survive.
  CHECK(j["split_ts"] == 70);
  CHECK(j["sampling"]["max_hist"] == 16);
}

TEST_CASE("train, eval and export") {
  Workspace ws("pipeline");
  const auto flags = prepare(ws);
  const auto t = ws.run("train " + flags);
  REQUIRE(t.rc == 0);
  CHECK(fs::exists(ws / "run/checkpoint.lnck"));
  CHECK(fs::exists(ws / "run/run_config.json"));
  CHECK(fs::exists(ws / "run/metrics.jsonl"));

  const auto e = ws.run("eval " + flags + " -k 5 -k 10 --ranks-csv");
  REQUIRE(e.rc == 0);
  const auto report = json::parse(slurp(ws / "run/report.json"));
  CHECK(report["K"] == json::array({5, 10}));
  CHECK(report["metrics"].contains("NDCG@10"));
  CHECK(report["metrics"].contains("MRR"));
  CHECK(fs::exists(ws / "run/ranks.csv"));

  const auto m = ws.run("eval " + flags + " --protocol multi_target -k 10");
  REQUIRE(m.rc == 0);
  CHECK(json::parse(slurp(ws / "run/report.json"))["metrics"].contains("H@10"));

  const auto x = ws.run("export " + flags);
  REQUIRE(x.rc == 0);
  const auto items = json::parse(ws.run("inspect " + q(ws / "run/items.lneb")).out);
  CHECK(items["dim"] == 8);
  CHECK(items["count"] == 40);
  const auto users = json::parse(ws.run("inspect " + q(ws / "run/users.lneb")).out);
  CHECK(users["count"] == 30);
}

TEST_CASE("item tower C exports content-width vectors") {
  Workspace ws("variant_c");
  const auto flags = prepare(ws) + " --item-tower c";
  REQUIRE(ws.run("train " + flags).rc == 0);
  REQUIRE(ws.run("export " + flags).rc == 0);
  const auto items = json::parse(ws.run("inspect " + q(ws / "run/items.lneb")).out);
  CHECK(items["dim"] == 16);
}

TEST_CASE("eval against embeddings of another width fails cleanly") {
  Workspace ws("mismatch");
  const auto flags = prepare(ws);
  REQUIRE(ws.run("train " + flags).rc == 0);
  REQUIRE(ws.run("embed-pseudo --catalog " + q(ws / "data/catalog.tsv") + " --dim 12 -o " +
                 q(ws / "narrow.lneb")).rc == 0);
  const auto r = ws.run("eval " + flags + " --embeddings " + q(ws / "narrow.lneb"));
  CHECK(r.rc == 3);
  CHECK(r.err.find("DimMismatch") != std::string::npos);
}

TEST_CASE("the random-sample flag selects uniform stage-2 sampling") {
  Workspace ws("random_sample");
  const auto flags = prepare(ws);
  const auto on = json::parse(ws.run("train " + flags + " --print-config").out);
  CHECK(on["sampling"]["weighted"] == true);
  const auto off = json::parse(ws.run("train " + flags + " --random-sample --print-config").out);
  CHECK(off["sampling"]["weighted"] == false);
}

TEST_CASE("a saved run config reproduces the run") {
  Workspace ws("reproduce");
  const auto flags = prepare(ws);
  REQUIRE(ws.run("train " + flags + " --seed 13").rc == 0);
  REQUIRE(ws.run("eval " + flags + " --seed 13").rc == 0);
  const auto again = "-c " + q(ws / "run/run_config.json") + " -o " + q(ws / "again");
  REQUIRE(ws.run("train " + again).rc == 0);
  REQUIRE(ws.run("eval " + again).rc == 0);
  CHECK(slurp(ws / "run/checkpoint.lnck") == slurp(ws / "again/checkpoint.lnck"));
  CHECK(slurp(ws / "run/report.json") == slurp(ws / "again/report.json"));
}
