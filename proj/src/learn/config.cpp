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

#include "learn/config.hpp"

#include <algorithm>
#include <set>

#include "learn/error.hpp"

namespace learn::config {

namespace {

using nlohmann::json;

const std::set<std::string> kTopKeys = {
    "catalog",   "interactions",   "embeddings",      "output_dir",
    "checkpoint", "embedding_source", "train_view",   "loo_target_len",
    "split_ts",  "prompt_template", "seed",           "model",
    "sampling",  "optim",          "eval"};
const std::set<std::string> kModelKeys = {"preset",  "d_content", "d_model",
                                          "n_layers", "n_heads",  "d_out",
                                          "max_len", "item_tower"};
const std::set<std::string> kSamplingKeys = {"max_hist", "max_tar", "n_hist", "n_tar",
                                             "alpha",    "beta",    "weighted"};
const std::set<std::string> kOptimKeys = {
    "lr",         "weight_decay", "beta1",  "beta2",       "eps",
    "warmup_steps", "batch_size", "epochs", "temperature", "mask_same_id"};
const std::set<std::string> kEvalKeys = {"protocol", "ks", "held_out", "per_user_csv",
                                         "every_epochs"};

class Collector {
 public:
  void add(std::string p) { problems.push_back(std::move(p)); }

  void unknown_keys(const json& j, const std::set<std::string>& allowed,
                    const std::string& where) {
    if (!j.is_object()) {
      add(where + " must be an object");
      return;
    }
    for (const auto& [k, v] : j.items()) {
      if (!allowed.contains(k)) add("unknown key " + where + "." + k);
    }
  }

  template <class T>
  void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) return;
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception&) {
      add(where + "." + key + " has the wrong type");
    }
  }

  // Runs a parser that may throw Error and records its message.
  template <class F>
  void guard(F&& f) {
    try {
      f();
    } catch (const Error& e) {
      add(e.what());
    }
  }

  std::vector<std::string> problems;
};

EmbeddingSource parse_source(const std::string& s) {
  if (s == "content") return EmbeddingSource::kContent;
  if (s == "id") return EmbeddingSource::kId;
  throw Error(ErrorCode::kConfig, "embedding_source must be content or id, got '" + s + "'");
}

TrainView parse_view(const std::string& s) {
  if (s == "leave_one_out" || s == "loo") return TrainView::kLeaveOneOut;
  if (s == "timestamp") return TrainView::kTimestamp;
  throw Error(ErrorCode::kConfig,
              "train_view must be leave_one_out or timestamp, got '" + s + "'");
}

eval::HeldOut parse_held_out(const std::string& s) {
  if (s == "test") return eval::HeldOut::kTest;
  if (s == "valid") return eval::HeldOut::kValid;
  throw Error(ErrorCode::kConfig, "eval.held_out must be test or valid, got '" + s + "'");
}

}  // namespace

std::string_view source_name(EmbeddingSource s) {
  return s == EmbeddingSource::kContent ? "content" : "id";
}

std::string_view view_name(TrainView v) {
  return v == TrainView::kLeaveOneOut ? "leave_one_out" : "timestamp";
}

std::string RunConfig::checkpoint_path() const {
  if (!checkpoint.empty()) return checkpoint;
  return output_dir + "/checkpoint.lnck";
}

std::vector<std::string> RunConfig::problems(const std::string& command) const {
  std::vector<std::string> out;
  const bool train = command == "train";
  const bool uses_data = train || command == "eval" || command == "export";
  if (uses_data && interactions.empty()) out.emplace_back("interactions path is required");
  if (uses_data && embedding_source == EmbeddingSource::kContent && embeddings.empty()) {
    out.emplace_back("embeddings path is required for content embeddings");
  }
  if (train && embedding_source == EmbeddingSource::kId && catalog.empty()) {
    out.emplace_back("catalog path is required for id embeddings");
  }
  if (output_dir.empty()) out.emplace_back("output_dir must not be empty");
  if (model_preset != "desk" && model_preset != "base") {
    out.emplace_back("model.preset must be desk or base");
  }
  // d_content may be left at 0 and filled from the embedding file.
  auto m = model;
  if (m.d_content == 0) m.d_content = m.item_tower == pal::ItemTowerVariant::kC ? m.d_out : 1;
  for (auto& p : m.problems()) out.push_back(std::move(p));
  for (auto& p : sampling.problems()) out.push_back(std::move(p));
  for (auto& p : optim.problems()) out.push_back(std::move(p));
  if (train_view == TrainView::kLeaveOneOut && loo_target_len == 0) {
    out.emplace_back("loo_target_len must be >= 1");
  }
  const bool needs_split = (train && train_view == TrainView::kTimestamp) ||
                           eval.protocol == eval::Protocol::kMultiTarget;
  if (uses_data && needs_split && !split_ts) {
    out.emplace_back("split_ts is required for the timestamp view and multi_target protocol");
  }
  if (eval.ks.empty()) out.emplace_back("eval.ks must not be empty");
  if (std::find(eval.ks.begin(), eval.ks.end(), 0u) != eval.ks.end()) {
    out.emplace_back("eval.ks entries must be >= 1");
  }
  try {
    (void)cex::PromptTemplate::parse(prompt_template);
  } catch (const Error& e) {
    out.emplace_back(e.what());
  }
  return out;
}

nlohmann::ordered_json RunConfig::to_json() const {
  nlohmann::ordered_json j;
  j["catalog"] = catalog;
  j["interactions"] = interactions;
  j["embeddings"] = embeddings;
  j["output_dir"] = output_dir;
  j["checkpoint"] = checkpoint;
  j["embedding_source"] = std::string(source_name(embedding_source));
  j["train_view"] = std::string(view_name(train_view));
  j["loo_target_len"] = loo_target_len;
  j["split_ts"] = split_ts ? nlohmann::ordered_json(*split_ts) : nlohmann::ordered_json();
  j["prompt_template"] = prompt_template;
  j["seed"] = seed;
  nlohmann::ordered_json m;
  m["preset"] = model_preset;
  const auto model_json = model.to_json();
  for (const auto& [k, v] : model_json.items()) m[k] = v;
  j["model"] = std::move(m);
  j["sampling"] = sampling.to_json();
  j["optim"] = optim.to_json();
  nlohmann::ordered_json e;
  e["protocol"] = std::string(eval::protocol_name(eval.protocol));
  e["ks"] = eval.ks;
  e["held_out"] = eval.held_out == eval::HeldOut::kTest ? "test" : "valid";
  e["per_user_csv"] = eval.per_user_csv;
  e["every_epochs"] = eval.every_epochs;
  j["eval"] = std::move(e);
  return j;
}

RunConfig parse_run_config(const nlohmann::json& j) {
  RunConfig c;
  Collector col;
  col.unknown_keys(j, kTopKeys, "config");
  if (!j.is_object()) throw Error(ErrorCode::kConfig, "config must be a JSON object");

  col.read(j, "catalog", c.catalog, "config");
  col.read(j, "interactions", c.interactions, "config");
  col.read(j, "embeddings", c.embeddings, "config");
  col.read(j, "output_dir", c.output_dir, "config");
  col.read(j, "checkpoint", c.checkpoint, "config");
  col.read(j, "loo_target_len", c.loo_target_len, "config");
  col.read(j, "prompt_template", c.prompt_template, "config");
  col.read(j, "seed", c.seed, "config");
  if (j.contains("split_ts") && !j["split_ts"].is_null()) {
    data::Timestamp ts = 0;
    col.read(j, "split_ts", ts, "config");
    c.split_ts = ts;
  }
  std::string s;
  if (j.contains("embedding_source")) {
    col.read(j, "embedding_source", s, "config");
    col.guard([&] { c.embedding_source = parse_source(s); });
  }
  if (j.contains("train_view")) {
    col.read(j, "train_view", s, "config");
    col.guard([&] { c.train_view = parse_view(s); });
  }

  if (j.contains("model")) {
    const auto& m = j["model"];
    col.unknown_keys(m, kModelKeys, "model");
    col.read(m, "preset", c.model_preset, "model");
  }
  c.model = c.model_preset == "base" ? pal::PalConfig::base_scale(0)
                                      : pal::PalConfig::desk(0);
  if (j.contains("model") && j["model"].is_object()) {
    const auto& m = j["model"];
    col.read(m, "d_content", c.model.d_content, "model");
    col.read(m, "d_model", c.model.d_model, "model");
    col.read(m, "n_layers", c.model.n_layers, "model");
    col.read(m, "n_heads", c.model.n_heads, "model");
    col.read(m, "d_out", c.model.d_out, "model");
    col.read(m, "max_len", c.model.max_len, "model");
    if (m.contains("item_tower")) {
      col.read(m, "item_tower", s, "model");
      col.guard([&] { c.model.item_tower = pal::parse_variant(s); });
    }
  }

  if (j.contains("sampling")) {
    const auto& m = j["sampling"];
    col.unknown_keys(m, kSamplingKeys, "sampling");
    if (m.is_object()) {
      auto& t = c.sampling;
      col.read(m, "max_hist", t.max_hist, "sampling");
      col.read(m, "max_tar", t.max_tar, "sampling");
      col.read(m, "n_hist", t.n_hist, "sampling");
      col.read(m, "n_tar", t.n_tar, "sampling");
      col.read(m, "alpha", t.alpha, "sampling");
      col.read(m, "beta", t.beta, "sampling");
      col.read(m, "weighted", t.weighted, "sampling");
    }
  }
  if (j.contains("optim")) {
    const auto& m = j["optim"];
    col.unknown_keys(m, kOptimKeys, "optim");
    if (m.is_object()) {
      auto& t = c.optim;
      col.read(m, "lr", t.lr, "optim");
      col.read(m, "weight_decay", t.weight_decay, "optim");
      col.read(m, "beta1", t.beta1, "optim");
      col.read(m, "beta2", t.beta2, "optim");
      col.read(m, "eps", t.eps, "optim");
      col.read(m, "warmup_steps", t.warmup_steps, "optim");
      col.read(m, "batch_size", t.batch_size, "optim");
      col.read(m, "epochs", t.epochs, "optim");
      col.read(m, "temperature", t.temperature, "optim");
      col.read(m, "mask_same_id", t.mask_same_id, "optim");
    }
  }
  if (j.contains("eval")) {
    const auto& m = j["eval"];
    col.unknown_keys(m, kEvalKeys, "eval");
    if (m.is_object()) {
      if (m.contains("protocol")) {
        col.read(m, "protocol", s, "eval");
        col.guard([&] { c.eval.protocol = eval::parse_protocol(s); });
      }
      if (m.contains("held_out")) {
        col.read(m, "held_out", s, "eval");
        col.guard([&] { c.eval.held_out = parse_held_out(s); });
      }
      col.read(m, "ks", c.eval.ks, "eval");
      col.read(m, "per_user_csv", c.eval.per_user_csv, "eval");
      col.read(m, "every_epochs", c.eval.every_epochs, "eval");
    }
  }

  if (!col.problems.empty()) {
    for (auto& p : c.problems()) col.add(std::move(p));
    std::string msg = "invalid config:";
    for (const auto& p : col.problems) msg += "\n  " + p;
    throw Error(ErrorCode::kConfig, msg);
  }
  return c;
}

void validate(const RunConfig& cfg, const std::string& command) {
  const auto problems = cfg.problems(command);
  if (problems.empty()) return;
  std::string msg = "invalid config:";
  for (const auto& p : problems) msg += "\n  " + p;
  throw Error(ErrorCode::kConfig, msg);
}

nlohmann::json merge(nlohmann::json base, const nlohmann::json& patch) {
  if (!base.is_object() || !patch.is_object()) return patch;
  for (const auto& [k, v] : patch.items()) {
    if (base.contains(k) && base[k].is_object() && v.is_object()) {
      base[k] = merge(base[k], v);
    } else {
      base[k] = v;
    }
  }
  return base;
}

}  // namespace learn::config
