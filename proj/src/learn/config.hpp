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
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "learn/data.hpp"
#include "learn/eval.hpp"
#include "learn/pal.hpp"
#include "learn/training.hpp"

namespace learn::config {

enum class EmbeddingSource { kContent, kId };
enum class TrainView { kLeaveOneOut, kTimestamp };

struct EvalConfig {
  eval::Protocol protocol = eval::Protocol::kLeaveOneOut;
  std::vector<std::size_t> ks = {10};
  eval::HeldOut held_out = eval::HeldOut::kTest;
  bool per_user_csv = false;
  // Evaluate on the valid item every N epochs during training (0 = never).
  std::size_t every_epochs = 0;
};

// Everything a run needs. Serialized verbatim next to its artifacts.
struct RunConfig {
  std::string catalog;
  std::string interactions;
  std::string embeddings;
  std::string output_dir = "run";
  // Defaults to <output_dir>/checkpoint.lnck.
  std::string checkpoint;

  EmbeddingSource embedding_source = EmbeddingSource::kContent;
  TrainView train_view = TrainView::kLeaveOneOut;
  std::size_t loo_target_len = 3;
  std::optional<data::Timestamp> split_ts;
  std::string prompt_template = "3";
  std::uint64_t seed = 0;

  // "desk" or "base"; explicit model keys override the preset.
  std::string model_preset = "desk";
  pal::PalConfig model = pal::PalConfig::desk(0);
  training::SamplingConfig sampling;
  training::OptimConfig optim;
  EvalConfig eval;

  std::string checkpoint_path() const;

  // Every problem at once; empty when the config can run `command`
  // ("train", "eval", "export" or "" for structure only).
  std::vector<std::string> problems(const std::string& command = "") const;

  nlohmann::ordered_json to_json() const;
};

// Parses over the defaults. Unknown keys, wrong types and bad enum values
// are collected, then raised together as a single Config error.
RunConfig parse_run_config(const nlohmann::json& j);

// Throws Config listing every problem.
void validate(const RunConfig& cfg, const std::string& command);

// Recursive object merge; `patch` wins.
nlohmann::json merge(nlohmann::json base, const nlohmann::json& patch);

std::string_view source_name(EmbeddingSource s);
std::string_view view_name(TrainView v);

}  // namespace learn::config
