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
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "learn/cex.hpp"
#include "learn/config.hpp"
#include "learn/eval.hpp"
#include "learn/pal.hpp"
#include "learn/synthetic.hpp"

namespace learn::pipeline {

// Writes an LNEB file with a pseudo-embedding for every catalog item.
std::size_t embed_pseudo(const std::filesystem::path& catalog, std::size_t dim,
                         const std::string& prompt_template,
                         const std::filesystem::path& out);

struct TrainResult {
  std::string checkpoint;
  std::size_t examples = 0;
  std::uint64_t steps = 0;
  double final_loss = 0.0;

  nlohmann::ordered_json to_json() const;
};

// Writes run_config.json, metrics.jsonl and the checkpoint under
// cfg.output_dir. Progress lines go to `log` when given.
TrainResult train(const config::RunConfig& cfg, std::ostream* log = nullptr);

// A trained model with the content source it was trained against.
struct LoadedModel {
  std::unique_ptr<pal::PalModel> model;
  std::unique_ptr<cex::EmbeddingProvider> provider;
  nlohmann::json header;
};

// `embeddings` is ignored for checkpoints that carry their own id table.
LoadedModel load_model(const std::filesystem::path& checkpoint,
                       const std::filesystem::path& embeddings);

// Writes report.json (and ranks.csv when requested) under cfg.output_dir.
eval::Report evaluate(const config::RunConfig& cfg);

struct ExportResult {
  std::string items_path;
  std::string users_path;
  std::size_t items = 0;
  std::size_t users = 0;
  std::size_t dim = 0;

  nlohmann::ordered_json to_json() const;
};

// items.lneb holds the item tower output for every gallery item; users.lneb
// holds each user's embedding from their full history, keyed by user id.
ExportResult export_embeddings(const config::RunConfig& cfg);

// Header summary of an LNEB or LNCK file.
nlohmann::ordered_json inspect(const std::filesystem::path& path);

// catalog.tsv, interactions.tsv, embeddings.lneb and a starter config.json.
nlohmann::ordered_json write_synthetic(const synthetic::SyntheticConfig& cfg,
                                       const std::filesystem::path& dir);

// One "item_id<TAB>prompt" line per catalog item.
std::size_t write_prompts(const std::filesystem::path& catalog,
                          const std::string& prompt_template,
                          const std::filesystem::path& out);

}  // namespace learn::pipeline
