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

#include "learn/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>

#include "learn/data.hpp"
#include "learn/error.hpp"
#include "learn/nn/checkpoint.hpp"
#include "learn/rng.hpp"
#include "learn/training.hpp"

namespace learn::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
}

std::vector<data::ItemId> gallery_ids(const config::RunConfig& cfg,
                                      const cex::EmbeddingProvider& provider) {
  std::vector<data::ItemId> ids;
  if (!cfg.catalog.empty()) {
    ids = data::load_catalog(cfg.catalog).ids();
  } else {
    ids = provider.ids();
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<data::InteractionSequence> eval_users(const config::RunConfig& cfg) {
  if (cfg.eval.protocol == eval::Protocol::kMultiTarget) {
    return data::load_interactions(cfg.interactions, *cfg.split_ts);
  }
  return data::load_event_log(cfg.interactions);
}

}  // namespace

std::size_t embed_pseudo(const fs::path& catalog, std::size_t dim,
                         const std::string& prompt_template, const fs::path& out) {
  if (dim == 0) throw Error(ErrorCode::kConfig, "dim must be >= 1");
  const auto tmpl = cex::PromptTemplate::parse(prompt_template);
  const auto cat = data::load_catalog(catalog);
  const auto records = cex::embed_catalog(cat, dim, tmpl);
  cex::store_write(out, dim, records);
  return records.size();
}

ordered_json TrainResult::to_json() const {
  ordered_json j;
  j["checkpoint"] = checkpoint;
  j["examples"] = examples;
  j["steps"] = steps;
  j["final_loss"] = final_loss;
  return j;
}

TrainResult train(const config::RunConfig& cfg_in, std::ostream* log) {
  config::validate(cfg_in, "train");
  config::RunConfig cfg = cfg_in;

  std::unique_ptr<cex::EmbeddingProvider> provider;
  training::IdEmbeddingTable* id_table = nullptr;
  if (cfg.embedding_source == config::EmbeddingSource::kContent) {
    provider = std::make_unique<cex::EmbeddingStore>(cex::store_open(cfg.embeddings));
  } else {
    auto ids = data::load_catalog(cfg.catalog).ids();
    std::sort(ids.begin(), ids.end());
    const std::size_t dim = cfg.model.d_content == 0 ? 64 : cfg.model.d_content;
    auto table = std::make_unique<training::IdEmbeddingTable>(
        std::move(ids), dim, Rng::derive(cfg.seed, 0x1d).next_u64());
    id_table = table.get();
    provider = std::move(table);
  }
  if (cfg.model.d_content == 0) {
    cfg.model.d_content = provider->dim();
  } else if (cfg.model.d_content != provider->dim()) {
    throw Error(ErrorCode::kDimMismatch,
                "model.d_content " + std::to_string(cfg.model.d_content) +
                    " differs from embedding dim " + std::to_string(provider->dim()));
  }
  cfg.model = cfg.model.resolved();

  std::vector<training::TrainExample> examples;
  if (cfg.train_view == config::TrainView::kLeaveOneOut) {
    const auto seqs = data::load_event_log(cfg.interactions);
    examples = training::examples_from_leave_one_out(seqs, cfg.loo_target_len);
  } else {
    const auto seqs = data::load_interactions(cfg.interactions, *cfg.split_ts);
    examples = training::examples_from_split(seqs);
  }
  if (examples.size() < 2) {
    throw Error(ErrorCode::kEmptyInput,
                "need at least 2 training users, found " + std::to_string(examples.size()));
  }

  ensure_dir(cfg.output_dir);
  write_text(fs::path(cfg.output_dir) / "run_config.json", cfg.to_json().dump(2) + "\n");

  pal::PalModel model(cfg.model, cfg.seed);
  training::Trainer trainer(model, *provider, cfg.sampling, cfg.optim, cfg.seed, id_table);

  std::vector<data::InteractionSequence> valid_users;
  std::vector<data::ItemId> gallery;
  if (cfg.eval.every_epochs > 0) {
    valid_users = eval_users(cfg);
    gallery = gallery_ids(cfg, *provider);
  }
  std::ofstream metrics(fs::path(cfg.output_dir) / "metrics.jsonl", std::ios::trunc);
  if (!metrics) throw Error(ErrorCode::kIo, "cannot write metrics.jsonl");

  training::EpochCallback on_epoch = [&](std::size_t epoch) -> std::optional<json> {
    if (cfg.eval.every_epochs == 0 || epoch % cfg.eval.every_epochs != 0) return std::nullopt;
    const eval::LearnScorer scorer(model, *provider);
    const auto report = eval::evaluate(scorer, valid_users, gallery, cfg.eval.protocol,
                                       cfg.eval.ks, eval::HeldOut::kValid);
    json m = json::object();
    for (const auto& [k, v] : report.metrics) m[k] = v;
    return m;
  };

  const auto epochs = trainer.fit(examples, on_epoch);
  for (const auto& e : epochs) {
    metrics << e.to_json().dump() << '\n';
    if (log != nullptr) *log << "epoch " << e.epoch << " loss " << e.loss << '\n';
  }

  ordered_json header;
  header["model"] = cfg.model.to_json();
  header["embedding_source"] = std::string(config::source_name(cfg.embedding_source));
  header["seed"] = cfg.seed;
  header["steps"] = trainer.steps();
  auto params = model.parameters();
  if (id_table != nullptr) {
    header["id_items"] = id_table->ids();
    params.push_back({training::IdEmbeddingTable::kParamName, id_table->table()});
  }
  const auto ckpt = cfg.checkpoint_path();
  if (fs::path(ckpt).has_parent_path()) ensure_dir(fs::path(ckpt).parent_path());
  nn::save_checkpoint(ckpt, header.dump(), params);

  TrainResult result;
  result.checkpoint = ckpt;
  result.examples = examples.size();
  result.steps = trainer.steps();
  result.final_loss = epochs.empty() ? 0.0 : epochs.back().loss;
  return result;
}

LoadedModel load_model(const fs::path& checkpoint, const fs::path& embeddings) {
  const auto ckpt = nn::load_checkpoint(checkpoint);
  LoadedModel out;
  try {
    out.header = json::parse(ckpt.header_json);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, "checkpoint header is not valid JSON: " + std::string(e.what()));
  }
  if (!out.header.contains("model")) {
    throw Error(ErrorCode::kParse, "checkpoint header has no model config");
  }
  const auto cfg = pal::PalConfig::from_json(out.header["model"]);
  out.model = std::make_unique<pal::PalModel>(cfg, 0);
  auto params = out.model->parameters();

  if (out.header.value("embedding_source", std::string("content")) == "id") {
    auto ids = out.header.at("id_items").get<std::vector<data::ItemId>>();
    auto table = std::make_unique<training::IdEmbeddingTable>(std::move(ids), cfg.d_content, 0);
    params.push_back({training::IdEmbeddingTable::kParamName, table->table()});
    out.provider = std::move(table);
  } else {
    if (embeddings.empty()) {
      throw Error(ErrorCode::kConfig, "embeddings path is required for this checkpoint");
    }
    auto store = std::make_unique<cex::EmbeddingStore>(cex::store_open(embeddings));
    if (store->dim() != cfg.d_content) {
      throw Error(ErrorCode::kDimMismatch,
                  "embedding dim " + std::to_string(store->dim()) +
                      " differs from checkpoint d_content " + std::to_string(cfg.d_content));
    }
    out.provider = std::move(store);
  }
  nn::restore_params(ckpt, params);
  return out;
}

eval::Report evaluate(const config::RunConfig& cfg) {
  config::validate(cfg, "eval");
  const auto loaded = load_model(cfg.checkpoint_path(), cfg.embeddings);
  const eval::LearnScorer scorer(*loaded.model, *loaded.provider);
  const auto users = eval_users(cfg);
  const auto gallery = gallery_ids(cfg, *loaded.provider);
  auto report = eval::evaluate(scorer, users, gallery, cfg.eval.protocol, cfg.eval.ks,
                               cfg.eval.held_out);
  ensure_dir(cfg.output_dir);
  write_text(fs::path(cfg.output_dir) / "report.json", report.to_json().dump(2) + "\n");
  if (cfg.eval.per_user_csv) {
    report.write_per_user_csv(fs::path(cfg.output_dir) / "ranks.csv");
  }
  return report;
}

ordered_json ExportResult::to_json() const {
  ordered_json j;
  j["items"] = items_path;
  j["users"] = users_path;
  j["n_items"] = items;
  j["n_users"] = users;
  j["dim"] = dim;
  return j;
}

ExportResult export_embeddings(const config::RunConfig& cfg) {
  config::validate(cfg, "export");
  const auto loaded = load_model(cfg.checkpoint_path(), cfg.embeddings);
  const eval::LearnScorer scorer(*loaded.model, *loaded.provider);
  ensure_dir(cfg.output_dir);

  ExportResult out;
  out.dim = scorer.dim();
  std::vector<cex::EmbeddingRecord> items;
  for (const auto id : gallery_ids(cfg, *loaded.provider)) {
    items.push_back({id, scorer.item_embedding(id)});
  }
  out.items = items.size();
  out.items_path = (fs::path(cfg.output_dir) / "items.lneb").string();
  cex::store_write(out.items_path, out.dim, items);

  std::vector<cex::EmbeddingRecord> users;
  for (const auto& seq : data::load_event_log(cfg.interactions)) {
    const auto history = seq.items();
    if (history.empty()) continue;
    users.push_back({seq.user_id, scorer.user_embedding(history)});
  }
  out.users = users.size();
  out.users_path = (fs::path(cfg.output_dir) / "users.lneb").string();
  cex::store_write(out.users_path, out.dim, users);
  return out;
}

ordered_json inspect(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() != 4) throw Error(ErrorCode::kBadMagic, path.string() + " is too short");
  in.close();

  ordered_json j;
  if (std::equal(magic, magic + 4, cex::kStoreMagic)) {
    const auto h = cex::read_store_header(path);
    j["format"] = "LNEB";
    j["version"] = h.version;
    j["dim"] = h.dim;
    j["count"] = h.count;
    return j;
  }
  if (std::equal(magic, magic + 4, nn::kCheckpointMagic)) {
    const auto ckpt = nn::load_checkpoint(path);
    j["format"] = "LNCK";
    j["version"] = nn::kCheckpointVersion;
    try {
      j["header"] = ordered_json::parse(ckpt.header_json);
    } catch (const json::exception&) {
      j["header"] = ckpt.header_json;
    }
    ordered_json params = ordered_json::array();
    std::size_t scalars = 0;
    for (const auto& a : ckpt.arrays) {
      params.push_back({{"name", a.name}, {"shape", a.shape}});
      scalars += a.data.size();
    }
    j["n_arrays"] = ckpt.arrays.size();
    j["n_scalars"] = scalars;
    j["arrays"] = std::move(params);
    return j;
  }
  throw Error(ErrorCode::kBadMagic, path.string() + " is neither an LNEB nor an LNCK file");
}

ordered_json write_synthetic(const synthetic::SyntheticConfig& sc, const fs::path& dir) {
  const auto d = synthetic::make_synthetic(sc);
  ensure_dir(dir);
  const auto catalog = dir / "catalog.tsv";
  const auto interactions = dir / "interactions.tsv";
  const auto embeddings = dir / "embeddings.lneb";
  data::write_catalog(catalog, d.catalog);
  data::write_interactions(interactions, d.sequences);
  cex::store_write(embeddings, sc.dim, d.embeddings);

  ordered_json cfg;
  cfg["catalog"] = catalog.string();
  cfg["interactions"] = interactions.string();
  cfg["embeddings"] = embeddings.string();
  cfg["output_dir"] = (dir / "run").string();
  cfg["split_ts"] = sc.split_ts;
  cfg["model"] = {{"d_model", 64}, {"n_layers", 2}, {"n_heads", 4},
                  {"d_out", 64},   {"max_len", 16}};
  cfg["sampling"] = {{"max_hist", 16}, {"max_tar", 16}};
  cfg["optim"] = {{"batch_size", 16}, {"epochs", 20}};
  write_text(dir / "config.json", cfg.dump(2) + "\n");

  ordered_json j;
  j["dir"] = dir.string();
  j["items"] = d.catalog.size();
  j["users"] = d.sequences.size();
  j["dim"] = sc.dim;
  j["config"] = (dir / "config.json").string();
  return j;
}

std::size_t write_prompts(const fs::path& catalog, const std::string& prompt_template,
                          const fs::path& out) {
  const auto tmpl = cex::PromptTemplate::parse(prompt_template);
  const auto cat = data::load_catalog(catalog);
  std::string text;
  for (const auto id : cat.ids()) {
    text += std::to_string(id) + '\t' + cex::compose_prompt(cat.at(id), tmpl) + '\n';
  }
  write_text(out, text);
  return cat.size();
}

}  // namespace learn::pipeline
