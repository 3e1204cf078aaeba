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

// learn: command-line front end over the C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <algorithm>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "learn/learn.h"

namespace {

using nlohmann::json;

constexpr int kExitConfig = 2;

int report_failure(learn_status st) {
  std::cerr << "learn: " << learn_status_name(st) << ": " << learn_last_error() << "\n";
  return learn_status_exit_code(st);
}

// Runs a call that returns a JSON string, prints it and frees it.
template <class F>
int finish(F&& call) {
  char* result = nullptr;
  const learn_status st = call(&result);
  if (st != LEARN_OK) return report_failure(st);
  if (result != nullptr) {
    std::cout << result << "\n";
    learn_string_free(result);
  }
  return 0;
}

struct ConfigFlags {
  std::string config_file;
  std::optional<std::string> catalog, interactions, embeddings, out, checkpoint;
  std::optional<std::string> embedding_source, train_view, item_tower, protocol,
      held_out, prompt_template, preset;
  std::optional<std::int64_t> split_ts;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs, batch_size, loo_target_len, d_model, n_layers,
      n_heads, d_out, max_len, max_hist, max_tar, n_hist, n_tar, eval_every;
  std::optional<double> lr, weight_decay, temperature;
  bool random_sample = false;
  bool no_id_mask = false;
  bool ranks_csv = false;
  std::vector<std::size_t> ks;
  std::vector<std::string> sets;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f) {
  cmd->add_option("-c,--config", f.config_file, "run config JSON file");
  cmd->add_option("--catalog", f.catalog, "item catalog TSV");
  cmd->add_option("--interactions", f.interactions, "interaction log TSV");
  cmd->add_option("--embeddings", f.embeddings, "LNEB content embeddings");
  cmd->add_option("-o,--out", f.out, "output directory");
  cmd->add_option("--checkpoint", f.checkpoint, "checkpoint path");
  cmd->add_option("--embedding-source", f.embedding_source, "content | id");
  cmd->add_option("--train-view", f.train_view, "leave_one_out | timestamp");
  cmd->add_option("--loo-target-len", f.loo_target_len);
  cmd->add_option("--split-ts", f.split_ts, "history/target timestamp split");
  cmd->add_option("--prompt-template", f.prompt_template, "3 | 6 | field,list");
  cmd->add_option("--seed", f.seed);
  cmd->add_option("--preset", f.preset, "desk | base");
  cmd->add_option("--item-tower", f.item_tower, "A | B | C");
  cmd->add_option("--d-model", f.d_model);
  cmd->add_option("--layers", f.n_layers);
  cmd->add_option("--heads", f.n_heads);
  cmd->add_option("--d-out", f.d_out);
  cmd->add_option("--max-len", f.max_len);
  cmd->add_option("--max-hist", f.max_hist);
  cmd->add_option("--max-tar", f.max_tar);
  cmd->add_option("--n-hist", f.n_hist);
  cmd->add_option("--n-tar", f.n_tar);
  cmd->add_flag("--random-sample", f.random_sample, "uniform stage-2 selection");
  cmd->add_option("--epochs", f.epochs);
  cmd->add_option("--batch-size", f.batch_size);
  cmd->add_option("--lr", f.lr);
  cmd->add_option("--weight-decay", f.weight_decay);
  cmd->add_option("--temperature", f.temperature);
  cmd->add_flag("--no-id-mask", f.no_id_mask, "keep same-id negatives");
  cmd->add_option("--protocol", f.protocol, "leave_one_out | multi_target");
  cmd->add_option("-k,--k", f.ks, "cutoffs, repeatable");
  cmd->add_option("--held-out", f.held_out, "test | valid");
  cmd->add_flag("--ranks-csv", f.ranks_csv, "write per-user ranks.csv");
  cmd->add_option("--eval-every", f.eval_every, "validation metrics every N epochs");
  cmd->add_option("--set", f.sets, "dotted.key=json_value override, repeatable");
}

template <class T>
void put(json& j, const char* section, const char* key, const std::optional<T>& v) {
  if (!v) return;
  if (section == nullptr) {
    j[key] = *v;
  } else {
    j[section][key] = *v;
  }
}

json flag_patch(const ConfigFlags& f) {
  json j = json::object();
  put(j, nullptr, "catalog", f.catalog);
  put(j, nullptr, "interactions", f.interactions);
  put(j, nullptr, "embeddings", f.embeddings);
  put(j, nullptr, "output_dir", f.out);
  put(j, nullptr, "checkpoint", f.checkpoint);
  put(j, nullptr, "embedding_source", f.embedding_source);
  put(j, nullptr, "train_view", f.train_view);
  put(j, nullptr, "loo_target_len", f.loo_target_len);
  put(j, nullptr, "split_ts", f.split_ts);
  put(j, nullptr, "prompt_template", f.prompt_template);
  put(j, nullptr, "seed", f.seed);
  put(j, "model", "preset", f.preset);
  put(j, "model", "item_tower", f.item_tower);
  put(j, "model", "d_model", f.d_model);
  put(j, "model", "n_layers", f.n_layers);
  put(j, "model", "n_heads", f.n_heads);
  put(j, "model", "d_out", f.d_out);
  put(j, "model", "max_len", f.max_len);
  put(j, "sampling", "max_hist", f.max_hist);
  put(j, "sampling", "max_tar", f.max_tar);
  put(j, "sampling", "n_hist", f.n_hist);
  put(j, "sampling", "n_tar", f.n_tar);
  if (f.random_sample) j["sampling"]["weighted"] = false;
  put(j, "optim", "epochs", f.epochs);
  put(j, "optim", "batch_size", f.batch_size);
  put(j, "optim", "lr", f.lr);
  put(j, "optim", "weight_decay", f.weight_decay);
  put(j, "optim", "temperature", f.temperature);
  if (f.no_id_mask) j["optim"]["mask_same_id"] = false;
  put(j, "eval", "protocol", f.protocol);
  put(j, "eval", "held_out", f.held_out);
  put(j, "eval", "every_epochs", f.eval_every);
  if (!f.ks.empty()) j["eval"]["ks"] = f.ks;
  if (f.ranks_csv) j["eval"]["per_user_csv"] = true;
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value: " + s);
    json value;
    try {
      value = json::parse(s.substr(eq + 1));
    } catch (const json::exception&) {
      value = s.substr(eq + 1);  // bare strings
    }
    std::string key = s.substr(0, eq);
    std::replace(key.begin(), key.end(), '.', '/');
    j[json::json_pointer("/" + key)] = value;
  }
  return j;
}

// flags > file > defaults; the library fills the defaults.
std::optional<std::string> build_config(const ConfigFlags& f) {
  json base = json::object();
  if (!f.config_file.empty()) {
    std::ifstream in(f.config_file);
    if (!in) {
      std::cerr << "learn: Config: cannot read config file " << f.config_file << "\n";
      return std::nullopt;
    }
    try {
      base = json::parse(in);
    } catch (const json::exception& e) {
      std::cerr << "learn: Config: " << f.config_file << ": " << e.what() << "\n";
      return std::nullopt;
    }
  }
  json patch;
  try {
    patch = flag_patch(f);
  } catch (const std::exception& e) {
    std::cerr << "learn: Config: " << e.what() << "\n";
    return std::nullopt;
  }
  base.merge_patch(patch);
  return base.dump();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LEARN: content embeddings aligned to collaborative user/item embeddings"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(learn_version()));

  std::string catalog, out, tmpl = "3";
  std::uint32_t dim = 64;
  auto* embed = app.add_subcommand("embed-pseudo", "deterministic stand-in content embeddings");
  embed->add_option("--catalog", catalog, "item catalog TSV")->required();
  embed->add_option("--dim", dim, "embedding dimension");
  embed->add_option("--prompt-template", tmpl, "3 | 6 | field,list");
  embed->add_option("-o,--out", out, "output LNEB file")->required();

  ConfigFlags train_flags, eval_flags, export_flags;
  bool print_config = false;
  auto* train = app.add_subcommand("train", "train the alignment towers");
  add_config_flags(train, train_flags);
  train->add_flag("--print-config", print_config, "print the resolved config and exit");
  auto* evalc = app.add_subcommand("eval", "rank the catalog and report metrics");
  add_config_flags(evalc, eval_flags);
  auto* exportc = app.add_subcommand("export", "write item and user embeddings as LNEB");
  add_config_flags(exportc, export_flags);

  std::string inspect_path;
  auto* inspect = app.add_subcommand("inspect", "print the header of an LNEB or LNCK file");
  inspect->add_option("path", inspect_path)->required();

  std::string synth_dir, synth_opts;
  auto* synth = app.add_subcommand("synth", "write a toy clustered dataset");
  synth->add_option("-o,--out", synth_dir, "output directory")->required();
  synth->add_option("--options", synth_opts, "JSON overrides of the generator");

  std::string prompts_out;
  auto* prompts = app.add_subcommand("prompts", "write composed prompts, one per item");
  prompts->add_option("--catalog", catalog)->required();
  prompts->add_option("--prompt-template", tmpl);
  prompts->add_option("-o,--out", prompts_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  if (embed->parsed()) {
    std::uint64_t n = 0;
    const auto st = learn_embed_pseudo(catalog.c_str(), dim, tmpl.c_str(), out.c_str(), &n);
    if (st != LEARN_OK) return report_failure(st);
    std::cout << json{{"out", out}, {"count", n}, {"dim", dim}}.dump() << "\n";
    return 0;
  }
  if (prompts->parsed()) {
    std::uint64_t n = 0;
    const auto st = learn_write_prompts(catalog.c_str(), tmpl.c_str(), prompts_out.c_str(), &n);
    if (st != LEARN_OK) return report_failure(st);
    std::cout << json{{"out", prompts_out}, {"count", n}}.dump() << "\n";
    return 0;
  }
  if (inspect->parsed()) return finish([&](char** r) { return learn_inspect(inspect_path.c_str(), r); });
  if (synth->parsed()) {
    return finish([&](char** r) { return learn_synth(synth_dir.c_str(), synth_opts.c_str(), r); });
  }

  const ConfigFlags& flags = train->parsed() ? train_flags
                             : evalc->parsed() ? eval_flags
                                               : export_flags;
  const auto cfg = build_config(flags);
  if (!cfg) return kExitConfig;
  if (train->parsed()) {
    if (print_config) {
      return finish([&](char** r) { return learn_config_resolve(cfg->c_str(), r); });
    }
    return finish([&](char** r) { return learn_train(cfg->c_str(), r); });
  }
  if (evalc->parsed()) return finish([&](char** r) { return learn_eval(cfg->c_str(), r); });
  return finish([&](char** r) { return learn_export(cfg->c_str(), r); });
}
