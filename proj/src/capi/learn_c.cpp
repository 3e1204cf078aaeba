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

#include "learn/learn.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <optional>
#include <string>

#include "json.hpp"
#include "learn/config.hpp"
#include "learn/error.hpp"
#include "learn/eval.hpp"
#include "learn/pipeline.hpp"

struct learn_store {
  learn::cex::EmbeddingStore store;
};

struct learn_model {
  learn::pipeline::LoadedModel loaded;
  std::unique_ptr<learn::eval::LearnScorer> scorer;
};

namespace {

thread_local std::string g_last_error;
thread_local std::optional<std::uint64_t> g_last_subject;

learn_status to_status(learn::ErrorCode code) {
  return static_cast<learn_status>(static_cast<int>(code) + 1);
}

learn_status fail(learn_status status, std::string message,
                  std::optional<std::uint64_t> subject = std::nullopt) {
  g_last_error = std::move(message);
  g_last_subject = subject;
  return status;
}

// Runs `f`, translating every exception into a status.
template <class F>
learn_status guarded(F&& f) {
  try {
    f();
    return LEARN_OK;
  } catch (const learn::Error& e) {
    return fail(to_status(e.code()), e.what(), e.subject());
  } catch (const nlohmann::json::exception& e) {
    return fail(LEARN_ERR_PARSE, e.what());
  } catch (const std::bad_alloc&) {
    return fail(LEARN_ERR_RUNTIME, "out of memory");
  } catch (const std::exception& e) {
    return fail(LEARN_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(LEARN_ERR_INTERNAL, "unknown exception");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw learn::Error(learn::ErrorCode::kInvalidArgument, what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void put_result(char** result, const std::string& text) {
  if (result != nullptr) *result = dup_string(text);
}

learn::config::RunConfig parse_config(const char* text) {
  require(text != nullptr, "config_json is NULL");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw learn::Error(learn::ErrorCode::kConfig,
                       std::string("config is not valid JSON: ") + e.what());
  }
  return learn::config::parse_run_config(j);
}

void copy_out(const std::vector<float>& v, float* out, size_t capacity) {
  require(out != nullptr, "output buffer is NULL");
  if (capacity < v.size()) {
    throw learn::Error(learn::ErrorCode::kInvalidArgument,
                       "output buffer holds " + std::to_string(capacity) +
                           " floats, need " + std::to_string(v.size()));
  }
  std::memcpy(out, v.data(), v.size() * sizeof(float));
}

}  // namespace

extern "C" {

const char* learn_version(void) { return "0.1.0"; }

const char* learn_status_name(learn_status status) {
  if (status == LEARN_OK) return "Ok";
  if (status == LEARN_ERR_INTERNAL) return "Internal";
  const int code = static_cast<int>(status) - 1;
  if (code < 0 || code > static_cast<int>(learn::ErrorCode::kRuntime)) return "Unknown";
  return learn::error_code_name(static_cast<learn::ErrorCode>(code)).data();
}

int learn_status_exit_code(learn_status status) {
  switch (status) {
    case LEARN_OK:
      return 0;
    case LEARN_ERR_CONFIG:
    case LEARN_ERR_BAD_HYPERPARAMS:
    case LEARN_ERR_INVALID_ARGUMENT:
      return 2;
    case LEARN_ERR_IO:
    case LEARN_ERR_PARSE:
    case LEARN_ERR_DUPLICATE_ID:
    case LEARN_ERR_UNSORTED_INPUT:
    case LEARN_ERR_TOO_SHORT:
    case LEARN_ERR_EMPTY_INPUT:
    case LEARN_ERR_BAD_MAGIC:
    case LEARN_ERR_BAD_VERSION:
    case LEARN_ERR_DIM_MISMATCH:
    case LEARN_ERR_MISSING_ITEM:
    case LEARN_ERR_EMPTY_INDEX:
    case LEARN_ERR_EMPTY_TARGETS:
      return 3;
    default:
      return 4;
  }
}

const char* learn_last_error(void) { return g_last_error.c_str(); }

int learn_last_error_subject(uint64_t* subject) {
  if (!g_last_subject) return 0;
  if (subject != nullptr) *subject = *g_last_subject;
  return 1;
}

void learn_string_free(char* s) { std::free(s); }

learn_status learn_store_open(const char* path, learn_store** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "path and out must not be NULL");
    *out = new learn_store{learn::cex::store_open(path)};
  });
}

void learn_store_close(learn_store* store) { delete store; }

size_t learn_store_dim(const learn_store* store) {
  return store == nullptr ? 0 : store->store.dim();
}

size_t learn_store_count(const learn_store* store) {
  return store == nullptr ? 0 : store->store.count();
}

learn_status learn_store_lookup(const learn_store* store, uint64_t item_id, float* out,
                                size_t capacity) {
  return guarded([&] {
    require(store != nullptr, "store is NULL");
    const auto v = store->store.lookup(item_id);
    copy_out({v.begin(), v.end()}, out, capacity);
  });
}

learn_status learn_embed_pseudo(const char* catalog_path, uint32_t dim,
                                const char* prompt_template, const char* out_path,
                                uint64_t* count) {
  return guarded([&] {
    require(catalog_path != nullptr && out_path != nullptr, "paths must not be NULL");
    const auto n = learn::pipeline::embed_pseudo(
        catalog_path, dim, prompt_template ? prompt_template : "3", out_path);
    if (count != nullptr) *count = n;
  });
}

learn_status learn_write_prompts(const char* catalog_path, const char* prompt_template,
                                 const char* out_path, uint64_t* count) {
  return guarded([&] {
    require(catalog_path != nullptr && out_path != nullptr, "paths must not be NULL");
    const auto n = learn::pipeline::write_prompts(
        catalog_path, prompt_template ? prompt_template : "3", out_path);
    if (count != nullptr) *count = n;
  });
}

learn_status learn_model_load(const char* checkpoint_path, const char* embeddings_path,
                              learn_model** out) {
  return guarded([&] {
    require(checkpoint_path != nullptr && out != nullptr,
            "checkpoint_path and out must not be NULL");
    auto m = std::make_unique<learn_model>();
    m->loaded = learn::pipeline::load_model(checkpoint_path,
                                            embeddings_path ? embeddings_path : "");
    m->scorer = std::make_unique<learn::eval::LearnScorer>(*m->loaded.model,
                                                           *m->loaded.provider);
    *out = m.release();
  });
}

void learn_model_close(learn_model* model) { delete model; }

size_t learn_model_dim(const learn_model* model) {
  return model == nullptr ? 0 : model->scorer->dim();
}

learn_status learn_model_item_embedding(const learn_model* model, uint64_t item_id,
                                        float* out, size_t capacity) {
  return guarded([&] {
    require(model != nullptr, "model is NULL");
    copy_out(model->scorer->item_embedding(item_id), out, capacity);
  });
}

learn_status learn_model_user_embedding(const learn_model* model, const uint64_t* history,
                                        size_t length, float* out, size_t capacity) {
  return guarded([&] {
    require(model != nullptr, "model is NULL");
    require(history != nullptr || length == 0, "history is NULL");
    const std::vector<learn::data::ItemId> ids(history, history + length);
    copy_out(model->scorer->user_embedding(ids), out, capacity);
  });
}

learn_status learn_config_resolve(const char* config_json, char** result) {
  return guarded([&] {
    const auto cfg = parse_config(config_json);
    learn::config::validate(cfg, "");
    put_result(result, cfg.to_json().dump(2));
  });
}

learn_status learn_train(const char* config_json, char** result) {
  return guarded([&] {
    const auto r = learn::pipeline::train(parse_config(config_json));
    put_result(result, r.to_json().dump());
  });
}

learn_status learn_eval(const char* config_json, char** result) {
  return guarded([&] {
    const auto report = learn::pipeline::evaluate(parse_config(config_json));
    put_result(result, report.to_json().dump());
  });
}

learn_status learn_export(const char* config_json, char** result) {
  return guarded([&] {
    const auto r = learn::pipeline::export_embeddings(parse_config(config_json));
    put_result(result, r.to_json().dump());
  });
}

learn_status learn_inspect(const char* path, char** result) {
  return guarded([&] {
    require(path != nullptr, "path is NULL");
    put_result(result, learn::pipeline::inspect(path).dump(2));
  });
}

learn_status learn_synth(const char* out_dir, const char* options_json, char** result) {
  return guarded([&] {
    require(out_dir != nullptr, "out_dir is NULL");
    learn::synthetic::SyntheticConfig sc;
    if (options_json != nullptr && *options_json != '\0') {
      const auto j = nlohmann::json::parse(options_json);
      sc.clusters = j.value("clusters", sc.clusters);
      sc.items = j.value("items", sc.items);
      sc.users = j.value("users", sc.users);
      sc.group_size = j.value("group_size", sc.group_size);
      sc.min_events = j.value("min_events", sc.min_events);
      sc.max_events = j.value("max_events", sc.max_events);
      sc.focus = j.value("focus", sc.focus);
      sc.centroid_pull = j.value("centroid_pull", sc.centroid_pull);
      sc.dim = j.value("dim", sc.dim);
      sc.seed = j.value("seed", sc.seed);
      sc.split_ts = j.value("split_ts", sc.split_ts);
    }
    put_result(result, learn::pipeline::write_synthetic(sc, out_dir).dump());
  });
}

}  // extern "C"
