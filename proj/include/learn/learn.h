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

#ifndef LEARN_LEARN_H
#define LEARN_LEARN_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(LEARN_BUILDING_LIBRARY)
#    define LEARN_API __declspec(dllexport)
#  else
#    define LEARN_API __declspec(dllimport)
#  endif
#else
#  define LEARN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every call returns a status. On failure the message is available from
   learn_last_error() on the same thread until the next failing call. */
typedef enum learn_status {
  LEARN_OK = 0,
  LEARN_ERR_IO = 1,
  LEARN_ERR_PARSE = 2,
  LEARN_ERR_DUPLICATE_ID = 3,
  LEARN_ERR_UNSORTED_INPUT = 4,
  LEARN_ERR_TOO_SHORT = 5,
  LEARN_ERR_EMPTY_INPUT = 6,
  LEARN_ERR_BAD_MAGIC = 7,
  LEARN_ERR_BAD_VERSION = 8,
  LEARN_ERR_DIM_MISMATCH = 9,
  LEARN_ERR_MISSING_ITEM = 10,
  LEARN_ERR_SHAPE_MISMATCH = 11,
  LEARN_ERR_ALL_MASKED_ROW = 12,
  LEARN_ERR_SEQ_TOO_LONG = 13,
  LEARN_ERR_BAD_HYPERPARAMS = 14,
  LEARN_ERR_COUNT_EXCEEDS_LEN = 15,
  LEARN_ERR_BATCH_TOO_SMALL = 16,
  LEARN_ERR_EMPTY_INDEX = 17,
  LEARN_ERR_EMPTY_TARGETS = 18,
  LEARN_ERR_INVALID_ARGUMENT = 19,
  LEARN_ERR_CONFIG = 20,
  LEARN_ERR_RUNTIME = 21,
  LEARN_ERR_INTERNAL = 99
} learn_status;

typedef struct learn_store learn_store;
typedef struct learn_model learn_model;

LEARN_API const char* learn_version(void);
LEARN_API const char* learn_status_name(learn_status status);
/* 2 config error, 3 data error, 4 runtime error, 0 for LEARN_OK. */
LEARN_API int learn_status_exit_code(learn_status status);
LEARN_API const char* learn_last_error(void);
/* Offending id / line / row of the last error, if it named one. */
LEARN_API int learn_last_error_subject(uint64_t* subject);

/* Strings returned through char** out-parameters are owned by the caller. */
LEARN_API void learn_string_free(char* s);

/* ---- Embedding files ---------------------------------------------------- */

LEARN_API learn_status learn_store_open(const char* path, learn_store** out);
LEARN_API void learn_store_close(learn_store* store);
LEARN_API size_t learn_store_dim(const learn_store* store);
LEARN_API size_t learn_store_count(const learn_store* store);
/* Copies the vector of `item_id` into `out` (capacity >= dim). */
LEARN_API learn_status learn_store_lookup(const learn_store* store, uint64_t item_id,
                                          float* out, size_t capacity);

/* Writes one pseudo-embedding per catalog item. */
LEARN_API learn_status learn_embed_pseudo(const char* catalog_path, uint32_t dim,
                                          const char* prompt_template,
                                          const char* out_path, uint64_t* count);
LEARN_API learn_status learn_write_prompts(const char* catalog_path,
                                           const char* prompt_template,
                                           const char* out_path, uint64_t* count);

/* ---- Trained models ----------------------------------------------------- */

/* `embeddings_path` may be NULL for checkpoints trained on id embeddings. */
LEARN_API learn_status learn_model_load(const char* checkpoint_path,
                                        const char* embeddings_path, learn_model** out);
LEARN_API void learn_model_close(learn_model* model);
LEARN_API size_t learn_model_dim(const learn_model* model);
LEARN_API learn_status learn_model_item_embedding(const learn_model* model,
                                                  uint64_t item_id, float* out,
                                                  size_t capacity);
/* History in chronological order; the embedding is read at the last item. */
LEARN_API learn_status learn_model_user_embedding(const learn_model* model,
                                                  const uint64_t* history,
                                                  size_t length, float* out,
                                                  size_t capacity);

/* ---- Runs ---------------------------------------------------------------
   `config_json` is a run config object; missing keys take defaults. The
   result JSON is written to *result when result is not NULL. */

LEARN_API learn_status learn_config_resolve(const char* config_json, char** result);
LEARN_API learn_status learn_train(const char* config_json, char** result);
LEARN_API learn_status learn_eval(const char* config_json, char** result);
LEARN_API learn_status learn_export(const char* config_json, char** result);
LEARN_API learn_status learn_inspect(const char* path, char** result);
/* Toy dataset; `options_json` may override clusters, items, users,
   group_size, min_events, max_events, focus, centroid_pull, dim, seed,
   split_ts. */
LEARN_API learn_status learn_synth(const char* out_dir, const char* options_json,
                                   char** result);

#ifdef __cplusplus
}
#endif

#endif /* LEARN_LEARN_H */
