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
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "learn/cex.hpp"
#include "learn/data.hpp"
#include "learn/nn/optim.hpp"
#include "learn/pal.hpp"
#include "learn/rng.hpp"

namespace learn::training {

using data::ItemId;
using data::UserId;
using nn::Tensorf;

struct SamplingConfig {
  std::size_t max_hist = 80;
  std::size_t max_tar = 40;
  std::size_t n_hist = 10;
  std::size_t n_tar = 10;
  double alpha = 10.0;
  double beta = 10000.0;
  // false selects stage-2 positions uniformly.
  bool weighted = true;

  std::vector<std::string> problems() const;
  nlohmann::json to_json() const;
  static SamplingConfig from_json(const nlohmann::json& j);
  friend bool operator==(const SamplingConfig&, const SamplingConfig&) = default;
};

struct OptimConfig {
  double lr = 1e-3;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t warmup_steps = 0;
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  double temperature = 0.05;
  bool mask_same_id = true;

  std::vector<std::string> problems() const;
  nlohmann::json to_json() const;
  static OptimConfig from_json(const nlohmann::json& j);
  friend bool operator==(const OptimConfig&, const OptimConfig&) = default;
};

// Stage 1: keep everything when len <= max_len, otherwise a uniform sample
// of max_len positions without replacement, returned in original order.
std::vector<std::size_t> stage1_indices(std::size_t len, std::size_t max_len,
                                        Rng& rng);
std::vector<ItemId> stage1_sample(std::span<const ItemId> events,
                                  std::size_t max_len, Rng& rng);

enum class LogBase { kNatural, kTen };

// Recency weights w_i = log(alpha + i * (beta - alpha) / (N - 1)) for
// i = 0..N-1, divided by their maximum (attained at i = N - 1).
std::vector<double> recency_weights(std::size_t n, double alpha, double beta,
                                LogBase base = LogBase::kNatural);

// Weighted draws without replacement, renormalizing after each draw.
// Returns sorted unique indices.
std::vector<std::size_t> stage2_select(std::size_t seq_len, std::size_t count,
                                       std::span<const double> weights,
                                       Rng& rng);

// Row ownership for the dense all-action loss. users[r] and items[r] hold
// the batch member that produced each embedding row.
struct PairLayout {
  std::vector<std::size_t> user_owner;
  std::vector<std::size_t> item_owner;
  // Parallel to item_owner; empty disables same-id masking.
  std::vector<ItemId> item_ids;

  // batch users with n_hist history rows and n_tar target rows each.
  static PairLayout regular(std::size_t batch, std::size_t n_hist,
                            std::size_t n_tar,
                            std::span<const ItemId> item_ids = {});
};

// Mean InfoNCE over every (user row, item row) pair from the same batch
// member. Each pair's denominator holds the positive plus every item row of
// other members, excluding rows with the positive's item id.
template <class T>
nn::Tensor<T> dense_all_action_loss(const nn::Tensor<T>& users,
                                    const nn::Tensor<T>& items,
                                    const PairLayout& layout,
                                    double temperature);

// Trainable id -> vector table for the ID-embedding ablation. Lookups read
// the current parameter values; gather() keeps the table on the tape.
class IdEmbeddingTable final : public cex::EmbeddingProvider {
 public:
  IdEmbeddingTable(std::vector<ItemId> ids, std::size_t dim, std::uint64_t seed);

  std::size_t dim() const override { return dim_; }
  bool contains(ItemId id) const override { return rows_.contains(id); }
  std::span<const float> lookup(ItemId id) const override;
  std::vector<ItemId> ids() const override { return ids_; }

  Tensorf gather(std::span<const ItemId> items) const;
  const Tensorf& table() const { return table_; }

  static constexpr const char* kParamName = "id_embedding.table";

 private:
  std::size_t row(ItemId id) const;

  std::size_t dim_;
  std::vector<ItemId> ids_;
  std::unordered_map<ItemId, std::size_t> rows_;
  Tensorf table_;
};

// Content sequence for the towers: a tape-tracked gather for trainable
// tables, a constant matrix otherwise.
Tensorf content_sequence(const cex::EmbeddingProvider& provider,
                         std::span<const ItemId> items);

struct TrainExample {
  UserId user_id = 0;
  std::vector<ItemId> history;
  std::vector<ItemId> target;
  friend bool operator==(const TrainExample&, const TrainExample&) = default;
};

// History/target from the timestamp split.
std::vector<TrainExample> examples_from_split(
    std::span<const data::InteractionSequence> sequences);

// Leave-one-out training view: drops the valid and test items, then uses the
// last `target_len` remaining items as the target. Users with fewer than
// four events are skipped.
std::vector<TrainExample> examples_from_leave_one_out(
    std::span<const data::InteractionSequence> sequences,
    std::size_t target_len);

struct UserSample {
  UserId user_id = 0;
  std::vector<ItemId> history;
  std::vector<ItemId> target;
  std::vector<std::size_t> history_positions;
  std::vector<std::size_t> target_positions;
};

struct TrainBatch {
  std::vector<UserSample> users;
};

// Two-stage sampling for one user. Randomness comes from per-user streams
// derived from seed ^ user_id and the epoch; stage 1 and stage 2 use
// separate streams so the stage-2 rule never shifts stage-1 draws.
UserSample sample_user(const TrainExample& example, const SamplingConfig& cfg,
                       std::uint64_t seed, std::uint64_t epoch);

TrainBatch make_batch(std::span<const TrainExample> examples,
                      std::span<const std::size_t> members,
                      const SamplingConfig& cfg, std::uint64_t seed,
                      std::uint64_t epoch);

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0.0;
  double lr = 0.0;
  double wallclock_s = 0.0;
  std::optional<nlohmann::json> metrics;

  nlohmann::json to_json() const;
};

using EpochCallback = std::function<std::optional<nlohmann::json>(std::size_t)>;

class Trainer {
 public:
  // `id_table` must be the provider when training ID embeddings; its table
  // joins the optimized parameters.
  Trainer(pal::PalModel& model, const cex::EmbeddingProvider& provider,
          SamplingConfig sampling, OptimConfig optim, std::uint64_t seed,
          IdEmbeddingTable* id_table = nullptr);

  // Forward pass of the loss (on the tape).
  Tensorf batch_loss(const TrainBatch& batch) const;

  // Loss of the first batch of `epoch` without updating anything.
  double probe_loss(std::span<const TrainExample> examples,
                    std::uint64_t epoch = 0) const;

  // Batches of one epoch, as member index lists; a trailing singleton is
  // folded into the previous batch.
  std::vector<std::vector<std::size_t>> epoch_batches(
      std::size_t n_examples, std::uint64_t epoch) const;

  std::vector<EpochLog> fit(std::span<const TrainExample> examples,
                            const EpochCallback& on_epoch = {});

  std::uint64_t steps() const noexcept { return optimizer_.step; }
  std::vector<Tensorf>& parameters() { return params_; }

 private:
  pal::PalModel* model_;
  const cex::EmbeddingProvider* provider_;
  SamplingConfig sampling_;
  OptimConfig optim_;
  std::uint64_t seed_;
  std::vector<Tensorf> params_;
  nn::OptimizerState optimizer_;
};

}  // namespace learn::training
