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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "learn/cex.hpp"
#include "learn/data.hpp"
#include "learn/pal.hpp"

namespace learn::eval {

using data::ItemId;
using data::UserId;

struct ScoredItem {
  ItemId item_id = 0;
  double score = 0.0;
  friend bool operator==(const ScoredItem&, const ScoredItem&) = default;
};

// Descending score; equal scores ordered by ascending item_id.
struct RankingResult {
  UserId user_id = 0;
  std::vector<ScoredItem> items;

  std::vector<ItemId> ids() const;
};

inline bool ranks_before(const ScoredItem& a, const ScoredItem& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.item_id < b.item_id;
}

// Dense gallery of item embeddings.
class ItemIndex {
 public:
  ItemIndex(std::vector<ItemId> ids, std::size_t dim, std::vector<float> values);

  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<ItemId>& ids() const noexcept { return ids_; }
  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(values_).subspan(i * dim_, dim_);
  }
  std::optional<std::size_t> position(ItemId id) const;

  // Dot product of the query with every row, accumulated in double.
  std::vector<double> scores(std::span<const float> query) const;

 private:
  std::vector<ItemId> ids_;
  std::size_t dim_;
  std::vector<float> values_;
};

// Exact top-K by dot product; K larger than the gallery ranks everything.
RankingResult retrieve_topk(std::span<const float> user_embedding,
                            const ItemIndex& index, std::size_t k,
                            UserId user_id = 0);

// 1-based rank of gallery entry `target` under the RankingResult order.
std::size_t rank_of(std::span<const double> scores,
                    std::span<const ItemId> ids, std::size_t target);

// Single-target leave-one-out metrics; std::nullopt means "not ranked".
double ndcg_at_k(std::optional<std::size_t> rank, std::size_t k);
double recall_at_k(std::optional<std::size_t> rank, std::size_t k);
double mrr(std::optional<std::size_t> rank);

struct HitRecall {
  double hit = 0.0;
  double recall = 0.0;
};

// Hit is 1 when any target is in the top K; recall is the covered fraction
// of the distinct targets.
HitRecall hit_recall_multi(std::span<const ItemId> targets,
                           const RankingResult& topk, std::size_t k);

// Source of user and item vectors for evaluation.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::size_t dim() const = 0;
  virtual std::vector<float> user_embedding(std::span<const ItemId> history) const = 0;
  virtual std::vector<float> item_embedding(ItemId item) const = 0;
};

// User vector: user tower output at the most recent position of the history
// (truncated to the last max_len items). Item vector: single-item tower.
class LearnScorer final : public Scorer {
 public:
  LearnScorer(const pal::PalModel& model, const cex::EmbeddingProvider& provider);

  std::size_t dim() const override { return model_->config().d_out; }
  std::vector<float> user_embedding(std::span<const ItemId> history) const override;
  std::vector<float> item_embedding(ItemId item) const override;

 private:
  const pal::PalModel* model_;
  const cex::EmbeddingProvider* provider_;
};

// No alignment: mean of the history's content vectors against raw content
// vectors, both L2-normalized.
class ContentMeanScorer final : public Scorer {
 public:
  explicit ContentMeanScorer(const cex::EmbeddingProvider& provider)
      : provider_(&provider) {}

  std::size_t dim() const override { return provider_->dim(); }
  std::vector<float> user_embedding(std::span<const ItemId> history) const override;
  std::vector<float> item_embedding(ItemId item) const override;

 private:
  const cex::EmbeddingProvider* provider_;
};

ItemIndex build_index(const Scorer& scorer, std::span<const ItemId> gallery);

enum class Protocol { kLeaveOneOut, kMultiTarget };

std::string_view protocol_name(Protocol p);
Protocol parse_protocol(std::string_view name);

// Which held-out item the leave-one-out protocol scores.
enum class HeldOut { kTest, kValid };

struct UserOutcome {
  UserId user_id = 0;
  // Leave-one-out: rank of the held-out item. Multi-target: number of
  // targets inside the top max(K).
  std::size_t value = 0;
};

struct Report {
  Protocol protocol = Protocol::kLeaveOneOut;
  std::vector<std::size_t> ks;
  std::vector<std::pair<std::string, double>> metrics;
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::vector<UserOutcome> per_user;

  double metric(std::string_view name) const;
  nlohmann::ordered_json to_json() const;
  void write_per_user_csv(const std::filesystem::path& path) const;
};

// Leave-one-out: users need >= 3 events; history is train (+ valid when
// scoring the test item). Multi-target: history and distinct target items
// of the timestamp split. Metrics are means over evaluated users.
Report evaluate(const Scorer& scorer,
                std::span<const data::InteractionSequence> users,
                std::span<const ItemId> gallery, Protocol protocol,
                std::span<const std::size_t> ks,
                HeldOut held_out = HeldOut::kTest);

}  // namespace learn::eval
