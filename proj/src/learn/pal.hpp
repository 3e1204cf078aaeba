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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "learn/cex.hpp"
#include "learn/nn/layers.hpp"

namespace learn::pal {

using nn::Tensorf;

enum class ItemTowerVariant { kA, kB, kC };

std::string_view variant_name(ItemTowerVariant v);
ItemTowerVariant parse_variant(std::string_view name);

struct PalConfig {
  std::size_t d_content = 0;
  std::size_t d_model = 128;
  std::size_t n_layers = 4;
  std::size_t n_heads = 4;
  std::size_t d_out = 64;
  std::size_t max_len = 128;
  ItemTowerVariant item_tower = ItemTowerVariant::kA;

  // d_model=128, 4 layers, 4 heads, d_out=64, max_len=128.
  static PalConfig desk(std::size_t d_content);
  // BERT-base backbone: d_model=768, 12 layers, 12 heads, d_out=64.
  static PalConfig base_scale(std::size_t d_content);

  // Variant C compares user vectors with raw content vectors, so the user
  // projection must land in the content dimension.
  PalConfig resolved() const;

  // Human-readable problems; empty when valid.
  std::vector<std::string> problems() const;

  nlohmann::json to_json() const;
  static PalConfig from_json(const nlohmann::json& j);

  friend bool operator==(const PalConfig&, const PalConfig&) = default;
};

enum class AttentionPattern { kCausal, kDiagonal };

// Content adaptor, learned positions, pre-LN transformer, projection head.
// One instance serves the user tower and item towers A and B.
class PalModel {
 public:
  PalModel(const PalConfig& config, std::uint64_t seed);

  const PalConfig& config() const noexcept { return config_; }

  // [L, d_content] -> [L, d_out] with unit-norm rows. kCausal uses positions
  // 0..L-1; kDiagonal lets each row see only itself and uses position 0.
  Tensorf encode(const Tensorf& content, AttentionPattern pattern) const;

  nn::ParamList<float> parameters() const;
  std::vector<Tensorf> parameter_tensors() const;

 private:
  PalConfig config_;
  nn::Linear<float> adaptor_;
  Tensorf positions_;
  std::vector<nn::TransformerBlock<float>> blocks_;
  nn::LayerNorm<float> final_norm_;
  nn::Linear<float> projection_;
};

// Stacks content vectors into an [L, dim] constant tensor.
Tensorf content_matrix(const cex::EmbeddingProvider& provider,
                       std::span<const data::ItemId> items);

class UserTower {
 public:
  explicit UserTower(const PalModel& model) : model_(&model) {}

  // One embedding per requested position (all positions when empty).
  Tensorf forward(const Tensorf& content,
                  std::span<const std::size_t> positions = {}) const;

  nn::ParamList<float> parameters() const { return model_->parameters(); }
  const PalModel& model() const { return *model_; }

 private:
  const PalModel* model_;
};

class ItemTower {
 public:
  ItemTower(const PalModel& model, ItemTowerVariant variant)
      : model_(&model), variant_(variant) {}

  // A: causal encoding of the whole target sequence. B: each item alone.
  // C: L2-normalized raw content, no parameters.
  Tensorf forward(const Tensorf& content) const;

  // Inference path: a single item in isolation.
  std::vector<float> infer(std::span<const float> content) const;

  ItemTowerVariant variant() const noexcept { return variant_; }
  // Empty for variant C.
  nn::ParamList<float> parameters() const;

 private:
  const PalModel* model_;
  ItemTowerVariant variant_;
};

Tensorf user_tower_forward(const PalModel& model, const Tensorf& content,
                           std::span<const std::size_t> positions = {});
Tensorf item_tower_forward(const PalModel& model, ItemTowerVariant variant,
                           const Tensorf& content);
std::vector<float> infer_item_embedding(const PalModel& model,
                                        ItemTowerVariant variant,
                                        std::span<const float> content);

}  // namespace learn::pal
