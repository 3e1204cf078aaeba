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

#include "learn/pal.hpp"

#include <cmath>
#include <numeric>

namespace learn::pal {

std::string_view variant_name(ItemTowerVariant v) {
  switch (v) {
    case ItemTowerVariant::kA: return "A";
    case ItemTowerVariant::kB: return "B";
    case ItemTowerVariant::kC: return "C";
  }
  return "?";
}

ItemTowerVariant parse_variant(std::string_view name) {
  if (name == "A" || name == "a") return ItemTowerVariant::kA;
  if (name == "B" || name == "b") return ItemTowerVariant::kB;
  if (name == "C" || name == "c") return ItemTowerVariant::kC;
  throw Error(ErrorCode::kConfig,
              "unknown item tower variant '" + std::string(name) + "'");
}

PalConfig PalConfig::desk(std::size_t d_content) {
  PalConfig c;
  c.d_content = d_content;
  return c;
}

PalConfig PalConfig::base_scale(std::size_t d_content) {
  PalConfig c;
  c.d_content = d_content;
  c.d_model = 768;
  c.n_layers = 12;
  c.n_heads = 12;
  c.d_out = 64;
  c.max_len = 128;
  return c;
}

PalConfig PalConfig::resolved() const {
  PalConfig c = *this;
  if (c.item_tower == ItemTowerVariant::kC) c.d_out = c.d_content;
  return c;
}

std::vector<std::string> PalConfig::problems() const {
  std::vector<std::string> out;
  if (d_content == 0) out.emplace_back("model.d_content must be >= 1");
  if (d_model == 0) out.emplace_back("model.d_model must be >= 1");
  if (n_heads == 0) out.emplace_back("model.n_heads must be >= 1");
  if (d_model != 0 && n_heads != 0 && d_model % n_heads != 0) {
    out.emplace_back("model.d_model must be divisible by model.n_heads");
  }
  if (d_out == 0) out.emplace_back("model.d_out must be >= 1");
  if (max_len == 0) out.emplace_back("model.max_len must be >= 1");
  if (item_tower == ItemTowerVariant::kC && d_out != d_content) {
    out.emplace_back("item tower C requires model.d_out == model.d_content");
  }
  return out;
}

nlohmann::json PalConfig::to_json() const {
  return {{"d_content", d_content}, {"d_model", d_model},
          {"n_layers", n_layers},   {"n_heads", n_heads},
          {"d_out", d_out},         {"max_len", max_len},
          {"item_tower", std::string(variant_name(item_tower))}};
}

PalConfig PalConfig::from_json(const nlohmann::json& j) {
  PalConfig c;
  c.d_content = j.value("d_content", c.d_content);
  c.d_model = j.value("d_model", c.d_model);
  c.n_layers = j.value("n_layers", c.n_layers);
  c.n_heads = j.value("n_heads", c.n_heads);
  c.d_out = j.value("d_out", c.d_out);
  c.max_len = j.value("max_len", c.max_len);
  c.item_tower = parse_variant(j.value("item_tower", std::string("A")));
  return c;
}

namespace {

// Projection head starts with near-zero weights and a random unit bias, so
// every output begins close to one shared direction and the initial
// contrastive logits are nearly uniform.
constexpr double kProjectionInitStd = 1e-3;

Tensorf projection_bias(std::size_t width, Rng& rng) {
  std::vector<float> b(width);
  double norm2 = 0.0;
  std::vector<double> raw(width);
  for (auto& x : raw) {
    x = rng.normal();
    norm2 += x * x;
  }
  const double norm = std::sqrt(norm2);
  for (std::size_t i = 0; i < width; ++i) b[i] = static_cast<float>(raw[i] / norm);
  return Tensorf::from({width}, std::move(b), true);
}

}  // namespace

PalModel::PalModel(const PalConfig& config, std::uint64_t seed)
    : config_(config) {
  const auto problems = config_.problems();
  if (!problems.empty()) {
    std::string msg = "invalid model config:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw Error(config_.item_tower == ItemTowerVariant::kC &&
                        config_.d_out != config_.d_content
                    ? ErrorCode::kDimMismatch
                    : ErrorCode::kConfig,
                msg);
  }
  Rng rng = Rng::derive(seed, 0x70a1);
  adaptor_ = nn::Linear<float>(config_.d_content, config_.d_model, rng);
  positions_ = nn::normal_param<float>({config_.max_len, config_.d_model}, 0.02, rng);
  blocks_.reserve(config_.n_layers);
  for (std::size_t i = 0; i < config_.n_layers; ++i) {
    blocks_.emplace_back(config_.d_model, config_.n_heads, rng);
  }
  final_norm_ = nn::LayerNorm<float>(config_.d_model);
  projection_ =
      nn::Linear<float>(config_.d_model, config_.d_out, rng, kProjectionInitStd);
  projection_.bias() = projection_bias(config_.d_out, rng);
}

Tensorf PalModel::encode(const Tensorf& content,
                         AttentionPattern pattern) const {
  if (content.rank() != 2 || content.cols() != config_.d_content) {
    throw Error(ErrorCode::kDimMismatch,
                "content sequence has shape " + nn::shape_string(content.shape()) +
                    ", model expects width " + std::to_string(config_.d_content));
  }
  const std::size_t length = content.rows();
  if (length == 0) {
    throw Error(ErrorCode::kEmptyInput, "empty content sequence");
  }
  if (length > config_.max_len) {
    throw Error(ErrorCode::kSeqTooLong,
                "sequence length " + std::to_string(length) + " exceeds max_len " +
                    std::to_string(config_.max_len),
                length);
  }
  std::vector<std::size_t> pos(length, 0);
  if (pattern == AttentionPattern::kCausal) {
    std::iota(pos.begin(), pos.end(), std::size_t{0});
  }
  const auto mask = pattern == AttentionPattern::kCausal
                        ? nn::AttentionMask::causal(length)
                        : nn::AttentionMask::diagonal(length);
  auto x = nn::add(adaptor_(content), nn::gather_rows(positions_, pos));
  for (const auto& block : blocks_) x = block(x, mask);
  return nn::l2_normalize_rows(projection_(final_norm_(x)));
}

nn::ParamList<float> PalModel::parameters() const {
  nn::ParamList<float> out;
  adaptor_.collect("adaptor", out);
  out.push_back({"positions", positions_});
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    blocks_[i].collect("blocks." + std::to_string(i), out);
  }
  final_norm_.collect("final_norm", out);
  projection_.collect("projection", out);
  return out;
}

std::vector<Tensorf> PalModel::parameter_tensors() const {
  std::vector<Tensorf> out;
  for (auto& p : parameters()) out.push_back(p.tensor);
  return out;
}

Tensorf content_matrix(const cex::EmbeddingProvider& provider,
                       std::span<const data::ItemId> items) {
  const std::size_t dim = provider.dim();
  std::vector<float> values;
  values.reserve(items.size() * dim);
  for (const auto id : items) {
    const auto vec = provider.lookup(id);
    values.insert(values.end(), vec.begin(), vec.end());
  }
  return Tensorf::from({items.size(), dim}, std::move(values));
}

Tensorf UserTower::forward(const Tensorf& content,
                           std::span<const std::size_t> positions) const {
  auto all = model_->encode(content, AttentionPattern::kCausal);
  if (positions.empty()) return all;
  return nn::gather_rows(all, positions);
}

Tensorf ItemTower::forward(const Tensorf& content) const {
  switch (variant_) {
    case ItemTowerVariant::kA:
      return model_->encode(content, AttentionPattern::kCausal);
    case ItemTowerVariant::kB:
      return model_->encode(content, AttentionPattern::kDiagonal);
    case ItemTowerVariant::kC:
      if (content.rank() != 2 || content.cols() != model_->config().d_content) {
        throw Error(ErrorCode::kDimMismatch,
                    "content width does not match model d_content");
      }
      if (content.rows() > model_->config().max_len) {
        throw Error(ErrorCode::kSeqTooLong, "sequence exceeds max_len");
      }
      return nn::l2_normalize_rows(content);
  }
  throw Error(ErrorCode::kRuntime, "unreachable item tower variant");
}

std::vector<float> ItemTower::infer(std::span<const float> content) const {
  auto row = Tensorf::from({1, content.size()},
                           std::vector<float>(content.begin(), content.end()));
  auto out = forward(row);
  return {out.data().begin(), out.data().end()};
}

nn::ParamList<float> ItemTower::parameters() const {
  if (variant_ == ItemTowerVariant::kC) return {};
  return model_->parameters();
}

Tensorf user_tower_forward(const PalModel& model, const Tensorf& content,
                           std::span<const std::size_t> positions) {
  return UserTower(model).forward(content, positions);
}

Tensorf item_tower_forward(const PalModel& model, ItemTowerVariant variant,
                           const Tensorf& content) {
  return ItemTower(model, variant).forward(content);
}

std::vector<float> infer_item_embedding(const PalModel& model,
                                        ItemTowerVariant variant,
                                        std::span<const float> content) {
  return ItemTower(model, variant).infer(content);
}

}  // namespace learn::pal
