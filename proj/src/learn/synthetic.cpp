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

#include "learn/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "learn/error.hpp"
#include "learn/rng.hpp"

namespace learn::synthetic {

namespace {

constexpr data::ItemId kFirstItemId = 1000;

}  // namespace

SyntheticData make_synthetic(const SyntheticConfig& cfg) {
  if (cfg.clusters == 0 || cfg.items % cfg.clusters != 0) {
    throw Error(ErrorCode::kConfig, "items must be a multiple of clusters");
  }
  const std::size_t per_cluster = cfg.items / cfg.clusters;
  if (cfg.group_size == 0 || per_cluster % cfg.group_size != 0) {
    throw Error(ErrorCode::kConfig, "cluster size must be a multiple of group_size");
  }
  if (cfg.min_events < 3 || cfg.max_events < cfg.min_events ||
      cfg.max_events > per_cluster) {
    throw Error(ErrorCode::kConfig, "bad event count range");
  }
  const std::size_t groups_per_cluster = per_cluster / cfg.group_size;
  Rng rng(cfg.seed);
  SyntheticData out;

  std::vector<std::vector<float>> centroids;
  for (std::size_t k = 0; k < cfg.clusters; ++k) {
    centroids.push_back(
        cex::pseudo_embed("cluster centroid " + std::to_string(k), cfg.dim));
  }

  std::vector<data::Item> items;
  for (std::size_t i = 0; i < cfg.items; ++i) {
    const std::size_t cluster = i / per_cluster;
    const std::size_t group = (i % per_cluster) / cfg.group_size;
    data::Item item;
    item.item_id = kFirstItemId + i;
    item.title = "item " + std::to_string(i);
    item.category = "category " + std::to_string(cluster);
    item.brand = "brand " + std::to_string(rng.below(17));
    items.push_back(item);
    out.item_cluster.push_back(cluster);
    out.item_group.push_back(cluster * groups_per_cluster + group);

    const auto base = cex::pseudo_embed(cex::compose_prompt(item), cfg.dim);
    std::vector<double> v(cfg.dim);
    double n2 = 0.0;
    for (std::size_t c = 0; c < cfg.dim; ++c) {
      v[c] = base[c] + cfg.centroid_pull * centroids[cluster][c];
      n2 += v[c] * v[c];
    }
    const double n = std::sqrt(n2);
    std::vector<float> vec(cfg.dim);
    for (std::size_t c = 0; c < cfg.dim; ++c) vec[c] = static_cast<float>(v[c] / n);
    out.embeddings.push_back({item.item_id, std::move(vec)});
  }
  out.catalog = data::ItemCatalog(std::move(items));

  for (std::size_t u = 0; u < cfg.users; ++u) {
    const std::size_t cluster = rng.below(cfg.clusters);
    const std::size_t group = rng.below(groups_per_cluster);
    const std::size_t length =
        cfg.min_events + rng.below(cfg.max_events - cfg.min_events + 1);
    std::vector<std::size_t> own, rest;
    for (std::size_t j = 0; j < per_cluster; ++j) {
      const std::size_t idx = cluster * per_cluster + j;
      (j / cfg.group_size == group ? own : rest).push_back(idx);
    }
    data::InteractionSequence seq;
    seq.user_id = u + 1;
    seq.split_ts = cfg.split_ts;
    for (std::size_t e = 0; e < length; ++e) {
      const bool from_own = !own.empty() && (rest.empty() || rng.uniform() < cfg.focus);
      auto& pool = from_own ? own : rest;
      const auto pick = rng.below(pool.size());
      const std::size_t idx = pool[pick];
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
      const auto ts = static_cast<data::Timestamp>(e * 100 / length);
      seq.events.push_back({kFirstItemId + idx, ts});
    }
    out.sequences.push_back(std::move(seq));
  }
  return out;
}

}  // namespace learn::synthetic
