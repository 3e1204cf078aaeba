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
#include <vector>

#include "learn/cex.hpp"
#include "learn/data.hpp"

// Toy interaction world with collaborative structure that content alone
// cannot reveal. Items belong to latent clusters, and each cluster is split
// into small co-purchase groups. Content vectors are pseudo-embeddings of the
// item prompt pulled toward their cluster centroid, so content identifies the
// cluster but says nothing about the group. Each user stays inside one
// cluster, draws most events from one group and the rest from the
// surrounding cluster.
namespace learn::synthetic {

struct SyntheticConfig {
  std::size_t clusters = 8;
  std::size_t items = 400;
  std::size_t users = 300;
  std::size_t group_size = 10;
  std::size_t min_events = 6;
  std::size_t max_events = 10;
  // Probability that an event comes from the user's own group.
  double focus = 0.85;
  // Weight of the cluster centroid added to each item's pseudo-embedding.
  double centroid_pull = 1.0;
  std::size_t dim = 512;
  std::uint64_t seed = 7;
  // Timestamps span [0, 100); the timestamp split puts roughly the final 30%
  // of each user's events in the target segment.
  data::Timestamp split_ts = 70;
};

struct SyntheticData {
  data::ItemCatalog catalog;
  std::vector<data::InteractionSequence> sequences;
  std::vector<cex::EmbeddingRecord> embeddings;
  std::vector<std::size_t> item_cluster;
  std::vector<std::size_t> item_group;
};

SyntheticData make_synthetic(const SyntheticConfig& cfg);

}  // namespace learn::synthetic
