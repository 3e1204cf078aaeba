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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "learn/data.hpp"
#include "learn/eval.hpp"

namespace learn::testing {

// Brute-force ranking: every score computed with a plain double loop, then
// a full std::sort by (score desc, id asc).
struct FullSort {
  std::vector<data::ItemId> order;
  std::vector<double> scores;  // parallel to order

  std::size_t rank(data::ItemId id) const;  // 1-based
};

FullSort full_sort(std::span<const float> query, std::span<const data::ItemId> ids,
                   std::span<const float> vectors, std::size_t dim);

double oracle_ndcg(std::size_t rank, std::size_t k);
double oracle_recall(std::size_t rank, std::size_t k);
double oracle_mrr(std::size_t rank);

// Fixed vectors per item and a user vector derived from the history.
class TableScorer final : public eval::Scorer {
 public:
  TableScorer(std::vector<data::ItemId> ids, std::size_t dim, std::vector<float> vectors)
      : ids_(std::move(ids)), dim_(dim), vectors_(std::move(vectors)) {}

  std::size_t dim() const override { return dim_; }
  std::vector<float> user_embedding(std::span<const data::ItemId> history) const override;
  std::vector<float> item_embedding(data::ItemId item) const override;

  std::span<const data::ItemId> ids() const { return ids_; }
  std::span<const float> vectors() const { return vectors_; }

 private:
  std::vector<data::ItemId> ids_;
  std::size_t dim_;
  std::vector<float> vectors_;
};

struct MetricInstance {
  TableScorer scorer;
  std::vector<data::InteractionSequence> users;
  std::vector<std::size_t> ks;
};

// Random instance with <= `max_items` items. Vector entries are drawn from
// a few levels so exact score ties occur.
MetricInstance random_metric_instance(std::uint64_t seed, std::size_t max_items);

struct OracleReport {
  std::vector<std::pair<std::string, double>> metrics;
};

OracleReport oracle_leave_one_out(const MetricInstance& inst);
OracleReport oracle_multi_target(const MetricInstance& inst);

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);

}  // namespace learn::testing
