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

#include "learn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "learn/error.hpp"

namespace learn::eval {

std::vector<ItemId> RankingResult::ids() const {
  std::vector<ItemId> out;
  out.reserve(items.size());
  for (const auto& s : items) out.push_back(s.item_id);
  return out;
}

ItemIndex::ItemIndex(std::vector<ItemId> ids, std::size_t dim,
                     std::vector<float> values)
    : ids_(std::move(ids)), dim_(dim), values_(std::move(values)) {
  if (values_.size() != ids_.size() * dim_) {
    throw Error(ErrorCode::kShapeMismatch, "item index values/ids disagree");
  }
}

std::optional<std::size_t> ItemIndex::position(ItemId id) const {
  const auto it = std::find(ids_.begin(), ids_.end(), id);
  if (it == ids_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - ids_.begin());
}

std::vector<double> ItemIndex::scores(std::span<const float> query) const {
  if (query.size() != dim_) {
    throw Error(ErrorCode::kDimMismatch,
                "query dim " + std::to_string(query.size()) +
                    " differs from index dim " + std::to_string(dim_));
  }
  std::vector<double> out(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    const float* r = values_.data() + i * dim_;
    double acc = 0.0;
    for (std::size_t c = 0; c < dim_; ++c) {
      acc += static_cast<double>(query[c]) * static_cast<double>(r[c]);
    }
    out[i] = acc;
  }
  return out;
}

RankingResult retrieve_topk(std::span<const float> user_embedding,
                            const ItemIndex& index, std::size_t k,
                            UserId user_id) {
  if (index.size() == 0) {
    throw Error(ErrorCode::kEmptyIndex, "retrieve_topk: empty gallery");
  }
  if (k == 0) {
    throw Error(ErrorCode::kInvalidArgument, "retrieve_topk: K must be >= 1");
  }
  const auto scores = index.scores(user_embedding);
  std::vector<ScoredItem> all(index.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    all[i] = {index.ids()[i], scores[i]};
  }
  const std::size_t keep = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep),
                    all.end(), ranks_before);
  all.resize(keep);
  return RankingResult{user_id, std::move(all)};
}

std::size_t rank_of(std::span<const double> scores,
                    std::span<const ItemId> ids, std::size_t target) {
  const ScoredItem t{ids[target], scores[target]};
  std::size_t ahead = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i != target && ranks_before({ids[i], scores[i]}, t)) ++ahead;
  }
  return ahead + 1;
}

double ndcg_at_k(std::optional<std::size_t> rank, std::size_t k) {
  if (!rank || *rank == 0 || *rank > k) return 0.0;
  return 1.0 / std::log2(static_cast<double>(*rank) + 1.0);
}

double recall_at_k(std::optional<std::size_t> rank, std::size_t k) {
  return rank && *rank >= 1 && *rank <= k ? 1.0 : 0.0;
}

double mrr(std::optional<std::size_t> rank) {
  if (!rank || *rank == 0) return 0.0;
  return 1.0 / static_cast<double>(*rank);
}

HitRecall hit_recall_multi(std::span<const ItemId> targets,
                           const RankingResult& topk, std::size_t k) {
  const std::unordered_set<ItemId> wanted(targets.begin(), targets.end());
  if (wanted.empty()) {
    throw Error(ErrorCode::kEmptyTargets, "hit_recall_multi: no targets");
  }
  const std::size_t limit = std::min(k, topk.items.size());
  std::size_t found = 0;
  for (std::size_t i = 0; i < limit; ++i) {
    if (wanted.contains(topk.items[i].item_id)) ++found;
  }
  return {found > 0 ? 1.0 : 0.0,
          static_cast<double>(found) / static_cast<double>(wanted.size())};
}

LearnScorer::LearnScorer(const pal::PalModel& model,
                         const cex::EmbeddingProvider& provider)
    : model_(&model), provider_(&provider) {
  if (provider.dim() != model.config().d_content) {
    throw Error(ErrorCode::kDimMismatch,
                "content dim " + std::to_string(provider.dim()) +
                    " differs from model d_content " +
                    std::to_string(model.config().d_content));
  }
}

std::vector<float> LearnScorer::user_embedding(
    std::span<const ItemId> history) const {
  if (history.empty()) {
    throw Error(ErrorCode::kEmptyInput, "user history is empty");
  }
  const std::size_t max_len = model_->config().max_len;
  if (history.size() > max_len) history = history.last(max_len);
  const std::size_t last = history.size() - 1;
  const auto out = pal::user_tower_forward(
      *model_, pal::content_matrix(*provider_, history),
      std::span<const std::size_t>(&last, 1));
  return {out.data().begin(), out.data().end()};
}

std::vector<float> LearnScorer::item_embedding(ItemId item) const {
  return pal::infer_item_embedding(*model_, model_->config().item_tower,
                                   provider_->lookup(item));
}

namespace {
std::vector<float> normalized(std::vector<double> v) {
  double n2 = 0.0;
  for (const double x : v) n2 += x * x;
  const double n = std::sqrt(n2);
  std::vector<float> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = static_cast<float>(n > 0.0 ? v[i] / n : 0.0);
  }
  return out;
}
}  // namespace

std::vector<float> ContentMeanScorer::user_embedding(
    std::span<const ItemId> history) const {
  if (history.empty()) {
    throw Error(ErrorCode::kEmptyInput, "user history is empty");
  }
  std::vector<double> acc(provider_->dim(), 0.0);
  for (const auto id : history) {
    const auto v = provider_->lookup(id);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
  }
  for (auto& x : acc) x /= static_cast<double>(history.size());
  return normalized(std::move(acc));
}

std::vector<float> ContentMeanScorer::item_embedding(ItemId item) const {
  const auto v = provider_->lookup(item);
  return normalized(std::vector<double>(v.begin(), v.end()));
}

ItemIndex build_index(const Scorer& scorer, std::span<const ItemId> gallery) {
  std::vector<float> values;
  values.reserve(gallery.size() * scorer.dim());
  for (const auto id : gallery) {
    const auto v = scorer.item_embedding(id);
    values.insert(values.end(), v.begin(), v.end());
  }
  return ItemIndex({gallery.begin(), gallery.end()}, scorer.dim(), std::move(values));
}

std::string_view protocol_name(Protocol p) {
  return p == Protocol::kLeaveOneOut ? "leave_one_out" : "multi_target";
}

Protocol parse_protocol(std::string_view name) {
  if (name == "leave_one_out" || name == "loo") return Protocol::kLeaveOneOut;
  if (name == "multi_target" || name == "multi") return Protocol::kMultiTarget;
  throw Error(ErrorCode::kConfig, "unknown protocol '" + std::string(name) + "'");
}

double Report::metric(std::string_view name) const {
  for (const auto& [k, v] : metrics) {
    if (k == name) return v;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "report has no metric '" + std::string(name) + "'");
}

nlohmann::ordered_json Report::to_json() const {
  nlohmann::ordered_json m = nlohmann::ordered_json::object();
  for (const auto& [k, v] : metrics) m[k] = v;
  nlohmann::ordered_json j;
  j["protocol"] = std::string(protocol_name(protocol));
  j["K"] = ks;
  j["metrics"] = std::move(m);
  j["n_users"] = n_users;
  j["n_items"] = n_items;
  return j;
}

void Report::write_per_user_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << (protocol == Protocol::kLeaveOneOut ? "user_id,rank\n"
                                             : "user_id,targets_retrieved\n");
  for (const auto& u : per_user) out << u.user_id << ',' << u.value << '\n';
}

Report evaluate(const Scorer& scorer,
                std::span<const data::InteractionSequence> users,
                std::span<const ItemId> gallery, Protocol protocol,
                std::span<const std::size_t> ks, HeldOut held_out) {
  if (gallery.empty()) throw Error(ErrorCode::kEmptyIndex, "empty gallery");
  if (ks.empty()) throw Error(ErrorCode::kConfig, "no K values given");
  for (const auto k : ks) {
    if (k == 0) throw Error(ErrorCode::kConfig, "K must be >= 1");
  }
  const auto index = build_index(scorer, gallery);
  Report report;
  report.protocol = protocol;
  report.ks.assign(ks.begin(), ks.end());
  report.n_items = index.size();

  if (protocol == Protocol::kLeaveOneOut) {
    std::vector<double> ndcg(ks.size(), 0.0), recall(ks.size(), 0.0);
    double mrr_sum = 0.0;
    for (const auto& seq : users) {
      if (seq.events.size() < 3) continue;
      const auto split = data::split_leave_one_out(seq);
      std::vector<ItemId> history = split.train;
      ItemId target = split.valid;
      if (held_out == HeldOut::kTest) {
        history.push_back(split.valid);
        target = split.test;
      }
      const auto pos = index.position(target);
      if (!pos) {
        throw Error(ErrorCode::kMissingItem,
                    "held-out item " + std::to_string(target) + " of user " +
                        std::to_string(seq.user_id) + " is not in the gallery",
                    target);
      }
      const auto scores = index.scores(scorer.user_embedding(history));
      const auto rank = rank_of(scores, index.ids(), *pos);
      for (std::size_t i = 0; i < ks.size(); ++i) {
        ndcg[i] += ndcg_at_k(rank, ks[i]);
        recall[i] += recall_at_k(rank, ks[i]);
      }
      mrr_sum += mrr(rank);
      report.per_user.push_back({seq.user_id, rank});
    }
    report.n_users = report.per_user.size();
    const double n = std::max<double>(1.0, static_cast<double>(report.n_users));
    for (std::size_t i = 0; i < ks.size(); ++i) {
      report.metrics.emplace_back("NDCG@" + std::to_string(ks[i]), ndcg[i] / n);
      report.metrics.emplace_back("Recall@" + std::to_string(ks[i]), recall[i] / n);
    }
    report.metrics.emplace_back("MRR", mrr_sum / n);
    return report;
  }

  const std::size_t max_k = *std::max_element(ks.begin(), ks.end());
  std::vector<double> hit(ks.size(), 0.0), recall(ks.size(), 0.0);
  for (const auto& seq : users) {
    const auto history = seq.history_items();
    const auto targets = seq.target_items();
    if (history.empty() || targets.empty()) continue;
    const auto topk =
        retrieve_topk(scorer.user_embedding(history), index, max_k, seq.user_id);
    for (std::size_t i = 0; i < ks.size(); ++i) {
      const auto hr = hit_recall_multi(targets, topk, ks[i]);
      hit[i] += hr.hit;
      recall[i] += hr.recall;
    }
    const std::unordered_set<ItemId> wanted(targets.begin(), targets.end());
    std::size_t found = 0;
    for (const auto& s : topk.items) found += wanted.contains(s.item_id) ? 1 : 0;
    report.per_user.push_back({seq.user_id, found});
  }
  report.n_users = report.per_user.size();
  const double n = std::max<double>(1.0, static_cast<double>(report.n_users));
  for (std::size_t i = 0; i < ks.size(); ++i) {
    report.metrics.emplace_back("H@" + std::to_string(ks[i]), hit[i] / n);
    report.metrics.emplace_back("R@" + std::to_string(ks[i]), recall[i] / n);
  }
  return report;
}

}  // namespace learn::eval
