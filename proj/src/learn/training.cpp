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

#include "learn/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>

namespace learn::training {

std::vector<std::string> SamplingConfig::problems() const {
  std::vector<std::string> out;
  if (max_hist == 0) out.emplace_back("sampling.max_hist must be >= 1");
  if (max_tar == 0) out.emplace_back("sampling.max_tar must be >= 1");
  if (n_hist == 0 || n_hist > max_hist) {
    out.emplace_back("sampling.n_hist must be in [1, max_hist]");
  }
  if (n_tar == 0 || n_tar > max_tar) {
    out.emplace_back("sampling.n_tar must be in [1, max_tar]");
  }
  if (!(alpha > 1.0)) out.emplace_back("sampling.alpha must be > 1");
  if (!(beta > alpha)) out.emplace_back("sampling.beta must be > alpha");
  return out;
}

nlohmann::json SamplingConfig::to_json() const {
  return {{"max_hist", max_hist}, {"max_tar", max_tar}, {"n_hist", n_hist},
          {"n_tar", n_tar},       {"alpha", alpha},     {"beta", beta},
          {"weighted", weighted}};
}

SamplingConfig SamplingConfig::from_json(const nlohmann::json& j) {
  SamplingConfig c;
  c.max_hist = j.value("max_hist", c.max_hist);
  c.max_tar = j.value("max_tar", c.max_tar);
  c.n_hist = j.value("n_hist", c.n_hist);
  c.n_tar = j.value("n_tar", c.n_tar);
  c.alpha = j.value("alpha", c.alpha);
  c.beta = j.value("beta", c.beta);
  c.weighted = j.value("weighted", c.weighted);
  return c;
}

std::vector<std::string> OptimConfig::problems() const {
  std::vector<std::string> out;
  if (!(lr > 0.0)) out.emplace_back("optim.lr must be > 0");
  if (weight_decay < 0.0) out.emplace_back("optim.weight_decay must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) out.emplace_back("optim.beta1 must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) out.emplace_back("optim.beta2 must be in [0, 1)");
  if (!(eps > 0.0)) out.emplace_back("optim.eps must be > 0");
  if (batch_size < 2) out.emplace_back("optim.batch_size must be >= 2");
  if (epochs == 0) out.emplace_back("optim.epochs must be >= 1");
  if (!(temperature > 0.0)) out.emplace_back("optim.temperature must be > 0");
  return out;
}

nlohmann::json OptimConfig::to_json() const {
  return {{"lr", lr},
          {"weight_decay", weight_decay},
          {"beta1", beta1},
          {"beta2", beta2},
          {"eps", eps},
          {"warmup_steps", warmup_steps},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"temperature", temperature},
          {"mask_same_id", mask_same_id}};
}

OptimConfig OptimConfig::from_json(const nlohmann::json& j) {
  OptimConfig c;
  c.lr = j.value("lr", c.lr);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.eps = j.value("eps", c.eps);
  c.warmup_steps = j.value("warmup_steps", c.warmup_steps);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.temperature = j.value("temperature", c.temperature);
  c.mask_same_id = j.value("mask_same_id", c.mask_same_id);
  return c;
}

std::vector<std::size_t> stage1_indices(std::size_t len, std::size_t max_len,
                                        Rng& rng) {
  std::vector<std::size_t> idx(len);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (len <= max_len) return idx;
  // Partial Fisher-Yates: the first max_len slots become the sample.
  for (std::size_t i = 0; i < max_len; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(len - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(max_len);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<ItemId> stage1_sample(std::span<const ItemId> events,
                                  std::size_t max_len, Rng& rng) {
  if (max_len == 0) {
    throw Error(ErrorCode::kInvalidArgument, "stage1_sample: max_len must be >= 1");
  }
  std::vector<ItemId> out;
  for (const auto i : stage1_indices(events.size(), max_len, rng)) {
    out.push_back(events[i]);
  }
  return out;
}

std::vector<double> recency_weights(std::size_t n, double alpha, double beta,
                                LogBase base) {
  if (!(alpha > 1.0) || !(beta > alpha)) {
    throw Error(ErrorCode::kBadHyperparams,
                "recency_weights requires beta > alpha > 1 (alpha=" +
                    std::to_string(alpha) + ", beta=" + std::to_string(beta) + ")");
  }
  if (n == 0) return {};
  if (n == 1) return {1.0};
  const auto log_fn = [base](double x) {
    return base == LogBase::kNatural ? std::log(x) : std::log10(x);
  };
  const double step = (beta - alpha) / static_cast<double>(n - 1);
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = log_fn(alpha + static_cast<double>(i) * step);
  }
  const double max = *std::max_element(w.begin(), w.end());
  for (auto& x : w) x /= max;
  return w;
}

std::vector<std::size_t> stage2_select(std::size_t seq_len, std::size_t count,
                                       std::span<const double> weights,
                                       Rng& rng) {
  if (count > seq_len) {
    throw Error(ErrorCode::kCountExceedsLen,
                "stage2_select: count " + std::to_string(count) +
                    " exceeds sequence length " + std::to_string(seq_len),
                count);
  }
  if (weights.size() != seq_len) {
    throw Error(ErrorCode::kInvalidArgument,
                "stage2_select: weights length differs from sequence length");
  }
  for (const double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "stage2_select: weights must be positive and finite");
    }
  }
  std::vector<std::size_t> out;
  if (count == seq_len) {
    out.resize(seq_len);
    std::iota(out.begin(), out.end(), std::size_t{0});
    return out;
  }
  std::vector<double> remaining(weights.begin(), weights.end());
  out.reserve(count);
  for (std::size_t draw = 0; draw < count; ++draw) {
    double total = 0.0;
    for (const double w : remaining) total += w;
    const double u = rng.uniform() * total;
    double acc = 0.0;
    std::size_t pick = seq_len;
    std::size_t last_live = seq_len;
    for (std::size_t i = 0; i < seq_len; ++i) {
      if (remaining[i] == 0.0) continue;
      last_live = i;
      acc += remaining[i];
      if (u < acc) {
        pick = i;
        break;
      }
    }
    // Rounding can leave u just past the final bucket.
    if (pick == seq_len) pick = last_live;
    out.push_back(pick);
    remaining[pick] = 0.0;
  }
  std::sort(out.begin(), out.end());
  return out;
}

PairLayout PairLayout::regular(std::size_t batch, std::size_t n_hist,
                               std::size_t n_tar,
                               std::span<const ItemId> item_ids) {
  PairLayout layout;
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < n_hist; ++h) layout.user_owner.push_back(b);
    for (std::size_t t = 0; t < n_tar; ++t) layout.item_owner.push_back(b);
  }
  layout.item_ids.assign(item_ids.begin(), item_ids.end());
  return layout;
}

template <class T>
nn::Tensor<T> dense_all_action_loss(const nn::Tensor<T>& users,
                                    const nn::Tensor<T>& items,
                                    const PairLayout& layout,
                                    double temperature) {
  if (!(temperature > 0.0)) {
    throw Error(ErrorCode::kBadHyperparams, "temperature must be > 0");
  }
  if (users.rank() != 2 || items.rank() != 2 || users.cols() != items.cols()) {
    throw Error(ErrorCode::kShapeMismatch,
                "dense_all_action_loss: embedding widths differ");
  }
  if (layout.user_owner.size() != users.rows() ||
      layout.item_owner.size() != items.rows() ||
      (!layout.item_ids.empty() && layout.item_ids.size() != items.rows())) {
    throw Error(ErrorCode::kShapeMismatch,
                "dense_all_action_loss: layout does not match embedding rows");
  }
  const std::set<std::size_t> members(layout.user_owner.begin(),
                                      layout.user_owner.end());
  if (members.size() < 2) {
    throw Error(ErrorCode::kBatchTooSmall,
                "dense_all_action_loss needs at least two users per batch",
                members.size());
  }

  const std::size_t n_items = items.rows();
  std::vector<std::size_t> rows, targets;
  std::vector<std::uint8_t> allowed;
  for (std::size_t u = 0; u < users.rows(); ++u) {
    const auto owner = layout.user_owner[u];
    for (std::size_t j = 0; j < n_items; ++j) {
      if (layout.item_owner[j] != owner) continue;
      rows.push_back(u);
      targets.push_back(j);
      for (std::size_t k = 0; k < n_items; ++k) {
        bool ok = layout.item_owner[k] != owner;
        if (ok && !layout.item_ids.empty() &&
            layout.item_ids[k] == layout.item_ids[j]) {
          ok = false;
        }
        allowed.push_back(ok || k == j ? 1 : 0);
      }
    }
  }
  if (rows.empty()) {
    throw Error(ErrorCode::kBatchTooSmall,
                "dense_all_action_loss: no positive pairs in batch");
  }
  auto logits = nn::scale(nn::matmul_nt(users, items),
                          static_cast<T>(1.0 / temperature));
  return nn::cross_entropy(logits, rows, targets, allowed);
}

template nn::Tensor<float> dense_all_action_loss(const nn::Tensor<float>&,
                                                 const nn::Tensor<float>&,
                                                 const PairLayout&, double);
template nn::Tensor<double> dense_all_action_loss(const nn::Tensor<double>&,
                                                  const nn::Tensor<double>&,
                                                  const PairLayout&, double);

IdEmbeddingTable::IdEmbeddingTable(std::vector<ItemId> ids, std::size_t dim,
                                   std::uint64_t seed)
    : dim_(dim), ids_(std::move(ids)) {
  if (dim_ == 0) {
    throw Error(ErrorCode::kInvalidArgument, "id embedding dim must be >= 1");
  }
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!rows_.emplace(ids_[i], i).second) {
      throw Error(ErrorCode::kDuplicateId,
                  "duplicate item id " + std::to_string(ids_[i]), ids_[i]);
    }
  }
  Rng rng = Rng::derive(seed, 0x1dE);
  table_ = nn::normal_param<float>({ids_.size(), dim_}, 1.0 / std::sqrt(dim_), rng);
}

std::size_t IdEmbeddingTable::row(ItemId id) const {
  const auto it = rows_.find(id);
  if (it == rows_.end()) {
    throw Error(ErrorCode::kMissingItem,
                "no id embedding for item " + std::to_string(id), id);
  }
  return it->second;
}

std::span<const float> IdEmbeddingTable::lookup(ItemId id) const {
  return table_.data().subspan(row(id) * dim_, dim_);
}

Tensorf IdEmbeddingTable::gather(std::span<const ItemId> items) const {
  std::vector<std::size_t> idx;
  idx.reserve(items.size());
  for (const auto id : items) idx.push_back(row(id));
  return nn::gather_rows(table_, idx);
}

Tensorf content_sequence(const cex::EmbeddingProvider& provider,
                         std::span<const ItemId> items) {
  if (const auto* table = dynamic_cast<const IdEmbeddingTable*>(&provider)) {
    return table->gather(items);
  }
  return pal::content_matrix(provider, items);
}

std::vector<TrainExample> examples_from_split(
    std::span<const data::InteractionSequence> sequences) {
  std::vector<TrainExample> out;
  for (const auto& seq : sequences) {
    TrainExample ex{seq.user_id, seq.history_items(), seq.target_items()};
    if (ex.history.empty() || ex.target.empty()) continue;
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<TrainExample> examples_from_leave_one_out(
    std::span<const data::InteractionSequence> sequences,
    std::size_t target_len) {
  std::vector<TrainExample> out;
  const std::size_t keep_target = std::max<std::size_t>(target_len, 1);
  for (const auto& seq : sequences) {
    if (seq.events.size() < 4) continue;
    const auto split = data::split_leave_one_out(seq);
    const std::size_t t = std::min(keep_target, split.train.size() - 1);
    const auto cut = split.train.end() - static_cast<std::ptrdiff_t>(t);
    out.push_back(TrainExample{seq.user_id, {split.train.begin(), cut},
                               {cut, split.train.end()}});
  }
  return out;
}

namespace {

constexpr std::uint64_t kStage1HistorySalt = 0x51;
constexpr std::uint64_t kStage1TargetSalt = 0x52;
constexpr std::uint64_t kStage2Salt = 0x53;
constexpr std::uint64_t kShuffleSalt = 0x5f;

std::vector<std::size_t> select_positions(std::size_t len, std::size_t count,
                                          const SamplingConfig& cfg, Rng& rng) {
  const std::size_t k = std::min(count, len);
  const auto weights = cfg.weighted ? recency_weights(len, cfg.alpha, cfg.beta)
                                    : std::vector<double>(len, 1.0);
  return stage2_select(len, k, weights, rng);
}

}  // namespace

UserSample sample_user(const TrainExample& example, const SamplingConfig& cfg,
                       std::uint64_t seed, std::uint64_t epoch) {
  const std::uint64_t user_seed = seed ^ example.user_id;
  Rng hist_rng = Rng::derive(user_seed, epoch, kStage1HistorySalt);
  Rng tar_rng = Rng::derive(user_seed, epoch, kStage1TargetSalt);
  Rng select_rng = Rng::derive(user_seed, epoch, kStage2Salt);

  UserSample s;
  s.user_id = example.user_id;
  s.history = stage1_sample(example.history, cfg.max_hist, hist_rng);
  s.target = stage1_sample(example.target, cfg.max_tar, tar_rng);
  s.history_positions = select_positions(s.history.size(), cfg.n_hist, cfg, select_rng);
  s.target_positions = select_positions(s.target.size(), cfg.n_tar, cfg, select_rng);
  return s;
}

TrainBatch make_batch(std::span<const TrainExample> examples,
                      std::span<const std::size_t> members,
                      const SamplingConfig& cfg, std::uint64_t seed,
                      std::uint64_t epoch) {
  TrainBatch batch;
  batch.users.reserve(members.size());
  for (const auto m : members) {
    batch.users.push_back(sample_user(examples[m], cfg, seed, epoch));
  }
  return batch;
}

nlohmann::json EpochLog::to_json() const {
  nlohmann::json j = {{"epoch", epoch}, {"loss", loss}, {"lr", lr},
                      {"wallclock_s", wallclock_s}};
  if (metrics) j["metrics"] = *metrics;
  return j;
}

Trainer::Trainer(pal::PalModel& model, const cex::EmbeddingProvider& provider,
                 SamplingConfig sampling, OptimConfig optim, std::uint64_t seed,
                 IdEmbeddingTable* id_table)
    : model_(&model),
      provider_(&provider),
      sampling_(sampling),
      optim_(optim),
      seed_(seed),
      params_(model.parameter_tensors()) {
  std::vector<std::string> problems = sampling_.problems();
  for (auto& p : optim_.problems()) problems.push_back(std::move(p));
  if (sampling_.max_hist > model.config().max_len ||
      sampling_.max_tar > model.config().max_len) {
    problems.emplace_back("sampling.max_hist/max_tar must not exceed model.max_len");
  }
  if (provider.dim() != model.config().d_content) {
    throw Error(ErrorCode::kDimMismatch,
                "provider dim " + std::to_string(provider.dim()) +
                    " differs from model d_content " +
                    std::to_string(model.config().d_content));
  }
  if (!problems.empty()) {
    std::string msg = "invalid training config:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw Error(ErrorCode::kConfig, msg);
  }
  if (id_table != nullptr) params_.push_back(id_table->table());
  nn::AdamWConfig adam;
  adam.beta1 = optim_.beta1;
  adam.beta2 = optim_.beta2;
  adam.eps = optim_.eps;
  adam.weight_decay = optim_.weight_decay;
  optimizer_ = nn::make_adamw_state(params_, adam);
}

Tensorf Trainer::batch_loss(const TrainBatch& batch) const {
  const auto variant = model_->config().item_tower;
  const pal::UserTower user_tower(*model_);
  const pal::ItemTower item_tower(*model_, variant);

  std::vector<Tensorf> user_rows, item_rows;
  PairLayout layout;
  for (std::size_t b = 0; b < batch.users.size(); ++b) {
    const auto& s = batch.users[b];
    try {
      user_rows.push_back(user_tower.forward(
          content_sequence(*provider_, s.history), s.history_positions));
      if (variant == pal::ItemTowerVariant::kA) {
        item_rows.push_back(nn::gather_rows(
            item_tower.forward(content_sequence(*provider_, s.target)),
            s.target_positions));
      } else {
        std::vector<ItemId> chosen;
        for (const auto p : s.target_positions) chosen.push_back(s.target[p]);
        item_rows.push_back(item_tower.forward(content_sequence(*provider_, chosen)));
      }
    } catch (const Error& e) {
      throw Error(e.code(),
                  "user " + std::to_string(s.user_id) + ", step " +
                      std::to_string(optimizer_.step) + ": " + e.what(),
                  e.subject());
    }
    for (std::size_t i = 0; i < s.history_positions.size(); ++i) {
      layout.user_owner.push_back(b);
    }
    for (const auto p : s.target_positions) {
      layout.item_owner.push_back(b);
      layout.item_ids.push_back(s.target[p]);
    }
  }
  if (!optim_.mask_same_id) layout.item_ids.clear();
  return dense_all_action_loss(nn::concat_rows<float>(user_rows),
                               nn::concat_rows<float>(item_rows), layout,
                               optim_.temperature);
}

std::vector<std::vector<std::size_t>> Trainer::epoch_batches(
    std::size_t n_examples, std::uint64_t epoch) const {
  std::vector<std::size_t> order(n_examples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = Rng::derive(seed_, epoch, kShuffleSalt);
  rng.shuffle(order.begin(), order.end());
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n_examples; start += optim_.batch_size) {
    const auto end = std::min(n_examples, start + optim_.batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  if (batches.size() > 1 && batches.back().size() < 2) {
    auto tail = std::move(batches.back());
    batches.pop_back();
    batches.back().insert(batches.back().end(), tail.begin(), tail.end());
  }
  return batches;
}

double Trainer::probe_loss(std::span<const TrainExample> examples,
                           std::uint64_t epoch) const {
  const auto batches = epoch_batches(examples.size(), epoch);
  if (batches.empty()) {
    throw Error(ErrorCode::kEmptyInput, "no training examples");
  }
  return batch_loss(make_batch(examples, batches.front(), sampling_, seed_, epoch))
      .item();
}

std::vector<EpochLog> Trainer::fit(std::span<const TrainExample> examples,
                                   const EpochCallback& on_epoch) {
  if (examples.size() < 2) {
    throw Error(ErrorCode::kBatchTooSmall,
                "training needs at least two users", examples.size());
  }
  const std::uint64_t per_epoch = epoch_batches(examples.size(), 0).size();
  const std::uint64_t total_steps = per_epoch * optim_.epochs;
  const auto started = std::chrono::steady_clock::now();
  std::vector<EpochLog> log;
  for (std::size_t epoch = 0; epoch < optim_.epochs; ++epoch) {
    double loss_sum = 0.0;
    double lr = 0.0;
    const auto batches = epoch_batches(examples.size(), epoch);
    for (const auto& members : batches) {
      const auto batch = make_batch(examples, members, sampling_, seed_, epoch);
      nn::zero_grads(params_);
      auto loss = batch_loss(batch);
      loss.backward();
      lr = nn::cosine_lr(optimizer_.step, total_steps, optim_.lr,
                         optim_.warmup_steps);
      nn::adamw_step(params_, optimizer_, lr);
      loss_sum += loss.item();
    }
    EpochLog entry;
    entry.epoch = epoch + 1;
    entry.loss = loss_sum / static_cast<double>(batches.size());
    entry.lr = lr;
    entry.wallclock_s = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - started)
                            .count();
    if (on_epoch) entry.metrics = on_epoch(epoch + 1);
    log.push_back(std::move(entry));
  }
  return log;
}

}  // namespace learn::training
