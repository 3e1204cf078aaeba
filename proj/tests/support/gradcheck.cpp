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

#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "learn/nn/layers.hpp"
#include "learn/rng.hpp"
#include "learn/training.hpp"

namespace learn::testing {

using namespace learn::nn;

GradReport check_gradients(std::vector<Tensord> inputs,
                           const std::function<Tensord()>& loss, double h) {
  for (auto& t : inputs) t.zero_grad();
  loss().backward();
  std::vector<std::vector<double>> analytic;
  for (const auto& t : inputs) {
    if (t.has_grad()) {
      analytic.emplace_back(t.grad().begin(), t.grad().end());
    } else {
      analytic.emplace_back(t.size(), 0.0);
    }
  }

  GradReport rep;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto values = inputs[i].mutable_data();
    for (std::size_t e = 0; e < values.size(); ++e) {
      const double keep = values[e];
      values[e] = keep + h;
      const double up = loss().item();
      values[e] = keep - h;
      const double down = loss().item();
      values[e] = keep;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[i][e];
      const double abs_err = std::abs(a - numeric);
      const double rel = abs_err / std::max({std::abs(a), std::abs(numeric), kRelErrorFloor});
      rep.max_abs_error = std::max(rep.max_abs_error, abs_err);
      if (rel > rep.max_rel_error) {
        rep.max_rel_error = rel;
        rep.worst = "input " + std::to_string(i) + " element " + std::to_string(e) +
                    ": analytic " + std::to_string(a) + " numeric " +
                    std::to_string(numeric);
      }
      ++rep.checked;
    }
  }
  return rep;
}

namespace {

Tensord random_tensor(Shape shape, Rng& rng, double stddev = 1.0) {
  return normal_param<double>(std::move(shape), stddev, rng);
}

// Fixed random linear read-out so every output element reaches the loss
// with its own weight.
struct Readout {
  Tensord weights;
  Tensord operator()(const Tensord& out) const { return sum(mul(out, weights)); }
};

Readout readout_for(const Shape& shape, Rng& rng) {
  return {Tensord::from(shape, [&] {
    std::vector<double> w(shape_size(shape));
    for (auto& x : w) x = rng.normal();
    return w;
  }())};
}

std::vector<Tensord> tensors_of(const ParamList<double>& params) {
  std::vector<Tensord> out;
  for (const auto& p : params) out.push_back(p.tensor);
  return out;
}

// Moves every parameter off its constant init.
void randomize(const ParamList<double>& params, Rng& rng, double stddev) {
  for (auto p : params) {
    for (auto& x : p.tensor.mutable_data()) x += rng.normal() * stddev;
  }
}

}  // namespace

std::vector<NamedGradReport> gradient_suite(std::uint64_t seed) {
  Rng rng = Rng::derive(seed, 0x6c);
  std::vector<NamedGradReport> out;
  auto run = [&](const std::string& name, std::vector<Tensord> inputs,
                 const std::function<Tensord()>& f) {
    out.push_back({name, check_gradients(std::move(inputs), f)});
  };

  const std::size_t r = 2 + rng.below(3), c = 2 + rng.below(4), k = 2 + rng.below(3);

  {
    auto a = random_tensor({r, k}, rng), b = random_tensor({k, c}, rng);
    auto ro = readout_for({r, c}, rng);
    run("matmul", {a, b}, [=] { return ro(matmul(a, b)); });
  }
  {
    auto a = random_tensor({r, k}, rng), b = random_tensor({c, k}, rng);
    auto ro = readout_for({r, c}, rng);
    run("matmul_nt", {a, b}, [=] { return ro(matmul_nt(a, b)); });
  }
  {
    auto x = random_tensor({r, k}, rng), w = random_tensor({k, c}, rng),
         b = random_tensor({c}, rng);
    auto ro = readout_for({r, c}, rng);
    run("linear", {x, w, b}, [=] { return ro(linear(x, w, b)); });
  }
  {
    auto a = random_tensor({r, c}, rng), b = random_tensor({r, c}, rng),
         bias = random_tensor({c}, rng);
    auto ro = readout_for({r, c}, rng);
    run("add", {a, b}, [=] { return ro(add(a, b)); });
    run("add_bias", {a, bias}, [=] { return ro(add_bias(a, bias)); });
    run("mul", {a, b}, [=] { return ro(mul(a, b)); });
    run("scale", {a}, [=] { return ro(scale(a, 0.37)); });
    run("gelu", {a}, [=] { return ro(gelu(scale(a, 2.0))); });
    run("softmax", {a}, [=] { return ro(softmax(a)); });
    run("l2_normalize_rows", {a}, [=] { return ro(l2_normalize_rows(a)); });
    run("mean", {a}, [=] { return scale(mean(mul(a, a)), 3.0); });
  }
  {
    auto x = random_tensor({r, c + 1}, rng), g = random_tensor({c + 1}, rng),
         b = random_tensor({c + 1}, rng);
    auto ro = readout_for({r, c + 1}, rng);
    run("layer_norm", {x, g, b}, [=] { return ro(layer_norm(x, g, b)); });
  }
  {
    auto a = random_tensor({r + 2, c}, rng);
    std::vector<std::size_t> rows = {0, r + 1, 0, 1};
    auto ro = readout_for({rows.size(), c}, rng);
    run("gather_rows", {a}, [=] { return ro(gather_rows(a, rows)); });
    auto b = random_tensor({2, c}, rng);
    auto ro2 = readout_for({r + 4, c}, rng);
    run("concat_rows", {a, b}, [=] {
      std::vector<Tensord> parts = {a, b};
      return ro2(concat_rows<double>(parts));
    });
  }
  {
    const std::size_t len = 3 + rng.below(4), heads = 2, width = 4;
    auto q = random_tensor({len, width}, rng), kk = random_tensor({len, width}, rng),
         v = random_tensor({len, width}, rng);
    auto ro = readout_for({len, width}, rng);
    const auto causal = AttentionMask::causal(len);
    const auto diag = AttentionMask::diagonal(len);
    run("masked_attention.causal", {q, kk, v},
        [=] { return ro(masked_attention(q, kk, v, causal, heads)); });
    run("masked_attention.diagonal", {q, kk, v},
        [=] { return ro(masked_attention(q, kk, v, diag, heads)); });
    auto q2 = random_tensor({2, width}, rng);
    auto ro2 = readout_for({2, width}, rng);
    const auto full = AttentionMask::full(2, len);
    run("masked_attention.full", {q2, kk, v},
        [=] { return ro2(masked_attention(q2, kk, v, full, 1)); });
  }
  {
    const std::size_t rows_n = 3, cols = 5;
    auto logits = random_tensor({rows_n, cols}, rng, 2.0);
    std::vector<std::size_t> rows = {0, 1, 2, 2};
    std::vector<std::size_t> targets = {1, 4, 0, 3};
    std::vector<std::uint8_t> allowed(rows.size() * cols);
    for (auto& a : allowed) a = rng.uniform() < 0.6 ? 1 : 0;
    run("cross_entropy", {logits},
        [=] { return cross_entropy(logits, rows, targets, allowed); });
  }

  const std::size_t width = 4, len = 3 + rng.below(3);
  auto x = random_tensor({len, width}, rng);
  auto ro = readout_for({len, width}, rng);
  const auto mask = AttentionMask::causal(len);
  {
    Linear<double> layer(width, 3, rng);
    ParamList<double> params;
    layer.collect("linear", params);
    randomize(params, rng, 0.5);
    auto inputs = tensors_of(params);
    inputs.push_back(x);
    auto ro3 = readout_for({len, 3}, rng);
    run("layer.Linear", inputs, [=] { return ro3(layer(x)); });
  }
  {
    LayerNorm<double> layer(width);
    ParamList<double> params;
    layer.collect("norm", params);
    randomize(params, rng, 0.5);
    auto inputs = tensors_of(params);
    inputs.push_back(x);
    run("layer.LayerNorm", inputs, [=] { return ro(layer(x)); });
  }
  {
    SelfAttention<double> layer(width, 2, rng);
    ParamList<double> params;
    layer.collect("attn", params);
    randomize(params, rng, 0.5);
    auto inputs = tensors_of(params);
    inputs.push_back(x);
    run("layer.SelfAttention", inputs, [=] { return ro(layer(x, mask)); });
  }
  {
    FeedForward<double> layer(width, 2 * width, rng);
    ParamList<double> params;
    layer.collect("ffn", params);
    randomize(params, rng, 0.5);
    auto inputs = tensors_of(params);
    inputs.push_back(x);
    run("layer.FeedForward", inputs, [=] { return ro(layer(x)); });
  }
  {
    TransformerBlock<double> layer(width, 2, rng);
    ParamList<double> params;
    layer.collect("block", params);
    randomize(params, rng, 0.3);
    auto inputs = tensors_of(params);
    inputs.push_back(x);
    run("layer.TransformerBlock", inputs, [=] { return ro(layer(x, mask)); });
  }
  {
    // Uneven rows per member and a repeated item id across members.
    training::PairLayout layout;
    layout.user_owner = {0, 0, 1, 2, 2, 2};
    layout.item_owner = {0, 1, 1, 2, 0, 2, 1};
    layout.item_ids = {10, 11, 12, 13, 14, 10, 15};
    auto u = random_tensor({6, width}, rng), it = random_tensor({7, width}, rng);
    run("dense_all_action_loss", {u, it}, [=] {
      return training::dense_all_action_loss(l2_normalize_rows(u), l2_normalize_rows(it),
                                             layout, 0.2);
    });
    auto layout2 = training::PairLayout::regular(3, 2, 2);
    auto u2 = random_tensor({6, width}, rng), i2 = random_tensor({6, width}, rng);
    run("dense_all_action_loss.regular", {u2, i2},
        [=] { return training::dense_all_action_loss(u2, i2, layout2, 1.0); });
  }
  return out;
}

}  // namespace learn::testing
