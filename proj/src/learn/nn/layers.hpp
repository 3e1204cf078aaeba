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

#include <cmath>
#include <string>
#include <vector>

#include "learn/nn/ops.hpp"
#include "learn/rng.hpp"

namespace learn::nn {

template <class T>
struct NamedParam {
  std::string name;
  Tensor<T> tensor;
};

template <class T>
using ParamList = std::vector<NamedParam<T>>;

template <class T>
Tensor<T> normal_param(Shape shape, double stddev, Rng& rng) {
  std::vector<T> data(shape_size(shape));
  for (auto& x : data) x = static_cast<T>(rng.normal() * stddev);
  return Tensor<T>::from(std::move(shape), std::move(data), true);
}

template <class T>
Tensor<T> constant_param(Shape shape, T value) {
  std::vector<T> data(shape_size(shape), value);
  return Tensor<T>::from(std::move(shape), std::move(data), true);
}

template <class T>
class Linear {
 public:
  Linear() = default;
  Linear(std::size_t in, std::size_t out, Rng& rng, double init_std = 0.02)
      : weight_(normal_param<T>({in, out}, init_std, rng)),
        bias_(constant_param<T>({out}, T(0))) {}

  Tensor<T> operator()(const Tensor<T>& x) const {
    return linear(x, weight_, bias_);
  }

  void collect(const std::string& prefix, ParamList<T>& out) const {
    out.push_back({prefix + ".weight", weight_});
    out.push_back({prefix + ".bias", bias_});
  }

  Tensor<T>& weight() { return weight_; }
  Tensor<T>& bias() { return bias_; }

 private:
  Tensor<T> weight_;
  Tensor<T> bias_;
};

template <class T>
class LayerNorm {
 public:
  LayerNorm() = default;
  explicit LayerNorm(std::size_t width)
      : gain_(constant_param<T>({width}, T(1))),
        bias_(constant_param<T>({width}, T(0))) {}

  Tensor<T> operator()(const Tensor<T>& x) const {
    return layer_norm(x, gain_, bias_);
  }

  void collect(const std::string& prefix, ParamList<T>& out) const {
    out.push_back({prefix + ".gain", gain_});
    out.push_back({prefix + ".bias", bias_});
  }

 private:
  Tensor<T> gain_;
  Tensor<T> bias_;
};

template <class T>
class SelfAttention {
 public:
  SelfAttention() = default;
  SelfAttention(std::size_t width, std::size_t heads, Rng& rng)
      : heads_(heads),
        query_(width, width, rng),
        key_(width, width, rng),
        value_(width, width, rng),
        output_(width, width, rng) {}

  Tensor<T> operator()(const Tensor<T>& x, const AttentionMask& mask) const {
    auto mixed = masked_attention(query_(x), key_(x), value_(x), mask, heads_);
    return output_(mixed);
  }

  void collect(const std::string& prefix, ParamList<T>& out) const {
    query_.collect(prefix + ".query", out);
    key_.collect(prefix + ".key", out);
    value_.collect(prefix + ".value", out);
    output_.collect(prefix + ".output", out);
  }

 private:
  std::size_t heads_ = 1;
  Linear<T> query_, key_, value_, output_;
};

template <class T>
class FeedForward {
 public:
  FeedForward() = default;
  FeedForward(std::size_t width, std::size_t hidden, Rng& rng)
      : up_(width, hidden, rng), down_(hidden, width, rng) {}

  Tensor<T> operator()(const Tensor<T>& x) const { return down_(gelu(up_(x))); }

  void collect(const std::string& prefix, ParamList<T>& out) const {
    up_.collect(prefix + ".up", out);
    down_.collect(prefix + ".down", out);
  }

 private:
  Linear<T> up_, down_;
};

// Pre-LayerNorm block: x + attn(ln(x)), then x + ffn(ln(x)).
template <class T>
class TransformerBlock {
 public:
  TransformerBlock() = default;
  TransformerBlock(std::size_t width, std::size_t heads, Rng& rng)
      : attn_norm_(width),
        attn_(width, heads, rng),
        ffn_norm_(width),
        ffn_(width, 4 * width, rng) {}

  Tensor<T> operator()(const Tensor<T>& x, const AttentionMask& mask) const {
    auto h = add(x, attn_(attn_norm_(x), mask));
    return add(h, ffn_(ffn_norm_(h)));
  }

  void collect(const std::string& prefix, ParamList<T>& out) const {
    attn_norm_.collect(prefix + ".attn_norm", out);
    attn_.collect(prefix + ".attn", out);
    ffn_norm_.collect(prefix + ".ffn_norm", out);
    ffn_.collect(prefix + ".ffn", out);
  }

 private:
  LayerNorm<T> attn_norm_;
  SelfAttention<T> attn_;
  LayerNorm<T> ffn_norm_;
  FeedForward<T> ffn_;
};

}  // namespace learn::nn
