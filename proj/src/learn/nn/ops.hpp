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
#include <vector>

#include "learn/nn/tensor.hpp"

// Differentiable ops over row-major 2-D tensors ([rows, cols]); 1-D tensors
// serve as bias/gain vectors and shape {1} as scalars.
namespace learn::nn {

// Logit assigned to disallowed attention positions before the softmax.
inline constexpr double kMaskedLogit = -1e9;

// mask(t, s) == true means query t may attend to key s.
class AttentionMask {
 public:
  AttentionMask(std::size_t rows, std::size_t cols, bool fill = false)
      : rows_(rows), cols_(cols), allowed_(rows * cols, fill ? 1 : 0) {}

  static AttentionMask causal(std::size_t length);
  static AttentionMask diagonal(std::size_t length);
  static AttentionMask full(std::size_t rows, std::size_t cols) {
    return AttentionMask(rows, cols, true);
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool allowed(std::size_t t, std::size_t s) const {
    return allowed_[t * cols_ + s] != 0;
  }
  void set(std::size_t t, std::size_t s, bool value) {
    allowed_[t * cols_ + s] = value ? 1 : 0;
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<std::uint8_t> allowed_;
};

template <class T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
// a * b^T
template <class T> Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b);
// x * w + bias, w stored [in, out]; bias may be undefined.
template <class T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias);

template <class T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <class T> Tensor<T> add_bias(const Tensor<T>& a, const Tensor<T>& bias);
template <class T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <class T> Tensor<T> scale(const Tensor<T>& a, T factor);

template <class T> Tensor<T> gelu(const Tensor<T>& a);
template <class T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain,
                     const Tensor<T>& bias, T eps = T(1e-5));
template <class T> Tensor<T> softmax(const Tensor<T>& a);

// Scaled dot-product attention split over `heads` column groups. Logits are
// scaled by 1/sqrt(head_dim); disallowed positions get exactly zero weight.
template <class T>
Tensor<T> masked_attention(const Tensor<T>& q, const Tensor<T>& k,
                           const Tensor<T>& v, const AttentionMask& mask,
                           std::size_t heads = 1);

template <class T> Tensor<T> l2_normalize_rows(const Tensor<T>& a);
template <class T>
Tensor<T> gather_rows(const Tensor<T>& a, std::span<const std::size_t> rows);
template <class T>
Tensor<T> concat_rows(std::span<const Tensor<T>> parts);

template <class T> Tensor<T> sum(const Tensor<T>& a);
template <class T> Tensor<T> mean(const Tensor<T>& a);

// Mean softmax cross-entropy over (row, target) pairs where each pair only
// competes against the columns flagged in its slice of `allowed`
// (pairs x cols). The target column is always part of the competition.
template <class T>
Tensor<T> cross_entropy(const Tensor<T>& logits,
                        std::span<const std::size_t> rows,
                        std::span<const std::size_t> targets,
                        std::span<const std::uint8_t> allowed);

}  // namespace learn::nn
