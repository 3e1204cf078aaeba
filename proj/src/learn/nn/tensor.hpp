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
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "learn/error.hpp"

namespace learn::nn {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape);

// A node on the autograd tape. Results of ops hold their parents and a
// backward closure only when some input requires a gradient.
template <class T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  std::span<T> ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
    return grad;
  }
};

// Shared handle to a Node. Copies alias the same storage; parameters are
// Tensors whose storage is owned by the model.
template <class T>
class Tensor {
 public:
  using Scalar = T;

  Tensor() = default;

  static Tensor from(Shape shape, std::vector<T> data,
                     bool requires_grad = false) {
    if (shape_size(shape) != data.size()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "data length " + std::to_string(data.size()) +
                      " does not match shape " + shape_string(shape));
    }
    auto node = std::make_shared<Node<T>>();
    node->shape = std::move(shape);
    node->value = std::move(data);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    std::vector<T> data(shape_size(shape), T(0));
    return from(std::move(shape), std::move(data), requires_grad);
  }

  explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t rows() const { return node_->shape.at(0); }
  std::size_t cols() const {
    return node_->shape.size() < 2 ? 1 : node_->shape[1];
  }
  std::size_t size() const { return node_->value.size(); }

  std::span<const T> data() const { return node_->value; }
  std::span<T> mutable_data() { return node_->value; }
  T at(std::size_t r, std::size_t c) const {
    return node_->value[r * cols() + c];
  }
  T item() const { return node_->value.at(0); }

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return node_->grad.size() == node_->value.size(); }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return node_->ensure_grad(); }
  void zero_grad() { node_->grad.assign(node_->value.size(), T(0)); }

  bool same_storage(const Tensor& other) const noexcept {
    return node_ == other.node_;
  }

  Node<T>& node() const { return *node_; }
  const std::shared_ptr<Node<T>>& node_ptr() const { return node_; }

  // Reverse-mode pass seeded with d(self)/d(self) = 1; self must be scalar.
  void backward() const;

  // Value-only copy detached from the tape.
  Tensor detach() const {
    return from(node_->shape, node_->value, false);
  }

 private:
  std::shared_ptr<Node<T>> node_;
};

template <class T>
void Tensor<T>::backward() const {
  if (size() != 1) {
    throw Error(ErrorCode::kShapeMismatch,
                "backward() needs a scalar, got " + shape_string(shape()));
  }
  // Iterative post-order DFS gives a topological order of the tape.
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> visited;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  node_->ensure_grad()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>& n = **it;
    if (n.backward_fn && n.grad.size() == n.value.size()) n.backward_fn(n);
  }
}

using Tensorf = Tensor<float>;
using Tensord = Tensor<double>;

}  // namespace learn::nn
