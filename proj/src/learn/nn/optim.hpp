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
#include <span>
#include <vector>

#include "learn/nn/tensor.hpp"

namespace learn::nn {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct OptimizerState {
  AdamWConfig config;
  std::vector<std::vector<float>> first_moment;
  std::vector<std::vector<float>> second_moment;
  std::uint64_t step = 0;
};

OptimizerState make_adamw_state(std::span<const Tensorf> params,
                                const AdamWConfig& config);

// Decoupled weight decay (p -= lr * wd * p) followed by the bias-corrected
// Adam update. Parameters without a gradient are treated as zero-gradient.
void adamw_step(std::span<Tensorf> params, OptimizerState& state, double lr);

void zero_grads(std::span<Tensorf> params);

// Step is zero-based. Linear warmup reaches base_lr at step warmup_steps - 1,
// then half-cosine decay to 0 at total_steps.
double cosine_lr(std::uint64_t step, std::uint64_t total_steps, double base_lr,
                 std::uint64_t warmup_steps);

}  // namespace learn::nn
