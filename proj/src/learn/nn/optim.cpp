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

#include "learn/nn/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace learn::nn {

OptimizerState make_adamw_state(std::span<const Tensorf> params,
                                const AdamWConfig& config) {
  OptimizerState state;
  state.config = config;
  for (const auto& p : params) {
    state.first_moment.emplace_back(p.size(), 0.0F);
    state.second_moment.emplace_back(p.size(), 0.0F);
  }
  return state;
}

void adamw_step(std::span<Tensorf> params, OptimizerState& state, double lr) {
  if (params.size() != state.first_moment.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "adamw_step: " + std::to_string(params.size()) +
                    " params but state for " +
                    std::to_string(state.first_moment.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.first_moment[i].size() != params[i].size() ||
        state.second_moment[i].size() != params[i].size()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "adamw_step: moment shape differs for parameter " +
                      std::to_string(i),
                  i);
    }
  }
  const auto& cfg = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  const double decay = 1.0 - lr * cfg.weight_decay;

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& param = params[i];
    auto values = param.mutable_data();
    const bool has_grad = param.has_grad();
    auto grad = param.grad();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double g = has_grad ? grad[j] : 0.0;
      const double mj = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
      const double vj = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
      m[j] = static_cast<float>(mj);
      v[j] = static_cast<float>(vj);
      const double m_hat = mj / correction1;
      const double v_hat = vj / correction2;
      const double updated = static_cast<double>(values[j]) * decay -
                             lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
      values[j] = static_cast<float>(updated);
    }
  }
}

void zero_grads(std::span<Tensorf> params) {
  for (auto& p : params) p.zero_grad();
}

double cosine_lr(std::uint64_t step, std::uint64_t total_steps, double base_lr,
                 std::uint64_t warmup_steps) {
  if (warmup_steps > 0 && step < warmup_steps) {
    return base_lr * static_cast<double>(step + 1) /
           static_cast<double>(warmup_steps);
  }
  if (total_steps <= warmup_steps) return base_lr;
  const double progress =
      std::clamp(static_cast<double>(step - warmup_steps) /
                     static_cast<double>(total_steps - warmup_steps),
                 0.0, 1.0);
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace learn::nn
