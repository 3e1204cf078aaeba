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

#include <cmath>
#include <fstream>

#include "catch_amalgamated.hpp"
#include "learn/error.hpp"
#include "learn/nn/checkpoint.hpp"
#include "learn/nn/optim.hpp"
#include "oracles.hpp"

using namespace learn;
using namespace learn::nn;
using Catch::Approx;

TEST_CASE("AdamW first step moves each weight by lr against the gradient sign") {
  std::vector<Tensorf> params = {Tensorf::from({3}, {1.0f, -1.0f, 0.5f}, true)};
  params[0].mutable_grad()[0] = 0.3f;
  params[0].mutable_grad()[1] = -7.0f;
  params[0].mutable_grad()[2] = 0.0f;
  AdamWConfig cfg;
  cfg.weight_decay = 0.0;
  auto state = make_adamw_state(params, cfg);
  adamw_step(params, state, 0.01);
  CHECK(params[0].data()[0] == Approx(0.99).epsilon(1e-6));
  CHECK(params[0].data()[1] == Approx(-0.99).epsilon(1e-6));
  CHECK(params[0].data()[2] == 0.5f);
  CHECK(state.step == 1);
}

TEST_CASE("AdamW decay is decoupled from the gradient") {
  std::vector<Tensorf> params = {Tensorf::from({2}, {2.0f, -4.0f}, true)};
  AdamWConfig cfg;
  cfg.weight_decay = 0.1;
  auto state = make_adamw_state(params, cfg);
  adamw_step(params, state, 0.5);  // no gradient at all
  CHECK(params[0].data()[0] == Approx(2.0 * (1 - 0.05)));
  CHECK(params[0].data()[1] == Approx(-4.0 * (1 - 0.05)));
}

TEST_CASE("AdamW matches a scalar reference over several steps") {
  std::vector<Tensorf> params = {Tensorf::from({1}, {1.0f}, true)};
  AdamWConfig cfg;
  auto state = make_adamw_state(params, cfg);
  double w = 1.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 5; ++t) {
    const double grad = 0.1 * t - 0.2;
    params[0].mutable_grad()[0] = static_cast<float>(grad);
    adamw_step(params, state, 0.01);
    w -= 0.01 * cfg.weight_decay * w;
    m = cfg.beta1 * m + (1 - cfg.beta1) * grad;
    v = cfg.beta2 * v + (1 - cfg.beta2) * grad * grad;
    const double mh = m / (1 - std::pow(cfg.beta1, t));
    const double vh = v / (1 - std::pow(cfg.beta2, t));
    w -= 0.01 * mh / (std::sqrt(vh) + cfg.eps);
    CHECK(params[0].data()[0] == Approx(w).epsilon(1e-5));
  }
}

TEST_CASE("cosine schedule") {
  CHECK(cosine_lr(0, 100, 1.0, 0) == 1.0);
  CHECK(cosine_lr(50, 100, 1.0, 0) == Approx(0.5));
  CHECK(cosine_lr(100, 100, 1.0, 0) == Approx(0.0).margin(1e-15));
  CHECK(cosine_lr(0, 100, 1.0, 10) == Approx(0.1));
  CHECK(cosine_lr(9, 100, 1.0, 10) == Approx(1.0));
  CHECK(cosine_lr(10, 100, 1.0, 10) == Approx(1.0));
  double prev = 2.0;
  for (std::uint64_t s = 10; s <= 100; ++s) {
    const double lr = cosine_lr(s, 100, 1.0, 10);
    CHECK(lr <= prev);
    prev = lr;
  }
}

TEST_CASE("checkpoint round trip and errors") {
  testing::TempDir dir("optim");
  ParamList<float> params = {{"a.weight", Tensorf::from({2, 3}, {1, 2, 3, 4, 5, 6}, true)},
                             {"a.bias", Tensorf::from({3}, {-1, 0, 1}, true)}};
  save_checkpoint(dir / "c.lnck", "{\"k\":1}", params);
  const auto ck = load_checkpoint(dir / "c.lnck");
  CHECK(ck.header_json == "{\"k\":1}");
  REQUIRE(ck.arrays.size() == 2);
  CHECK(ck.find("a.bias")->data == std::vector<float>{-1, 0, 1});
  CHECK(ck.find("nope") == nullptr);

  ParamList<float> fresh = {{"a.weight", Tensorf::zeros({2, 3}, true)},
                            {"a.bias", Tensorf::zeros({3}, true)}};
  restore_params(ck, fresh);
  CHECK(fresh[0].tensor.data()[5] == 6.0f);

  ParamList<float> wrong = {{"a.weight", Tensorf::zeros({3, 2}, true)}};
  try {
    restore_params(ck, wrong);
    FAIL("expected DimMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDimMismatch);
  }
  ParamList<float> missing = {{"b.weight", Tensorf::zeros({1}, true)}};
  CHECK_THROWS_AS(restore_params(ck, missing), Error);

  auto bytes = testing::read_file(dir / "c.lnck");
  CHECK(bytes.substr(0, 4) == "LNCK");
  bytes[0] = 'Z';
  std::ofstream(dir / "bad.lnck", std::ios::binary) << bytes;
  try {
    load_checkpoint(dir / "bad.lnck");
    FAIL("expected BadMagic");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kBadMagic);
  }
  bytes[0] = 'L';
  bytes[4] = 9;
  std::ofstream(dir / "ver.lnck", std::ios::binary) << bytes;
  try {
    load_checkpoint(dir / "ver.lnck");
    FAIL("expected BadVersion");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kBadVersion);
  }
}
