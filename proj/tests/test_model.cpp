/*
 * Copyright 2026 The Rerank Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "rerank/autodiff.hpp"
#include "rerank/losses.hpp"
#include "rerank/model.hpp"
#include "rerank/rng.hpp"

using namespace rerank;

namespace {

RerankerConfig small_config(std::uint64_t seed = 0) {
  RerankerConfig cfg;
  cfg.d_item = 3;
  cfg.d_user = 2;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.n_blocks = 1;
  cfg.mlp_hidden = {8};
  cfg.n_max = 6;
  cfg.seed = seed;
  return cfg;
}

struct ListInputs {
  Matrix items;
  std::vector<double> user;
  PositionVector pos;
};

ListInputs random_inputs(const RerankerConfig& cfg, std::size_t n, std::uint64_t seed) {
  ListInputs in;
  Rng rng(seed);
  in.items = Matrix(n, static_cast<std::size_t>(cfg.d_item));
  for (double& x : in.items.data()) x = rng.normal();
  in.user.resize(static_cast<std::size_t>(cfg.d_user));
  for (double& u : in.user) u = rng.normal();
  std::vector<int> ranks(n);
  for (std::size_t i = 0; i < n; ++i) ranks[i] = static_cast<int>(i);
  rng.shuffle(ranks);
  in.pos = PositionVector(ranks);
  return in;
}

}  // namespace

TEST_CASE("init_params is deterministic per seed") {
  const RerankerConfig cfg = small_config(7);
  const RerankerParams a = init_params(cfg);
  const RerankerParams b = init_params(cfg);
  CHECK(a.flat == b.flat);
  RerankerConfig other = cfg;
  other.seed = 8;
  const RerankerParams c = init_params(other);
  CHECK(a.flat != c.flat);
}

TEST_CASE("init_params rejects bad dimensions") {
  RerankerConfig cfg = small_config();
  cfg.d_model = 7;  // not divisible by 2 heads
  CHECK_THROWS_AS(init_params(cfg), ConfigError);
  cfg = small_config();
  cfg.n_max = 0;
  CHECK_THROWS_AS(init_params(cfg), ConfigError);
}

TEST_CASE("fresh parameters have a zero position table and finite values") {
  const RerankerParams params = init_params(small_config(3));
  for (double p : params.flat) CHECK(std::isfinite(p));
  for (double p : params.tensor("pos_table")) CHECK(p == 0.0);
  bool any_nonzero = false;
  for (double p : params.tensor("item_proj.w")) any_nonzero |= p != 0.0;
  CHECK(any_nonzero);
}

TEST_CASE("softmax head scores sum to one") {
  const RerankerConfig cfg = small_config(21);
  const RerankerParams params = init_params(cfg);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ListInputs in = random_inputs(cfg, 5, seed);
    const ScoreVector s = forward(params, in.items, in.user, in.pos);
    double sum = 0.0;
    for (double v : s.values) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-6);
  }
}

TEST_CASE("forward is deterministic") {
  const RerankerConfig cfg = small_config(4);
  const RerankerParams params = init_params(cfg);
  const ListInputs in = random_inputs(cfg, 4, 99);
  const ScoreVector a = forward(params, in.items, in.user, in.pos);
  const ScoreVector b = forward(params, in.items, in.user, in.pos);
  CHECK(a.values == b.values);
}

TEST_CASE("forward validates its inputs") {
  const RerankerConfig cfg = small_config(5);
  const RerankerParams params = init_params(cfg);
  const ListInputs in = random_inputs(cfg, 4, 1);
  CHECK_THROWS_AS(forward(params, in.items, {0.0}, in.pos), ContractViolation);
  CHECK_THROWS_AS(forward(params, in.items, in.user, PositionVector::identity(3)),
                  ContractViolation);
  const ListInputs big = random_inputs(cfg, 7, 2);  // n_max is 6
  CHECK_THROWS_AS(forward(params, big.items, big.user, big.pos), ContractViolation);
}

TEST_CASE("a fresh model ignores position (zero table)") {
  const RerankerConfig cfg = small_config(6);
  const RerankerParams params = init_params(cfg);
  const ListInputs in = random_inputs(cfg, 5, 3);
  const ScoreVector base = forward(params, in.items, in.user, in.pos);
  const ScoreVector swapped = forward(params, in.items, in.user, adjacent_swap(in.pos, 1));
  CHECK(base.values == swapped.values);
}

TEST_CASE("position mode off is invariant to the position input") {
  RerankerConfig cfg = small_config(8);
  cfg.position_mode = PositionMode::off;
  const RerankerParams params = init_params(cfg);
  const ListInputs in = random_inputs(cfg, 5, 4);
  const ScoreVector a = forward(params, in.items, in.user, in.pos);
  const ScoreVector b = forward(params, in.items, in.user, adjacent_swap(in.pos, 0));
  const ScoreVector c = forward(params, in.items, in.user, PositionVector::identity(5));
  CHECK(a.values == b.values);
  CHECK(a.values == c.values);
}

TEST_CASE("a nonzero position table makes the model position sensitive") {
  const RerankerConfig cfg = small_config(9);
  RerankerParams params = init_params(cfg);
  Rng rng(17);
  for (double& p : params.tensor("pos_table")) p = rng.normal();
  bool any_differs = false;
  for (std::uint64_t seed = 0; seed < 10 && !any_differs; ++seed) {
    const ListInputs in = random_inputs(cfg, 5, 100 + seed);
    const ScoreVector a = forward(params, in.items, in.user, in.pos);
    const ScoreVector b = forward(params, in.items, in.user, adjacent_swap(in.pos, 2));
    any_differs = a.values != b.values;
  }
  CHECK(any_differs);
}

TEST_CASE("position mode off: permuting item rows permutes scores") {
  RerankerConfig cfg = small_config(10);
  cfg.position_mode = PositionMode::off;
  const RerankerParams params = init_params(cfg);
  const std::size_t n = 5;
  const ListInputs in = random_inputs(cfg, n, 5);
  const ScoreVector base = forward(params, in.items, in.user, PositionVector::identity(n));

  // New row j holds old row sigma(j).
  const std::vector<int> sigma{3, 0, 4, 1, 2};
  Matrix permuted(n, in.items.cols());
  for (std::size_t j = 0; j < n; ++j) {
    const auto src = in.items.row(static_cast<std::size_t>(sigma[j]));
    std::copy(src.begin(), src.end(), permuted.row(j).begin());
  }
  const ScoreVector moved = forward(params, permuted, in.user, PositionVector::identity(n));
  for (std::size_t j = 0; j < n; ++j) {
    CHECK(moved[j] == doctest::Approx(base[static_cast<std::size_t>(sigma[j])]).epsilon(1e-12));
  }
}

TEST_CASE("all-zero head emits uniform scores") {
  const RerankerConfig cfg = small_config(11);
  RerankerParams params = init_params(cfg);
  for (double& p : params.tensor("head.l0.w")) p = 0.0;
  for (double& p : params.tensor("head.l0.b")) p = 0.0;
  for (double& p : params.tensor("head.out.w")) p = 0.0;
  for (double& p : params.tensor("head.out.b")) p = 0.0;
  const ListInputs in = random_inputs(cfg, 4, 6);
  const ScoreVector s = forward(params, in.items, in.user, in.pos);
  for (double v : s.values) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("sigmoid head emits per-item probabilities") {
  RerankerConfig cfg = small_config(12);
  cfg.head_mode = HeadMode::sigmoid_item;
  const RerankerParams params = init_params(cfg);
  const ListInputs in = random_inputs(cfg, 4, 7);
  const ScoreVector s = forward(params, in.items, in.user, in.pos);
  for (double v : s.values) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("objective of constant zero has zero gradients") {
  const RerankerParams params = init_params(small_config(13));
  const auto [value, grad] =
      loss_and_gradients(params, [](Tape& tape) { return tape.constant(0.0); });
  CHECK(value == 0.0);
  for (double g : grad) CHECK(g == 0.0);
}

TEST_CASE("objective of parameter sum has unit gradients") {
  const RerankerParams params = init_params(small_config(14));
  const auto [value, grad] =
      loss_and_gradients(params, [](Tape& tape) { return tape.param_sum(); });
  double expected = 0.0;
  for (double p : params.flat) expected += p;
  CHECK(value == expected);
  for (double g : grad) CHECK(g == 1.0);
}

TEST_CASE("analytic gradients match finite differences through one forward") {
  for (std::uint64_t seed : {0ULL, 1ULL, 2ULL}) {
    RerankerConfig cfg = small_config(seed);
    if (seed == 1) cfg.d_user = 0;           // exercise the no-user path
    if (seed == 2) cfg.head_mode = HeadMode::sigmoid_item;
    RerankerParams params = init_params(cfg);
    Rng table_rng(seed + 40);
    for (double& p : params.tensor("pos_table")) p = 0.1 * table_rng.normal();

    const std::size_t n = 4;
    ListInputs in = random_inputs(cfg, n, 50 + seed);
    if (cfg.d_user == 0) in.user.clear();
    const std::vector<int> labels{1, 0, 1, 0};

    const auto objective = [&](Tape& tape) {
      return tape.log_loss(tape.forward(in.items, in.user, in.pos), labels);
    };
    const auto [value, grad] = loss_and_gradients(params, objective);
    CHECK(std::isfinite(value));

    const double h = 1e-5;
    double max_rel = 0.0;
    for (std::size_t i = 0; i < grad.size(); ++i) {
      const double saved = params.flat[i];
      params.flat[i] = saved + h;
      const double up = log_loss(forward(params, in.items, in.user, in.pos), labels);
      params.flat[i] = saved - h;
      const double down = log_loss(forward(params, in.items, in.user, in.pos), labels);
      params.flat[i] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double rel = std::abs(grad[i] - fd) / std::max({std::abs(grad[i]), std::abs(fd), 1e-6});
      max_rel = std::max(max_rel, rel);
    }
    INFO("seed ", seed, " max relative error ", max_rel);
    CHECK(max_rel <= 1e-4);
  }
}

TEST_CASE("checkpoint round-trips exactly") {
  const RerankerConfig cfg = small_config(15);
  const RerankerParams params = init_params(cfg);
  const std::string path =
      (std::filesystem::temp_directory_path() / "rerank_ckpt_test.json").string();
  save_checkpoint(params, path);
  const RerankerParams loaded = load_checkpoint(path);
  CHECK(loaded.cfg.d_model == cfg.d_model);
  CHECK(loaded.cfg.mlp_hidden == cfg.mlp_hidden);
  CHECK(to_string(loaded.cfg.head_mode) == to_string(cfg.head_mode));
  CHECK(loaded.flat == params.flat);
  std::filesystem::remove(path);
}

TEST_CASE("load_checkpoint rejects missing files and foreign documents") {
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/ckpt.json"), ParseError);
  const std::string path =
      (std::filesystem::temp_directory_path() / "rerank_not_ckpt.json").string();
  {
    std::FILE* f = std::fopen(path.c_str(), "w");
    std::fputs("{\"hello\": 1}\n", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(load_checkpoint(path), ParseError);
  std::filesystem::remove(path);
}

TEST_CASE("parameter layout covers the flat vector without gaps") {
  const RerankerConfig cfg = small_config(16);
  const ParamLayout layout(cfg);
  std::vector<char> covered(layout.total_size(), 0);
  for (const TensorInfo& t : layout.tensors()) {
    for (std::size_t i = t.offset; i < t.offset + t.count(); ++i) {
      CHECK(covered[i] == 0);
      covered[i] = 1;
    }
  }
  for (char c : covered) CHECK(c == 1);
  CHECK(layout.find("item_proj.w") != nullptr);
  CHECK(layout.find("missing") == nullptr);
}
