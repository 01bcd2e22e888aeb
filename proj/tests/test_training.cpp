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

#include <algorithm>
#include <cmath>
#include <set>

#include "rerank/autodiff.hpp"
#include "rerank/data.hpp"
#include "rerank/training.hpp"

using namespace rerank;

namespace {

RerankerConfig tiny_model(int d_item, int d_user, int n_max, std::uint64_t seed = 0) {
  RerankerConfig cfg;
  cfg.d_item = d_item;
  cfg.d_user = d_user;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.n_blocks = 1;
  cfg.mlp_hidden = {8};
  cfg.n_max = n_max;
  cfg.seed = seed;
  return cfg;
}

Dataset tiny_data(std::size_t n_lists, int n, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n_lists = n_lists;
  cfg.n = n;
  cfg.d_item = 3;
  cfg.d_user = 2;
  cfg.seed = seed;
  return generate(cfg).first;
}

ListSample gradcheck_sample(int n, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n_lists = 1;
  cfg.n = n;
  cfg.d_item = 3;
  cfg.d_user = 2;
  cfg.seed = seed;
  Dataset data = generate(cfg).first;
  return data.samples[0];
}

}  // namespace

TEST_CASE("adam matches a textbook reference on a one-parameter problem") {
  // Reference: hand-rolled loop minimizing f(x) = x^2, gradient 2x.
  const AdamConfig cfg{0.1, 0.9, 0.999, 1e-8};
  double x_ref = 1.0, m = 0.0, v = 0.0;
  AdamState state(1);
  std::vector<double> x{1.0};
  for (int t = 1; t <= 50; ++t) {
    const double g_ref = 2.0 * x_ref;
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g_ref;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g_ref * g_ref;
    const double m_hat = m / (1.0 - std::pow(cfg.beta1, static_cast<double>(t)));
    const double v_hat = v / (1.0 - std::pow(cfg.beta2, static_cast<double>(t)));
    x_ref -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);

    const std::vector<double> g{2.0 * x[0]};
    adam_step(state, x, g, cfg);
    CHECK(std::abs(x[0] - x_ref) <= 1e-12);
  }
  CHECK(std::abs(x[0]) < 1.0);  // made progress toward the minimum
}

TEST_CASE("epoch_shuffle is a deterministic permutation that varies per epoch") {
  const auto a = epoch_shuffle(4, 1, 100);
  const auto b = epoch_shuffle(4, 1, 100);
  CHECK(a == b);
  const auto c = epoch_shuffle(4, 2, 100);
  CHECK(a != c);
  std::set<std::size_t> seen(a.begin(), a.end());
  CHECK(seen.size() == 100);
  CHECK(*seen.begin() == 0);
  CHECK(*seen.rbegin() == 99);
}

TEST_CASE("swap draws are uniform over the adjacent ranks") {
  Rng rng(mix_seed(123, kStreamSwap, 1));
  const int n = 10;  // ranks 0..8
  const int draws = 9000;
  std::vector<int> counts(static_cast<std::size_t>(n - 1), 0);
  for (int i = 0; i < draws; ++i) {
    const int k = draw_swap_index(rng, n);
    REQUIRE(k >= 0);
    REQUIRE(k <= n - 2);
    ++counts[static_cast<std::size_t>(k)];
  }
  const double expected = static_cast<double>(draws) / static_cast<double>(n - 1);
  double chi2 = 0.0;
  for (int c : counts) {
    const double d = c - expected;
    chi2 += d * d / expected;
  }
  // 8 degrees of freedom; 26.12 is the 0.001 tail.
  CHECK(chi2 < 26.12);
}

TEST_CASE("gradient_check passes on a fresh model and fails when corrupted") {
  const RerankerConfig cfg = tiny_model(3, 2, 4, 0);
  const ListSample sample = gradcheck_sample(4, 60);
  const GradCheckReport report = gradient_check(cfg, sample, 1);
  INFO("max rel err ", report.max_rel_err, " at ", report.worst_tensor);
  CHECK(report.pass);
  CHECK(report.max_rel_err <= 1e-4);
  CHECK(report.n_params > 100);

  const GradCheckReport corrupted = gradient_check(cfg, sample, 1, 1e-5, 1e-4, true);
  CHECK(!corrupted.pass);

  // A probe step coarse enough for truncation error to dominate reports a
  // larger error; the pass threshold is configurable alongside it.
  const GradCheckReport coarse = gradient_check(cfg, sample, 1, 0.25, 1e-4);
  CHECK(coarse.max_rel_err > report.max_rel_err);
  const GradCheckReport loose = gradient_check(cfg, sample, 1, 0.25, 1e+2);
  CHECK(loose.pass);
}

TEST_CASE("train validates its configuration") {
  const Dataset data = tiny_data(8, 4, 70);
  const RerankerConfig model_cfg = tiny_model(3, 2, 4);
  TrainConfig cfg;
  cfg.epochs = 0;
  CHECK_THROWS_AS(train(cfg, model_cfg, data), ConfigError);
  cfg.epochs = 1;
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(train(cfg, model_cfg, data), ConfigError);
  cfg.learning_rate = 1e-4;
  CHECK_THROWS_AS(train(cfg, model_cfg, Dataset{}), ContractViolation);
  RerankerConfig wrong = model_cfg;
  wrong.d_item = 5;
  CHECK_THROWS_AS(train(cfg, wrong, data), ConfigError);
}

TEST_CASE("training is deterministic and thread-count independent") {
  const Dataset data = tiny_data(32, 5, 71);
  const RerankerConfig model_cfg = tiny_model(3, 2, 5, 3);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 8;
  cfg.learning_rate = 1e-3;
  cfg.seed = 9;

  cfg.policy = ExecPolicy::parallel;
  const auto [params_a, log_a] = train(cfg, model_cfg, data);
  const auto [params_b, log_b] = train(cfg, model_cfg, data);
  CHECK(params_a.flat == params_b.flat);
  REQUIRE(log_a.epochs.size() == log_b.epochs.size());
  for (std::size_t e = 0; e < log_a.epochs.size(); ++e) {
    CHECK(log_a.epochs[e].mean_total == log_b.epochs[e].mean_total);
    CHECK(log_a.epochs[e].mean_cs_p1 == log_b.epochs[e].mean_cs_p1);
  }

  cfg.policy = ExecPolicy::serial;
  const auto [params_c, log_c] = train(cfg, model_cfg, data);
  CHECK(params_a.flat == params_c.flat);
  for (std::size_t e = 0; e < log_a.epochs.size(); ++e) {
    CHECK(log_a.epochs[e].mean_total == log_c.epochs[e].mean_total);
  }
}

TEST_CASE("batch_gradient agrees between serial and parallel execution") {
  const Dataset data = tiny_data(16, 5, 72);
  const RerankerConfig model_cfg = tiny_model(3, 2, 5, 4);
  const RerankerParams params = init_params(model_cfg);
  std::vector<std::size_t> indices(16);
  std::vector<int> swap_ks(16);
  Rng rng(5);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    indices[i] = i;
    swap_ks[i] = draw_swap_index(rng, 5);
  }
  const BatchGradResult serial =
      batch_gradient(params, data, indices, swap_ks, {}, ExecPolicy::serial);
  const BatchGradResult parallel =
      batch_gradient(params, data, indices, swap_ks, {}, ExecPolicy::parallel);
  CHECK(serial.grad == parallel.grad);
  CHECK(serial.mean_total == parallel.mean_total);
  CHECK(serial.mean_terms == parallel.mean_terms);
}

TEST_CASE("zero principle weights reproduce plain log-loss training bit for bit") {
  const Dataset data = tiny_data(64, 5, 73);
  const RerankerConfig model_cfg = tiny_model(3, 2, 5, 7);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 16;
  cfg.learning_rate = 1e-3;
  cfg.seed = 11;
  cfg.principle_weights = {0.0, 0.0};
  const auto [params_weighted, log_weighted] = train(cfg, model_cfg, data);

  // Independent plain loop: same data order, log-loss objective only,
  // textbook Adam.
  RerankerParams params = init_params(model_cfg);
  std::vector<double> m(params.flat.size(), 0.0), v(params.flat.size(), 0.0);
  long long t = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto order = epoch_shuffle(cfg.seed, epoch, data.size());
    for (std::size_t at = 0; at < order.size(); at += 16) {
      std::vector<double> grad(params.flat.size(), 0.0);
      for (std::size_t i = at; i < at + 16; ++i) {
        Tape tape(params);
        const ListSample& sample = data.samples[order[i]];
        const ScoresNode s = tape.forward(sample.items, sample.user, sample.init_pos);
        const ScalarNode root = tape.log_loss(s, sample.labels);
        const std::vector<double> g = tape.gradient(root);
        for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += g[j];
      }
      const double inv_b = 1.0 / 16.0;
      for (double& g : grad) g *= inv_b;
      t += 1;
      const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(t));
      const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(t));
      for (std::size_t j = 0; j < params.flat.size(); ++j) {
        const double g = grad[j];
        m[j] = cfg.adam_beta1 * m[j] + (1.0 - cfg.adam_beta1) * g;
        v[j] = cfg.adam_beta2 * v[j] + (1.0 - cfg.adam_beta2) * g * g;
        const double m_hat = m[j] / bc1;
        const double v_hat = v[j] / bc2;
        params.flat[j] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
      }
    }
  }
  CHECK(params_weighted.flat == params.flat);

  // The zero-weighted columns log as zero.
  for (const EpochRecord& r : log_weighted.epochs) {
    CHECK(r.mean_ce_p_prime == 0.0);
    CHECK(r.mean_cs_p1 == 0.0);
    CHECK(r.mean_ce_p_hat == 0.0);
    CHECK(r.mean_cs_p2 == 0.0);
    CHECK(r.mean_total == r.mean_ce_base);
  }
}

TEST_CASE("training aborts with diagnostics when the loss turns non-finite") {
  Dataset data = tiny_data(8, 4, 74);
  for (double& x : data.samples[3].items.data()) x = 1e308;
  const RerankerConfig model_cfg = tiny_model(3, 2, 4, 5);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 8;
  try {
    train(cfg, model_cfg, data);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    const std::string what = e.what();
    CHECK(what.find("epoch 1") != std::string::npos);
  }
}

TEST_CASE("validation metrics appear on schedule and on the final epoch") {
  const Dataset data = tiny_data(24, 5, 75);
  const Dataset valid = tiny_data(12, 5, 76);
  const RerankerConfig model_cfg = tiny_model(3, 2, 5, 6);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 8;
  cfg.eval_every = 2;
  const auto [params, log] = train(cfg, model_cfg, data, &valid);
  REQUIRE(log.epochs.size() == 3);
  CHECK(!log.epochs[0].valid_metrics.has_value());
  CHECK(log.epochs[1].valid_metrics.has_value());  // epoch 2: scheduled
  CHECK(log.epochs[2].valid_metrics.has_value());  // epoch 3: final
  CHECK(log.epochs[2].valid_obedience.has_value());
  CHECK(log.best_epoch == 3);
}

TEST_CASE("grid search selects by validation ranking quality") {
  const Dataset data = tiny_data(24, 5, 77);
  const Dataset valid = tiny_data(12, 5, 78);
  const RerankerConfig model_cfg = tiny_model(3, 2, 5, 8);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 8;

  cfg.lr_grid = {1e-3};
  const GridSearchResult single = grid_search(cfg, model_cfg, data, valid);
  REQUIRE(single.runs.size() == 1);
  CHECK(single.runs[0].selected);
  CHECK(single.best_config.learning_rate == 1e-3);

  cfg.lr_grid = {1e-3, 5e-4, 1e-4};
  const GridSearchResult triple = grid_search(cfg, model_cfg, data, valid);
  REQUIRE(triple.runs.size() == 3);
  int selected = 0;
  for (const GridRun& run : triple.runs) selected += run.selected ? 1 : 0;
  CHECK(selected == 1);

  cfg.lr_grid = {};
  CHECK_THROWS_AS(grid_search(cfg, model_cfg, data, valid), ConfigError);
  cfg.lr_grid = {1e-3};
  CHECK_THROWS_AS(grid_search(cfg, model_cfg, data, Dataset{}), ContractViolation);
}

TEST_CASE("grid search breaks exact metric ties toward the lower rate") {
  const Dataset data = tiny_data(16, 4, 79);
  const Dataset valid = tiny_data(8, 4, 80);
  const RerankerConfig model_cfg = tiny_model(3, 2, 4, 9);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 8;
  // Rates this small cannot move any ranking, so all metrics tie exactly.
  cfg.lr_grid = {3e-13, 1e-13, 2e-13};
  const GridSearchResult result = grid_search(cfg, model_cfg, data, valid);
  for (const GridRun& run : result.runs) {
    if (run.selected) CHECK(run.lr == 1e-13);
  }
  CHECK(result.best_config.learning_rate == 1e-13);
}

TEST_CASE("trainlog CSV has one row per epoch under the documented header") {
  const Dataset data = tiny_data(16, 4, 81);
  const Dataset valid = tiny_data(8, 4, 82);
  const RerankerConfig model_cfg = tiny_model(3, 2, 4, 10);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 8;
  const auto [params, log] = train(cfg, model_cfg, data, &valid);
  const std::string csv = trainlog_csv(log, "run.manifest.json");
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < csv.size()) {
    const std::size_t end = csv.find('\n', start);
    lines.push_back(csv.substr(start, end - start));
    start = end + 1;
  }
  REQUIRE(lines.size() == 4);  // comment, header, two epochs
  CHECK(lines[0] == "# manifest: run.manifest.json");
  CHECK(lines[1].rfind("epoch,mean_total", 0) == 0);
  const auto commas = [](const std::string& s) {
    return std::count(s.begin(), s.end(), ',');
  };
  CHECK(commas(lines[1]) == commas(lines[2]));
  CHECK(commas(lines[1]) == commas(lines[3]));
}
