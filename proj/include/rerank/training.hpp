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
#ifndef RERANK_TRAINING_HPP_
#define RERANK_TRAINING_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rerank/core.hpp"
#include "rerank/losses.hpp"
#include "rerank/metrics.hpp"
#include "rerank/model.hpp"
#include "rerank/obedience.hpp"
#include "rerank/parallel.hpp"
#include "rerank/rng.hpp"

namespace rerank {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m, v;
  long long t = 0;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

/// One bias-corrected Adam update, in place.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad,
               const AdamConfig& cfg);

struct TrainConfig {
  int epochs = 1;
  int batch_size = 16;
  double learning_rate = 1e-4;
  std::vector<double> lr_grid = {1e-4, 5e-5, 1e-5};
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  PrincipleWeights principle_weights{};
  int eval_every = 0;  // validate every k epochs (and always on the last); 0: last only
  bool keep_best_checkpoint = false;  // return the best-validation-NDCG epoch's params
  int p2_trials = 1;
  ExecPolicy policy = ExecPolicy::parallel;
};

struct EpochRecord {
  int epoch = 0;
  double mean_total = 0.0;
  double mean_ce_base = 0.0;
  double mean_ce_p_prime = 0.0;
  double mean_cs_p1 = 0.0;
  double mean_ce_p_hat = 0.0;
  double mean_cs_p2 = 0.0;
  std::optional<MetricsReport> valid_metrics;
  std::optional<ObedienceReport> valid_obedience;
  double wall_clock_sec = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  double learning_rate = 0.0;
  std::uint64_t seed = 0;
  int best_epoch = 0;  // epoch whose params were returned (last unless best-tracking)
};

/// Mean gradient and mean loss terms over one batch of lists. Per-sample
/// gradients are computed independently (parallelizable) and reduced in index
/// order, so results are bit-stable for any thread count.
struct BatchGradResult {
  std::vector<double> grad;
  double mean_total = 0.0;
  // ce_base, ce_p_prime, cs_p1, ce_p_hat, cs_p2
  std::array<double, 5> mean_terms{};
};

BatchGradResult batch_gradient(const RerankerParams& params, const Dataset& data,
                               std::span<const std::size_t> indices,
                               std::span<const int> swap_ks, PrincipleWeights weights,
                               ExecPolicy policy);

/// Deterministic per-epoch sample order; shared with reference implementations.
std::vector<std::size_t> epoch_shuffle(std::uint64_t seed, int epoch, std::size_t n_samples);

/// Uniform adjacent-swap rank for a list of the given length.
int draw_swap_index(Rng& rng, std::size_t list_length);

/// Epoch loop: shuffle, draw one adjacent swap per sample, batch lists of
/// equal length, mean-reduce the per-list objective, Adam step. Deterministic
/// given (cfg.seed, model_cfg.seed, data). Aborts with NumericalError and
/// epoch/list diagnostics when a loss or parameter turns non-finite.
std::pair<RerankerParams, TrainLog> train(const TrainConfig& cfg,
                                          const RerankerConfig& model_cfg,
                                          const Dataset& train_data,
                                          const Dataset* valid_data = nullptr);

struct GridRun {
  double lr = 0.0;
  TrainLog log;
  MetricsReport valid;
  bool selected = false;
};

struct GridSearchResult {
  TrainConfig best_config;
  RerankerParams best_params;
  std::vector<GridRun> runs;
};

/// Trains once per grid learning rate; selects by validation NDCG, then AUC,
/// then the lower rate.
GridSearchResult grid_search(const TrainConfig& base, const RerankerConfig& model_cfg,
                             const Dataset& train_data, const Dataset& valid_data);

struct GradCheckReport {
  bool pass = false;
  double max_rel_err = 0.0;
  std::size_t worst_index = 0;
  std::string worst_tensor;
  double analytic_at_worst = 0.0;
  double fd_at_worst = 0.0;
  double h = 0.0;
  double threshold = 0.0;
  std::size_t n_params = 0;
};

/// Central finite differences against the analytic gradient of the full
/// objective, with the recorded rankings held fixed across probes. corrupt
/// adds 1.0 to one analytic coordinate (negative control).
GradCheckReport gradient_check(const RerankerConfig& model_cfg, const ListSample& sample,
                               int swap_k, double h = 1e-5, double threshold = 1e-4,
                               bool corrupt = false, PrincipleWeights weights = {});

/// TrainLog CSV: one row per epoch under a documented header; validation
/// columns are empty for epochs without evaluation.
std::string trainlog_csv(const TrainLog& log, const std::string& manifest_ref = "");

}  // namespace rerank

#endif  // RERANK_TRAINING_HPP_
