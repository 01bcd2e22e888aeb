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
#ifndef RERANK_DATA_HPP_
#define RERANK_DATA_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "rerank/core.hpp"
#include "rerank/parallel.hpp"

namespace rerank {

/// Synthetic click-log generator with a known ground truth. Each list draws a
/// user and item features from unit normals; an item's base relevance is a
/// seeded user-dependent linear score, a cross-item term adds context, and
/// clicks are Bernoulli in sigmoid(click_scale * utility). The initial order
/// sorts by noisy base relevance, so the upstream ranker is informative but
/// imperfect.
struct SynthConfig {
  std::size_t n_lists = 0;
  int n = 10;
  int d_item = 6;
  int d_user = 8;
  double context_weight = 0.5;  // strength of the cross-item utility term
  double ranker_noise = 0.5;    // sigma of the initial-order noise
  double click_scale = 1.0;
  std::uint64_t seed = 0;
};

/// Latent state behind a generated dataset, for oracle checks.
struct GroundTruth {
  std::vector<std::vector<double>> click_probs;   // per list, in stored row order
  std::vector<std::vector<double>> user_weights;  // per list, length d_item
  std::vector<double> user_map;                   // d_item x d_user linear map (flat)
};

/// Deterministic in cfg.seed; list rows are stored in initial-ranker order
/// (init_pos is the identity). Per-list seeding makes generation order-free.
std::pair<Dataset, GroundTruth> generate(const SynthConfig& cfg,
                                         ExecPolicy policy = ExecPolicy::parallel);

/// JSON Lines, one list per line with fields {list_id, user, items, labels,
/// init_pos}. Doubles round-trip exactly. init_pos defaults to the identity
/// when absent on load.
void save(const Dataset& data, const std::string& path);
Dataset load(const std::string& path);

/// Deterministic shuffled partition by list; fractions must be nonnegative and
/// sum to 1 (1e-9). Counts are floor(N * f) with the remainder given to the
/// earliest splits.
std::tuple<Dataset, Dataset, Dataset> split(const Dataset& data,
                                            const std::array<double, 3>& fractions,
                                            std::uint64_t seed);

}  // namespace rerank

#endif  // RERANK_DATA_HPP_
