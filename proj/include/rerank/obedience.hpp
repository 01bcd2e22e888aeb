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
#ifndef RERANK_OBEDIENCE_HPP_
#define RERANK_OBEDIENCE_HPP_

#include <cstdint>
#include <string>

#include "rerank/core.hpp"
#include "rerank/model.hpp"
#include "rerank/parallel.hpp"

namespace rerank {

/// Fractions of test lists on which the model's output order is stable:
/// under re-application of the model (convergence) and under an adjacent swap
/// of the input order (perturbation robustness). Permutation equality is
/// exact and elementwise.
struct ObedienceReport {
  double p1_rate = 0.0;
  double p2_rate = 0.0;
  std::size_t n_lists = 0;
  int p2_trials_per_list = 1;
  std::uint64_t eval_seed = 0;
  bool strict_p2 = false;
};

/// Fraction of lists where re-ranking the model's own output reproduces it:
/// rank(forward(P')) == P' with P' = rank(forward(P)).
double p1_obedience(const RerankerParams& params, const Dataset& data,
                    ExecPolicy policy = ExecPolicy::parallel);

/// Fraction of lists whose output is unchanged under `trials` random adjacent
/// swaps of the input order (seeded per list by eval_seed). strict mode checks
/// every adjacent swap instead of sampling. Lists with fewer than two items
/// count as obeyed.
double p2_obedience(const RerankerParams& params, const Dataset& data, int trials,
                    std::uint64_t eval_seed, bool strict = false,
                    ExecPolicy policy = ExecPolicy::parallel);

ObedienceReport obedience_report(const RerankerParams& params, const Dataset& data, int trials,
                                 std::uint64_t eval_seed, bool strict = false,
                                 ExecPolicy policy = ExecPolicy::parallel);

std::string obedience_to_json(const ObedienceReport& report, int indent = 2);
std::string obedience_csv_header();
std::string obedience_csv_row(const ObedienceReport& report);

}  // namespace rerank

#endif  // RERANK_OBEDIENCE_HPP_
