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
#ifndef RERANK_LOSSES_HPP_
#define RERANK_LOSSES_HPP_

#include <utility>
#include <vector>

#include "rerank/core.hpp"
#include "rerank/model.hpp"

namespace rerank {

/// Scores are clamped to this floor inside the logarithm so a confidently
/// wrong prediction yields a large finite loss instead of -inf.
inline constexpr double kLogLossFloor = 1e-12;

/// Listwise click log-loss: -sum_i y_i * log(p_i). Nonnegative.
double log_loss(const ScoreVector& scores, const std::vector<int>& labels);

/// Contrastive similarity between two scorings of the same items under two
/// position inputs: sum_i |pa_i - pb_i| * (sa_i - sb_i)^2. Zero whenever the
/// orderings agree or the scores agree; the position weight is a constant.
double cs_loss(const PositionVector& pos_a, const PositionVector& pos_b, const ScoreVector& sa,
               const ScoreVector& sb);

/// Multipliers for the two consistency term pairs of the training objective.
struct PrincipleWeights {
  double p1 = 1.0;  // scales the re-ranked-output pair (idempotency pressure)
  double p2 = 1.0;  // scales the perturbed-input pair (robustness pressure)
};

/// The five objective terms for one list, already multiplied by their
/// principle weights, plus the position vectors used (recorded for audit).
/// total is the exact left-to-right sum of the five stored terms.
struct PrincipledLossBreakdown {
  double ce_base = 0.0;
  double ce_p_prime = 0.0;
  double cs_p1 = 0.0;
  double ce_p_hat = 0.0;
  double cs_p2 = 0.0;
  double total = 0.0;
  PositionVector p, p_prime, p_double_prime, p_hat;
};

/// Runs the four forward passes for one list: score the initial order, rank,
/// score the ranked order, rank again, score the adjacent-swap perturbation,
/// and combine base log-loss with the consistency terms.
PrincipledLossBreakdown principled_loss(const RerankerParams& params, const ListSample& sample,
                                        int swap_k, PrincipleWeights weights = {});

/// Same computation plus the analytic gradient of total w.r.t. every
/// parameter. Rankings are treated as constants; zero-weighted terms
/// contribute exactly nothing to the gradient.
std::pair<PrincipledLossBreakdown, std::vector<double>> principled_loss_with_gradients(
    const RerankerParams& params, const ListSample& sample, int swap_k,
    PrincipleWeights weights = {});

/// Re-evaluates the five-term total with the recorded position vectors held
/// fixed. This is the smooth function finite-difference probes must evaluate:
/// re-deriving rankings under perturbed parameters would introduce jumps.
double principled_total_frozen(const RerankerParams& params, const ListSample& sample,
                               const PrincipledLossBreakdown& fixed,
                               PrincipleWeights weights = {});

}  // namespace rerank

#endif  // RERANK_LOSSES_HPP_
