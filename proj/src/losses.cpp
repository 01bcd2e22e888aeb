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
#include "rerank/losses.hpp"

#include <cmath>
#include <cstdlib>

#include "rerank/autodiff.hpp"
#include "rerank/errors.hpp"

namespace rerank {

double log_loss(const ScoreVector& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw ContractViolation("log_loss: scores and labels lengths differ");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] == 1) {
      acc -= std::log(std::max(scores[i], kLogLossFloor));
    }
  }
  return acc;
}

double cs_loss(const PositionVector& pos_a, const PositionVector& pos_b, const ScoreVector& sa,
               const ScoreVector& sb) {
  const std::size_t n = pos_a.size();
  if (pos_b.size() != n || sa.size() != n || sb.size() != n) {
    throw ContractViolation("cs_loss: argument lengths differ");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = std::abs(static_cast<double>(pos_a[i]) - static_cast<double>(pos_b[i]));
    const double diff = sa[i] - sb[i];
    acc += w * diff * diff;
  }
  return acc;
}

namespace {

struct TapeTerms {
  ScalarNode root;
  PrincipledLossBreakdown breakdown;
};

void require_finite_scores(const ScoreVector& scores) {
  for (double v : scores.values) {
    if (!std::isfinite(v)) throw NumericalError("non-finite re-ranking score");
  }
}

// Records the full objective for one list on the tape and fills the breakdown.
TapeTerms record_objective(Tape& tape, const ListSample& sample, int swap_k,
                           PrincipleWeights weights) {
  if (weights.p1 < 0.0 || weights.p2 < 0.0) {
    throw ConfigError("principle weights must be >= 0");
  }
  TapeTerms out;
  PrincipledLossBreakdown& bd = out.breakdown;
  bd.p = sample.init_pos;

  const ScoresNode s = tape.forward(sample.items, sample.user, sample.init_pos);
  require_finite_scores(tape.scores(s));
  bd.p_prime = scores_to_positions(tape.scores(s), sample.init_pos);
  const ScoresNode s_prime = tape.forward(sample.items, sample.user, bd.p_prime);
  require_finite_scores(tape.scores(s_prime));
  bd.p_double_prime = scores_to_positions(tape.scores(s_prime), bd.p_prime);
  bd.p_hat = adjacent_swap(sample.init_pos, swap_k);
  const ScoresNode s_second = tape.forward(sample.items, sample.user, bd.p_double_prime);
  const ScoresNode s_hat = tape.forward(sample.items, sample.user, bd.p_hat);
  require_finite_scores(tape.scores(s_second));
  require_finite_scores(tape.scores(s_hat));

  const ScalarNode ce_base = tape.log_loss(s, sample.labels);
  const ScalarNode ce_p_prime = tape.scale(tape.log_loss(s_prime, sample.labels), weights.p1);
  const ScalarNode cs_p1 =
      tape.scale(tape.cs_loss(bd.p_double_prime, bd.p_prime, s_second, s_prime), weights.p1);
  const ScalarNode ce_p_hat = tape.scale(tape.log_loss(s_hat, sample.labels), weights.p2);
  const ScalarNode cs_p2 = tape.scale(tape.cs_loss(bd.p_hat, bd.p_prime, s_hat, s_prime),
                                      weights.p2);

  out.root = tape.add(tape.add(tape.add(tape.add(ce_base, ce_p_prime), cs_p1), ce_p_hat), cs_p2);
  bd.ce_base = tape.value(ce_base);
  bd.ce_p_prime = tape.value(ce_p_prime);
  bd.cs_p1 = tape.value(cs_p1);
  bd.ce_p_hat = tape.value(ce_p_hat);
  bd.cs_p2 = tape.value(cs_p2);
  bd.total = tape.value(out.root);
  return out;
}

}  // namespace

PrincipledLossBreakdown principled_loss(const RerankerParams& params, const ListSample& sample,
                                        int swap_k, PrincipleWeights weights) {
  Tape tape(params);
  return record_objective(tape, sample, swap_k, weights).breakdown;
}

std::pair<PrincipledLossBreakdown, std::vector<double>> principled_loss_with_gradients(
    const RerankerParams& params, const ListSample& sample, int swap_k,
    PrincipleWeights weights) {
  Tape tape(params);
  TapeTerms terms = record_objective(tape, sample, swap_k, weights);
  return {std::move(terms.breakdown), tape.gradient(terms.root)};
}

double principled_total_frozen(const RerankerParams& params, const ListSample& sample,
                               const PrincipledLossBreakdown& fixed, PrincipleWeights weights) {
  const ScoreVector s = forward(params, sample.items, sample.user, sample.init_pos);
  const ScoreVector s_prime = forward(params, sample.items, sample.user, fixed.p_prime);
  const ScoreVector s_second = forward(params, sample.items, sample.user, fixed.p_double_prime);
  const ScoreVector s_hat = forward(params, sample.items, sample.user, fixed.p_hat);

  const double ce_base = log_loss(s, sample.labels);
  const double ce_p_prime = weights.p1 * log_loss(s_prime, sample.labels);
  const double cs_p1 =
      weights.p1 * cs_loss(fixed.p_double_prime, fixed.p_prime, s_second, s_prime);
  const double ce_p_hat = weights.p2 * log_loss(s_hat, sample.labels);
  const double cs_p2 = weights.p2 * cs_loss(fixed.p_hat, fixed.p_prime, s_hat, s_prime);
  return ce_base + ce_p_prime + cs_p1 + ce_p_hat + cs_p2;
}

}  // namespace rerank
