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
#ifndef RERANK_TESTS_ORACLES_HPP_
#define RERANK_TESTS_ORACLES_HPP_

// Brute-force references written per the textbook definitions on the
// displayed item order. They deliberately share no code with the library
// implementations they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <vector>

#include "rerank/core.hpp"

namespace rerank::oracles {

/// Mann-Whitney route: AUC from the rank-sum of positives, average ranks for
/// tied scores.
inline std::optional<double> auc(const std::vector<double>& scores,
                                 const std::vector<int>& labels) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(n, 0.0);  // 1-based, ties averaged
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>((i + 1) + (j + 1));
    for (std::size_t t = i; t <= j; ++t) rank[idx[t]] = avg;
    i = j + 1;
  }
  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t t = 0; t < n; ++t) {
    if (labels[t] == 1) {
      rank_sum += rank[t];
      ++n_pos;
    }
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  const double u = rank_sum - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

inline std::vector<int> displayed_labels(const PositionVector& ranking,
                                         const std::vector<int>& labels) {
  std::vector<int> disp(labels.size(), 0);
  for (std::size_t item = 0; item < labels.size(); ++item) {
    disp[static_cast<std::size_t>(ranking[item])] = labels[item];
  }
  return disp;
}

inline std::optional<double> ndcg(const PositionVector& ranking,
                                  const std::vector<int>& labels) {
  const std::vector<int> disp = displayed_labels(ranking, labels);
  std::vector<int> ideal = disp;
  std::sort(ideal.begin(), ideal.end(), std::greater<int>());
  double dcg = 0.0, idcg = 0.0;
  for (std::size_t r = 1; r <= disp.size(); ++r) {
    dcg += disp[r - 1] / std::log2(static_cast<double>(r) + 1.0);
    idcg += ideal[r - 1] / std::log2(static_cast<double>(r) + 1.0);
  }
  if (idcg == 0.0) return std::nullopt;
  return dcg / idcg;
}

inline std::optional<double> ap_at_k(const PositionVector& ranking,
                                     const std::vector<int>& labels, int k) {
  const std::vector<int> disp = displayed_labels(ranking, labels);
  const int total_pos = std::accumulate(labels.begin(), labels.end(), 0);
  if (total_pos == 0) return std::nullopt;
  const int k_eff = std::min<int>(k, static_cast<int>(disp.size()));
  double acc = 0.0;
  int hits = 0;
  for (int r = 1; r <= k_eff; ++r) {
    if (disp[static_cast<std::size_t>(r - 1)] == 1) {
      ++hits;
      acc += static_cast<double>(hits) / static_cast<double>(r);
    }
  }
  return acc / std::min(k_eff, total_pos);
}

inline double prec_at_k(const PositionVector& ranking, const std::vector<int>& labels, int k) {
  const std::vector<int> disp = displayed_labels(ranking, labels);
  const int k_eff = std::min<int>(k, static_cast<int>(disp.size()));
  int hits = 0;
  for (int r = 0; r < k_eff; ++r) hits += disp[static_cast<std::size_t>(r)];
  return static_cast<double>(hits) / static_cast<double>(k_eff);
}

}  // namespace rerank::oracles

#endif  // RERANK_TESTS_ORACLES_HPP_
