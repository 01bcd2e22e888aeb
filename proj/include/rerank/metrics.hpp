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
#ifndef RERANK_METRICS_HPP_
#define RERANK_METRICS_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rerank/core.hpp"
#include "rerank/model.hpp"
#include "rerank/parallel.hpp"

namespace rerank {

/// Aggregated ranking metrics over a dataset. Lists that cannot support a
/// metric (no positives, or no negatives for AUC) are skipped per metric;
/// the evaluated-list counts keep the bookkeeping honest. An absent optional
/// means no list was evaluable.
struct MetricsReport {
  std::optional<double> auc;
  std::optional<double> ndcg;
  std::map<int, double> map_at;        // K -> mean AP@K
  std::map<int, double> precision_at;  // K -> mean Precision@K
  struct Counts {
    std::size_t auc = 0;
    std::size_t ndcg = 0;
    std::size_t map = 0;
    std::size_t precision = 0;
  } n_lists_evaluated;
  std::string auc_mode = "per_list";
};

/// Pairwise AUC over all (positive, negative) item pairs; ties get half
/// credit. Skips (nullopt) when the list has no positives or no negatives.
std::optional<double> list_auc(const ScoreVector& scores, const std::vector<int>& labels);

/// Binary-gain NDCG at full depth: DCG = sum_i y_i / log2(rank_i + 2) over
/// 0-based ranks, normalized by the all-positives-first ideal. Skips when the
/// list has no positives.
std::optional<double> list_ndcg(const PositionVector& ranking, const std::vector<int>& labels);

/// AP truncated at K' = min(K, n), normalized by min(K', total positives).
/// Skips when the list has no positives.
std::optional<double> list_map_at_k(const PositionVector& ranking, const std::vector<int>& labels,
                                    int k);

/// Fraction of positives among the top min(K, n) ranks.
double list_precision_at_k(const PositionVector& ranking, const std::vector<int>& labels, int k);

struct EvaluateOptions {
  std::vector<int> ks = {5, 10, 15, 20};
  bool pooled_auc = false;  // pool all items across lists into one AUC
  ExecPolicy policy = ExecPolicy::parallel;
};

/// Scores every list with the model, ranks by score against the initial order,
/// and mean-aggregates the per-list metrics. Degenerate lists (all-0 or all-1
/// labels) are excluded from AUC/NDCG/MAP but kept for Precision.
MetricsReport evaluate(const RerankerParams& params, const Dataset& data,
                       const EvaluateOptions& options = {});

/// JSON document with the report fields; absent metrics are omitted.
std::string metrics_to_json(const MetricsReport& report, int indent = 2);

/// One CSV row in table order: AUC, NDCG, MAP@5..20, Precision@5..20.
std::string metrics_csv_header(const MetricsReport& report);
std::string metrics_csv_row(const MetricsReport& report);

}  // namespace rerank

#endif  // RERANK_METRICS_HPP_
