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
#include "rerank/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "rerank/errors.hpp"

#include "json.hpp"

namespace rerank {

namespace {

int count_positives(const std::vector<int>& labels) {
  int n_pos = 0;
  for (int y : labels) n_pos += y;
  return n_pos;
}

double pairwise_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  double credit = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) {
        credit += 1.0;
      } else if (scores[i] == scores[j]) {
        credit += 0.5;
      }
    }
  }
  return credit / static_cast<double>(pairs);
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::optional<double> list_auc(const ScoreVector& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw ContractViolation("list_auc: scores and labels lengths differ");
  }
  const int n_pos = count_positives(labels);
  const int n_neg = static_cast<int>(labels.size()) - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  return pairwise_auc(scores.values, labels);
}

std::optional<double> list_ndcg(const PositionVector& ranking, const std::vector<int>& labels) {
  const std::size_t n = ranking.size();
  if (labels.size() != n) throw ContractViolation("list_ndcg: ranking and labels lengths differ");
  if (!ranking.is_valid()) throw ContractViolation("list_ndcg: invalid ranking");
  const int n_pos = count_positives(labels);
  if (n_pos == 0) return std::nullopt;
  double dcg = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] == 1) {
      dcg += 1.0 / std::log2(static_cast<double>(ranking[i]) + 2.0);
    }
  }
  double idcg = 0.0;
  for (int r = 0; r < n_pos; ++r) {
    idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  }
  return dcg / idcg;
}

std::optional<double> list_map_at_k(const PositionVector& ranking, const std::vector<int>& labels,
                                    int k) {
  const std::size_t n = ranking.size();
  if (labels.size() != n) {
    throw ContractViolation("list_map_at_k: ranking and labels lengths differ");
  }
  if (!ranking.is_valid()) throw ContractViolation("list_map_at_k: invalid ranking");
  if (k < 1) throw ContractViolation("list_map_at_k: K must be >= 1");
  const int n_pos = count_positives(labels);
  if (n_pos == 0) return std::nullopt;
  const std::vector<int> by_rank = ranking.items_by_rank();
  const std::size_t k_eff = std::min<std::size_t>(static_cast<std::size_t>(k), n);
  double acc = 0.0;
  int hits = 0;
  for (std::size_t r = 0; r < k_eff; ++r) {
    if (labels[static_cast<std::size_t>(by_rank[r])] == 1) {
      ++hits;
      acc += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  const double denom = static_cast<double>(std::min<std::size_t>(k_eff,
                                                                 static_cast<std::size_t>(n_pos)));
  return acc / denom;
}

double list_precision_at_k(const PositionVector& ranking, const std::vector<int>& labels, int k) {
  const std::size_t n = ranking.size();
  if (labels.size() != n) {
    throw ContractViolation("list_precision_at_k: ranking and labels lengths differ");
  }
  if (!ranking.is_valid()) throw ContractViolation("list_precision_at_k: invalid ranking");
  if (k < 1) throw ContractViolation("list_precision_at_k: K must be >= 1");
  const std::size_t k_eff = std::min<std::size_t>(static_cast<std::size_t>(k), n);
  const std::vector<int> by_rank = ranking.items_by_rank();
  int hits = 0;
  for (std::size_t r = 0; r < k_eff; ++r) {
    hits += labels[static_cast<std::size_t>(by_rank[r])];
  }
  return static_cast<double>(hits) / static_cast<double>(k_eff);
}

MetricsReport evaluate(const RerankerParams& params, const Dataset& data,
                       const EvaluateOptions& options) {
  if (data.empty()) throw ContractViolation("evaluate: empty dataset");

  struct ListResult {
    ScoreVector scores;
    std::optional<double> auc, ndcg;
    std::vector<std::optional<double>> map;  // per K
    std::vector<double> precision;           // per K
    bool degenerate = false;                 // all-0 or all-1 labels
  };
  std::vector<ListResult> results(data.size());

  for_each_index(options.policy, data.size(), [&](std::size_t idx) {
    const ListSample& sample = data.samples[idx];
    ListResult& res = results[idx];
    res.scores = forward(params, sample.items, sample.user, sample.init_pos);
    const PositionVector ranking = scores_to_positions(res.scores, sample.init_pos);
    const int n_pos = count_positives(sample.labels);
    res.degenerate = (n_pos == 0 || static_cast<std::size_t>(n_pos) == sample.labels.size());
    res.auc = list_auc(res.scores, sample.labels);
    res.ndcg = list_ndcg(ranking, sample.labels);
    res.map.reserve(options.ks.size());
    res.precision.reserve(options.ks.size());
    for (int k : options.ks) {
      res.map.push_back(list_map_at_k(ranking, sample.labels, k));
      res.precision.push_back(list_precision_at_k(ranking, sample.labels, k));
    }
  });

  MetricsReport report;
  double auc_sum = 0.0, ndcg_sum = 0.0;
  std::vector<double> map_sum(options.ks.size(), 0.0);
  std::vector<double> prec_sum(options.ks.size(), 0.0);
  for (const ListResult& res : results) {
    if (!res.degenerate) {
      if (res.auc) {
        auc_sum += *res.auc;
        ++report.n_lists_evaluated.auc;
      }
      if (res.ndcg) {
        ndcg_sum += *res.ndcg;
        ++report.n_lists_evaluated.ndcg;
      }
      if (!res.map.empty() && res.map[0]) {
        for (std::size_t ki = 0; ki < options.ks.size(); ++ki) map_sum[ki] += *res.map[ki];
        ++report.n_lists_evaluated.map;
      }
    }
    for (std::size_t ki = 0; ki < options.ks.size(); ++ki) prec_sum[ki] += res.precision[ki];
    ++report.n_lists_evaluated.precision;
  }

  if (options.pooled_auc) {
    report.auc_mode = "pooled";
    std::vector<double> all_scores;
    std::vector<int> all_labels;
    for (std::size_t idx = 0; idx < data.size(); ++idx) {
      all_scores.insert(all_scores.end(), results[idx].scores.values.begin(),
                        results[idx].scores.values.end());
      all_labels.insert(all_labels.end(), data.samples[idx].labels.begin(),
                        data.samples[idx].labels.end());
    }
    const int n_pos = count_positives(all_labels);
    report.n_lists_evaluated.auc = data.size();
    if (n_pos > 0 && static_cast<std::size_t>(n_pos) < all_labels.size()) {
      report.auc = pairwise_auc(all_scores, all_labels);
    } else {
      report.n_lists_evaluated.auc = 0;
    }
  } else if (report.n_lists_evaluated.auc > 0) {
    report.auc = auc_sum / static_cast<double>(report.n_lists_evaluated.auc);
  }
  if (report.n_lists_evaluated.ndcg > 0) {
    report.ndcg = ndcg_sum / static_cast<double>(report.n_lists_evaluated.ndcg);
  }
  for (std::size_t ki = 0; ki < options.ks.size(); ++ki) {
    if (report.n_lists_evaluated.map > 0) {
      report.map_at[options.ks[ki]] = map_sum[ki] / static_cast<double>(report.n_lists_evaluated.map);
    }
    report.precision_at[options.ks[ki]] =
        prec_sum[ki] / static_cast<double>(report.n_lists_evaluated.precision);
  }
  return report;
}

std::string metrics_to_json(const MetricsReport& report, int indent) {
  nlohmann::json doc;
  if (report.auc) doc["auc"] = *report.auc;
  if (report.ndcg) doc["ndcg"] = *report.ndcg;
  doc["auc_mode"] = report.auc_mode;
  nlohmann::json map_obj = nlohmann::json::object();
  for (const auto& [k, v] : report.map_at) map_obj[std::to_string(k)] = v;
  doc["map_at"] = map_obj;
  nlohmann::json prec_obj = nlohmann::json::object();
  for (const auto& [k, v] : report.precision_at) prec_obj[std::to_string(k)] = v;
  doc["precision_at"] = prec_obj;
  doc["n_lists_evaluated"] = {{"auc", report.n_lists_evaluated.auc},
                              {"ndcg", report.n_lists_evaluated.ndcg},
                              {"map", report.n_lists_evaluated.map},
                              {"precision", report.n_lists_evaluated.precision}};
  return doc.dump(indent);
}

std::string metrics_csv_header(const MetricsReport& report) {
  std::ostringstream out;
  out << "auc,ndcg";
  for (const auto& [k, v] : report.map_at) out << ",map_" << k;
  for (const auto& [k, v] : report.precision_at) out << ",precision_" << k;
  return out.str();
}

std::string metrics_csv_row(const MetricsReport& report) {
  std::ostringstream out;
  out << (report.auc ? format_value(*report.auc) : "") << ','
      << (report.ndcg ? format_value(*report.ndcg) : "");
  for (const auto& [k, v] : report.map_at) out << ',' << format_value(v);
  for (const auto& [k, v] : report.precision_at) out << ',' << format_value(v);
  return out.str();
}

}  // namespace rerank
