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
#include "rerank/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rerank {

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return Matrix();
  Matrix m(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols()) {
      throw ContractViolation("Matrix::from_rows: ragged rows");
    }
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

PositionVector PositionVector::identity(std::size_t n) {
  std::vector<int> ranks(n);
  std::iota(ranks.begin(), ranks.end(), 0);
  return PositionVector(std::move(ranks));
}

bool PositionVector::is_valid() const {
  const std::size_t n = ranks_.size();
  std::vector<char> seen(n, 0);
  for (int r : ranks_) {
    if (r < 0 || static_cast<std::size_t>(r) >= n || seen[static_cast<std::size_t>(r)]) {
      return false;
    }
    seen[static_cast<std::size_t>(r)] = 1;
  }
  return true;
}

std::vector<int> PositionVector::items_by_rank() const {
  std::vector<int> items(ranks_.size());
  for (std::size_t i = 0; i < ranks_.size(); ++i) {
    items[static_cast<std::size_t>(ranks_[i])] = static_cast<int>(i);
  }
  return items;
}

std::string to_string(SplitTag tag) {
  switch (tag) {
    case SplitTag::train: return "train";
    case SplitTag::valid: return "valid";
    case SplitTag::test: return "test";
  }
  return "train";
}

PositionVector scores_to_positions(const ScoreVector& scores, const PositionVector& tie_ref) {
  const std::size_t n = scores.size();
  if (n != tie_ref.size()) {
    throw ContractViolation("scores_to_positions: scores and tie_ref lengths differ");
  }
  if (!tie_ref.is_valid()) {
    throw ContractViolation("scores_to_positions: tie_ref is not a permutation");
  }
  for (double s : scores.values) {
    if (!std::isfinite(s)) {
      throw ContractViolation("scores_to_positions: non-finite score");
    }
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores[static_cast<std::size_t>(a)] != scores[static_cast<std::size_t>(b)]) {
      return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
    }
    return tie_ref[static_cast<std::size_t>(a)] < tie_ref[static_cast<std::size_t>(b)];
  });
  std::vector<int> ranks(n);
  for (std::size_t r = 0; r < n; ++r) {
    ranks[static_cast<std::size_t>(order[r])] = static_cast<int>(r);
  }
  return PositionVector(std::move(ranks));
}

PositionVector adjacent_swap(const PositionVector& pos, int k) {
  const std::size_t n = pos.size();
  if (!pos.is_valid()) {
    throw ContractViolation("adjacent_swap: input is not a permutation");
  }
  if (n < 2) {
    throw ContractViolation("adjacent_swap: no adjacent pair in a list of length " +
                            std::to_string(n));
  }
  if (k < 0 || static_cast<std::size_t>(k) > n - 2) {
    throw ContractViolation("adjacent_swap: rank index " + std::to_string(k) +
                            " out of [0, " + std::to_string(n - 2) + "]");
  }
  std::vector<int> ranks = pos.ranks();
  int item_at_k = -1;
  int item_above = -1;
  for (std::size_t i = 0; i < n; ++i) {
    if (ranks[i] == k) item_at_k = static_cast<int>(i);
    if (ranks[i] == k + 1) item_above = static_cast<int>(i);
  }
  std::swap(ranks[static_cast<std::size_t>(item_at_k)],
            ranks[static_cast<std::size_t>(item_above)]);
  return PositionVector(std::move(ranks));
}

ValidationReport validate_sample(const ListSample& sample) {
  const std::size_t n = sample.items.rows();
  if (n < 1) return {false, "empty item list"};
  if (sample.labels.size() != n) return {false, "labels length differs from item count"};
  for (int y : sample.labels) {
    if (y != 0 && y != 1) return {false, "non-binary label"};
  }
  for (double x : sample.items.data()) {
    if (!std::isfinite(x)) return {false, "non-finite item feature"};
  }
  for (double u : sample.user) {
    if (!std::isfinite(u)) return {false, "non-finite user feature"};
  }
  if (sample.init_pos.size() != n) return {false, "init_pos length differs from item count"};
  if (!sample.init_pos.is_valid()) return {false, "not a permutation"};
  return {};
}

ValidationReport validate_dataset(const Dataset& data) {
  for (const ListSample& sample : data.samples) {
    const ValidationReport report = validate_sample(sample);
    if (!report.ok) return {false, "list '" + sample.list_id + "': " + report.violation};
    if (sample.items.cols() != static_cast<std::size_t>(data.d_item)) {
      return {false, "list '" + sample.list_id + "': item width differs from dataset d_item"};
    }
    if (sample.user.size() != static_cast<std::size_t>(data.d_user)) {
      return {false, "list '" + sample.list_id + "': user width differs from dataset d_user"};
    }
    if (data.fixed_length && sample.size() != data.samples.front().size()) {
      return {false, "list '" + sample.list_id + "': length differs under the fixed-length flag"};
    }
  }
  return {};
}

}  // namespace rerank
