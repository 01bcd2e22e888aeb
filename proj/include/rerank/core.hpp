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
#ifndef RERANK_CORE_HPP_
#define RERANK_CORE_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rerank/errors.hpp"

namespace rerank {

/// Dense row-major matrix of doubles. Just enough linear-algebra plumbing for
/// the list models in this library; rows are item feature vectors.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// A permutation of {0..n-1}. Entry i is the rank at which item i is shown;
/// rank 0 is the top of the list.
class PositionVector {
 public:
  PositionVector() = default;
  explicit PositionVector(std::vector<int> ranks) : ranks_(std::move(ranks)) {}

  static PositionVector identity(std::size_t n);

  std::size_t size() const { return ranks_.size(); }
  bool empty() const { return ranks_.empty(); }
  int operator[](std::size_t i) const { return ranks_[i]; }
  const std::vector<int>& ranks() const { return ranks_; }

  /// True iff the entries form a bijection onto {0..n-1}.
  bool is_valid() const;

  /// Inverse view: element r is the item shown at rank r.
  /// Pre: is_valid().
  std::vector<int> items_by_rank() const;

  bool operator==(const PositionVector&) const = default;

 private:
  std::vector<int> ranks_;
};

/// Per-item re-ranking scores. When produced by the softmax head the entries
/// sum to 1 (within 1e-6); entries are nonnegative either way.
struct ScoreVector {
  std::vector<double> values;

  ScoreVector() = default;
  explicit ScoreVector(std::vector<double> v) : values(std::move(v)) {}
  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
};

/// One ranked list: item features, optional user features, click labels, and
/// the order produced by the upstream ranker.
struct ListSample {
  std::string list_id;
  Matrix items;               // n x d_item
  std::vector<double> user;   // length d_user, may be empty
  std::vector<int> labels;    // 0/1 per item
  PositionVector init_pos;    // rank of each item in the initial list

  std::size_t size() const { return items.rows(); }
};

enum class SplitTag { train, valid, test };

std::string to_string(SplitTag tag);

/// An ordered collection of lists sharing feature widths.
struct Dataset {
  std::vector<ListSample> samples;
  int d_item = 0;
  int d_user = 0;
  SplitTag split_tag = SplitTag::train;
  bool fixed_length = false;  // when set, all lists must share one length

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

struct ValidationReport {
  bool ok = true;
  std::string violation;  // first violated invariant, empty when ok
};

/// Ranks items by descending score; ties broken by ascending tie_ref rank, so
/// the map is total and deterministic and all-equal scores reproduce tie_ref.
/// Throws ContractViolation on length mismatch, invalid tie_ref, or non-finite
/// scores.
PositionVector scores_to_positions(const ScoreVector& scores, const PositionVector& tie_ref);

/// Exchanges the items shown at ranks k and k+1. Throws ContractViolation when
/// P is invalid, n < 2, or k is out of [0, n-2].
PositionVector adjacent_swap(const PositionVector& pos, int k);

/// Checks the ListSample invariants; reports the first violation instead of
/// throwing. Never mutates the sample.
ValidationReport validate_sample(const ListSample& sample);

/// Dataset-level invariants: every sample valid, widths shared, and uniform
/// list length when fixed_length is set.
ValidationReport validate_dataset(const Dataset& data);

}  // namespace rerank

#endif  // RERANK_CORE_HPP_
