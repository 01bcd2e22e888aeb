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
#ifndef RERANK_AUTODIFF_HPP_
#define RERANK_AUTODIFF_HPP_

#include <functional>
#include <utility>
#include <vector>

#include "rerank/core.hpp"
#include "rerank/model.hpp"

namespace rerank {

struct ScoresNode {
  int id = -1;
};
struct ScalarNode {
  int id = -1;
};

/// Reverse-mode tape over whole forward passes and list losses. Scalars can be
/// composed with add/scale; gradient() returns exact analytic derivatives with
/// respect to every parameter. Position vectors are plain data to the tape:
/// no gradient flows through rankings derived from scores.
class Tape {
 public:
  explicit Tape(const RerankerParams& params) : params_(&params) {}

  /// Records a full forward pass; the returned handle can feed losses.
  ScoresNode forward(const Matrix& items, const std::vector<double>& user,
                     const PositionVector& pos);

  /// -sum_i y_i * log(max(p_i, floor)); see losses.hpp for the floor.
  ScalarNode log_loss(ScoresNode scores, const std::vector<int>& labels);

  /// sum_i |pa_i - pb_i| * (a_i - b_i)^2; the position weight is a constant.
  ScalarNode cs_loss(const PositionVector& pos_a, const PositionVector& pos_b, ScoresNode a,
                     ScoresNode b);

  ScalarNode constant(double value);
  /// Sum of every parameter; gradient is 1 everywhere.
  ScalarNode param_sum();
  ScalarNode add(ScalarNode a, ScalarNode b);
  ScalarNode scale(ScalarNode a, double factor);

  double value(ScalarNode node) const;
  const ScoreVector& scores(ScoresNode node) const;

  /// Gradient of root with respect to the flat parameter vector. Forward
  /// passes whose accumulated score-gradient is identically zero are skipped,
  /// so zero-weighted terms contribute nothing, bit for bit.
  std::vector<double> gradient(ScalarNode root) const;

 private:
  enum class Op { constant, param_sum, add, scale, log_loss, cs_loss };
  struct ScalarRecord {
    Op op;
    double value = 0.0;
    int a = -1, b = -1;       // scalar operands
    int sa = -1, sb = -1;     // score operands
    double factor = 1.0;
    std::vector<int> labels;
    std::vector<double> weights;  // |pa - pb| for cs_loss
  };

  const RerankerParams* params_;
  std::vector<ForwardCache> forwards_;
  std::vector<ScalarRecord> scalars_;
};

/// Evaluates an objective built on a fresh tape and returns its value plus the
/// analytic gradient w.r.t. every parameter. Throws NumericalError when the
/// objective value is not finite.
std::pair<double, std::vector<double>> loss_and_gradients(
    const RerankerParams& params, const std::function<ScalarNode(Tape&)>& objective);

}  // namespace rerank

#endif  // RERANK_AUTODIFF_HPP_
