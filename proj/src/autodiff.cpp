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
#include "rerank/autodiff.hpp"

#include <cmath>
#include <cstdlib>

#include "rerank/errors.hpp"
#include "rerank/losses.hpp"

namespace rerank {

ScoresNode Tape::forward(const Matrix& items, const std::vector<double>& user,
                         const PositionVector& pos) {
  forwards_.push_back(forward_cached(*params_, items, user, pos));
  return {static_cast<int>(forwards_.size()) - 1};
}

ScalarNode Tape::log_loss(ScoresNode scores, const std::vector<int>& labels) {
  ScalarRecord rec;
  rec.op = Op::log_loss;
  rec.sa = scores.id;
  rec.labels = labels;
  rec.value = rerank::log_loss(forwards_[static_cast<std::size_t>(scores.id)].scores, labels);
  scalars_.push_back(std::move(rec));
  return {static_cast<int>(scalars_.size()) - 1};
}

ScalarNode Tape::cs_loss(const PositionVector& pos_a, const PositionVector& pos_b, ScoresNode a,
                         ScoresNode b) {
  const ScoreVector& sa = forwards_[static_cast<std::size_t>(a.id)].scores;
  const ScoreVector& sb = forwards_[static_cast<std::size_t>(b.id)].scores;
  ScalarRecord rec;
  rec.op = Op::cs_loss;
  rec.sa = a.id;
  rec.sb = b.id;
  rec.value = rerank::cs_loss(pos_a, pos_b, sa, sb);
  rec.weights.resize(pos_a.size());
  for (std::size_t i = 0; i < pos_a.size(); ++i) {
    rec.weights[i] = std::abs(static_cast<double>(pos_a[i]) - static_cast<double>(pos_b[i]));
  }
  scalars_.push_back(std::move(rec));
  return {static_cast<int>(scalars_.size()) - 1};
}

ScalarNode Tape::constant(double value) {
  ScalarRecord rec;
  rec.op = Op::constant;
  rec.value = value;
  scalars_.push_back(std::move(rec));
  return {static_cast<int>(scalars_.size()) - 1};
}

ScalarNode Tape::param_sum() {
  ScalarRecord rec;
  rec.op = Op::param_sum;
  double acc = 0.0;
  for (double p : params_->flat) acc += p;
  rec.value = acc;
  scalars_.push_back(std::move(rec));
  return {static_cast<int>(scalars_.size()) - 1};
}

ScalarNode Tape::add(ScalarNode a, ScalarNode b) {
  ScalarRecord rec;
  rec.op = Op::add;
  rec.a = a.id;
  rec.b = b.id;
  rec.value = scalars_[static_cast<std::size_t>(a.id)].value +
              scalars_[static_cast<std::size_t>(b.id)].value;
  scalars_.push_back(std::move(rec));
  return {static_cast<int>(scalars_.size()) - 1};
}

ScalarNode Tape::scale(ScalarNode a, double factor) {
  ScalarRecord rec;
  rec.op = Op::scale;
  rec.a = a.id;
  rec.factor = factor;
  rec.value = factor * scalars_[static_cast<std::size_t>(a.id)].value;
  scalars_.push_back(std::move(rec));
  return {static_cast<int>(scalars_.size()) - 1};
}

double Tape::value(ScalarNode node) const {
  return scalars_[static_cast<std::size_t>(node.id)].value;
}

const ScoreVector& Tape::scores(ScoresNode node) const {
  return forwards_[static_cast<std::size_t>(node.id)].scores;
}

std::vector<double> Tape::gradient(ScalarNode root) const {
  std::vector<double> adjoint(scalars_.size(), 0.0);
  adjoint[static_cast<std::size_t>(root.id)] = 1.0;
  std::vector<std::vector<double>> score_grads(forwards_.size());
  for (std::size_t f = 0; f < forwards_.size(); ++f) {
    score_grads[f].assign(forwards_[f].scores.size(), 0.0);
  }
  double param_sum_adjoint = 0.0;

  for (std::size_t idx = scalars_.size(); idx-- > 0;) {
    const ScalarRecord& rec = scalars_[idx];
    const double adj = adjoint[idx];
    if (adj == 0.0) continue;
    switch (rec.op) {
      case Op::constant:
        break;
      case Op::param_sum:
        param_sum_adjoint += adj;
        break;
      case Op::add:
        adjoint[static_cast<std::size_t>(rec.a)] += adj;
        adjoint[static_cast<std::size_t>(rec.b)] += adj;
        break;
      case Op::scale:
        adjoint[static_cast<std::size_t>(rec.a)] += rec.factor * adj;
        break;
      case Op::log_loss: {
        const ScoreVector& s = forwards_[static_cast<std::size_t>(rec.sa)].scores;
        std::vector<double>& g = score_grads[static_cast<std::size_t>(rec.sa)];
        for (std::size_t i = 0; i < s.size(); ++i) {
          // The clamp makes the loss constant below the floor.
          if (rec.labels[i] == 1 && s[i] > kLogLossFloor) {
            g[i] += adj * (-1.0 / s[i]);
          }
        }
        break;
      }
      case Op::cs_loss: {
        const ScoreVector& sa = forwards_[static_cast<std::size_t>(rec.sa)].scores;
        const ScoreVector& sb = forwards_[static_cast<std::size_t>(rec.sb)].scores;
        std::vector<double>& ga = score_grads[static_cast<std::size_t>(rec.sa)];
        std::vector<double>& gb = score_grads[static_cast<std::size_t>(rec.sb)];
        for (std::size_t i = 0; i < sa.size(); ++i) {
          const double g = adj * 2.0 * rec.weights[i] * (sa[i] - sb[i]);
          ga[i] += g;
          gb[i] -= g;
        }
        break;
      }
    }
  }

  const ParamLayout layout(params_->cfg);
  std::vector<double> grad(layout.total_size(), 0.0);
  for (std::size_t f = 0; f < forwards_.size(); ++f) {
    bool all_zero = true;
    for (double g : score_grads[f]) {
      if (g != 0.0) {
        all_zero = false;
        break;
      }
    }
    if (all_zero) continue;
    backward(*params_, forwards_[f], score_grads[f], grad);
  }
  if (param_sum_adjoint != 0.0) {
    for (double& g : grad) g += param_sum_adjoint;
  }
  return grad;
}

std::pair<double, std::vector<double>> loss_and_gradients(
    const RerankerParams& params, const std::function<ScalarNode(Tape&)>& objective) {
  Tape tape(params);
  const ScalarNode root = objective(tape);
  const double value = tape.value(root);
  if (!std::isfinite(value)) {
    throw NumericalError("objective value is not finite: " + std::to_string(value));
  }
  return {value, tape.gradient(root)};
}

}  // namespace rerank
