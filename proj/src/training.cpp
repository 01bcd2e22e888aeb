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
#include "rerank/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "rerank/errors.hpp"

namespace rerank {

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad,
               const AdamConfig& cfg) {
  if (params.size() != grad.size() || params.size() != state.m.size()) {
    throw ContractViolation("adam_step: size mismatch");
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
  }
}

std::vector<std::size_t> epoch_shuffle(std::uint64_t seed, int epoch, std::size_t n_samples) {
  std::vector<std::size_t> order(n_samples);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(seed, kStreamShuffle, static_cast<std::uint64_t>(epoch)));
  rng.shuffle(order);
  return order;
}

int draw_swap_index(Rng& rng, std::size_t list_length) {
  if (list_length < 2) throw ContractViolation("draw_swap_index: list length must be >= 2");
  return rng.uniform_int(0, static_cast<int>(list_length) - 2);
}

BatchGradResult batch_gradient(const RerankerParams& params, const Dataset& data,
                               std::span<const std::size_t> indices,
                               std::span<const int> swap_ks, PrincipleWeights weights,
                               ExecPolicy policy) {
  if (indices.size() != swap_ks.size() || indices.empty()) {
    throw ContractViolation("batch_gradient: bad batch shape");
  }
  const std::size_t batch = indices.size();
  std::vector<PrincipledLossBreakdown> breakdowns(batch);
  std::vector<std::vector<double>> grads(batch);
  for_each_index(policy, batch, [&](std::size_t i) {
    try {
      auto [bd, g] = principled_loss_with_gradients(params, data.samples[indices[i]],
                                                    swap_ks[i], weights);
      breakdowns[i] = std::move(bd);
      grads[i] = std::move(g);
    } catch (const NumericalError& e) {
      throw NumericalError("list '" + data.samples[indices[i]].list_id + "': " + e.what());
    }
  });

  BatchGradResult out;
  out.grad.assign(grads[0].size(), 0.0);
  const double inv_b = 1.0 / static_cast<double>(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    const PrincipledLossBreakdown& bd = breakdowns[i];
    if (!std::isfinite(bd.total)) {
      throw NumericalError("non-finite loss on list '" + data.samples[indices[i]].list_id +
                           "' (total=" + std::to_string(bd.total) + ")");
    }
    for (std::size_t j = 0; j < out.grad.size(); ++j) out.grad[j] += grads[i][j];
    out.mean_total += bd.total;
    out.mean_terms[0] += bd.ce_base;
    out.mean_terms[1] += bd.ce_p_prime;
    out.mean_terms[2] += bd.cs_p1;
    out.mean_terms[3] += bd.ce_p_hat;
    out.mean_terms[4] += bd.cs_p2;
  }
  for (double& g : out.grad) g *= inv_b;
  out.mean_total *= inv_b;
  for (double& t : out.mean_terms) t *= inv_b;
  return out;
}

namespace {

void validate_train_inputs(const TrainConfig& cfg, const RerankerConfig& model_cfg,
                           const Dataset& data) {
  if (cfg.epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (cfg.learning_rate <= 0.0) throw ConfigError("train: learning_rate must be > 0");
  if (cfg.principle_weights.p1 < 0.0 || cfg.principle_weights.p2 < 0.0) {
    throw ConfigError("train: principle weights must be >= 0");
  }
  if (data.empty()) throw ContractViolation("train: empty dataset");
  validate_config(model_cfg);
  if (model_cfg.d_item != data.d_item) {
    throw ConfigError("train: model d_item " + std::to_string(model_cfg.d_item) +
                      " != dataset d_item " + std::to_string(data.d_item));
  }
  if (model_cfg.d_user != data.d_user) {
    throw ConfigError("train: model d_user " + std::to_string(model_cfg.d_user) +
                      " != dataset d_user " + std::to_string(data.d_user));
  }
  for (const ListSample& s : data.samples) {
    if (s.size() < 2) {
      throw ConfigError("train: list '" + s.list_id + "' has fewer than 2 items; the adjacent"
                        " swap is undefined");
    }
    if (s.size() > static_cast<std::size_t>(model_cfg.n_max)) {
      throw ConfigError("train: list '" + s.list_id + "' longer than n_max");
    }
  }
}

// Batches group equal-length lists; buckets are processed in ascending length
// and keep the shuffled order within each bucket.
std::vector<std::vector<std::size_t>> make_batches(const Dataset& data,
                                                   const std::vector<std::size_t>& order,
                                                   int batch_size) {
  std::map<std::size_t, std::vector<std::size_t>> buckets;
  for (std::size_t idx : order) buckets[data.samples[idx].size()].push_back(idx);
  std::vector<std::vector<std::size_t>> batches;
  for (auto& [length, indices] : buckets) {
    for (std::size_t at = 0; at < indices.size(); at += static_cast<std::size_t>(batch_size)) {
      const std::size_t end = std::min(indices.size(), at + static_cast<std::size_t>(batch_size));
      batches.emplace_back(indices.begin() + static_cast<long>(at),
                           indices.begin() + static_cast<long>(end));
    }
  }
  return batches;
}

double metric_or(const std::optional<double>& value, double fallback) {
  return value ? *value : fallback;
}

}  // namespace

std::pair<RerankerParams, TrainLog> train(const TrainConfig& cfg, const RerankerConfig& model_cfg,
                                          const Dataset& train_data, const Dataset* valid_data) {
  validate_train_inputs(cfg, model_cfg, train_data);

  RerankerParams params = init_params(model_cfg);
  AdamState adam(params.flat.size());
  const AdamConfig adam_cfg{cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps};

  TrainLog log;
  log.learning_rate = cfg.learning_rate;
  log.seed = cfg.seed;

  RerankerParams best_params = params;
  double best_ndcg = -1.0;
  int best_epoch = 0;

  const std::size_t n_samples = train_data.size();
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<std::size_t> order = epoch_shuffle(cfg.seed, epoch, n_samples);
    const auto batches = make_batches(train_data, order, cfg.batch_size);
    Rng swap_rng(mix_seed(cfg.seed, kStreamSwap, static_cast<std::uint64_t>(epoch)));

    EpochRecord record;
    record.epoch = epoch;
    for (const auto& batch : batches) {
      std::vector<int> swap_ks(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) {
        swap_ks[i] = draw_swap_index(swap_rng, train_data.samples[batch[i]].size());
      }
      BatchGradResult result;
      try {
        result = batch_gradient(params, train_data, batch, swap_ks, cfg.principle_weights,
                                cfg.policy);
      } catch (const NumericalError& e) {
        throw NumericalError("epoch " + std::to_string(epoch) + ": " + e.what());
      }
      adam_step(adam, params.flat, result.grad, adam_cfg);
      for (double p : params.flat) {
        if (!std::isfinite(p)) {
          throw NumericalError("epoch " + std::to_string(epoch) +
                               ": parameters turned non-finite after update " +
                               std::to_string(adam.t));
        }
      }
      const double weight = static_cast<double>(batch.size());
      record.mean_total += result.mean_total * weight;
      record.mean_ce_base += result.mean_terms[0] * weight;
      record.mean_ce_p_prime += result.mean_terms[1] * weight;
      record.mean_cs_p1 += result.mean_terms[2] * weight;
      record.mean_ce_p_hat += result.mean_terms[3] * weight;
      record.mean_cs_p2 += result.mean_terms[4] * weight;
    }
    const double inv_n = 1.0 / static_cast<double>(n_samples);
    record.mean_total *= inv_n;
    record.mean_ce_base *= inv_n;
    record.mean_ce_p_prime *= inv_n;
    record.mean_cs_p1 *= inv_n;
    record.mean_ce_p_hat *= inv_n;
    record.mean_cs_p2 *= inv_n;

    const bool last_epoch = epoch == cfg.epochs;
    const bool scheduled = cfg.eval_every > 0 && epoch % cfg.eval_every == 0;
    if (valid_data != nullptr && !valid_data->empty() && (last_epoch || scheduled)) {
      EvaluateOptions eval_options;
      eval_options.policy = cfg.policy;
      record.valid_metrics = evaluate(params, *valid_data, eval_options);
      record.valid_obedience = obedience_report(params, *valid_data, cfg.p2_trials,
                                                mix_seed(cfg.seed, kStreamObedience), false,
                                                cfg.policy);
      const double ndcg = metric_or(record.valid_metrics->ndcg, -1.0);
      if (cfg.keep_best_checkpoint && ndcg > best_ndcg) {
        best_ndcg = ndcg;
        best_params = params;
        best_epoch = epoch;
      }
    }

    record.wall_clock_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log.epochs.push_back(std::move(record));
  }

  if (cfg.keep_best_checkpoint && best_epoch > 0) {
    log.best_epoch = best_epoch;
    return {std::move(best_params), std::move(log)};
  }
  log.best_epoch = cfg.epochs;
  return {std::move(params), std::move(log)};
}

GridSearchResult grid_search(const TrainConfig& base, const RerankerConfig& model_cfg,
                             const Dataset& train_data, const Dataset& valid_data) {
  if (base.lr_grid.empty()) throw ConfigError("grid_search: empty learning-rate grid");
  if (valid_data.empty()) throw ContractViolation("grid_search: empty validation split");

  GridSearchResult result;
  result.best_params = RerankerParams{};
  std::size_t best_idx = 0;
  double best_ndcg = -2.0, best_auc = -2.0;
  for (double lr : base.lr_grid) {
    TrainConfig cfg = base;
    cfg.learning_rate = lr;
    auto [params, log] = train(cfg, model_cfg, train_data, &valid_data);
    GridRun run;
    run.lr = lr;
    run.valid = *log.epochs.back().valid_metrics;
    run.log = std::move(log);
    const double ndcg = metric_or(run.valid.ndcg, -1.0);
    const double auc = metric_or(run.valid.auc, -1.0);
    result.runs.push_back(std::move(run));
    const std::size_t idx = result.runs.size() - 1;
    // Higher NDCG wins; AUC breaks ties; then the lower rate.
    bool better = false;
    if (ndcg > best_ndcg) {
      better = true;
    } else if (ndcg == best_ndcg) {
      if (auc > best_auc) {
        better = true;
      } else if (auc == best_auc && lr < result.runs[best_idx].lr) {
        better = true;
      }
    }
    if (idx == 0 || better) {
      best_idx = idx;
      best_ndcg = ndcg;
      best_auc = auc;
      result.best_params = std::move(params);
    }
  }
  result.runs[best_idx].selected = true;
  result.best_config = base;
  result.best_config.learning_rate = result.runs[best_idx].lr;
  return result;
}

GradCheckReport gradient_check(const RerankerConfig& model_cfg, const ListSample& sample,
                               int swap_k, double h, double threshold, bool corrupt,
                               PrincipleWeights weights) {
  RerankerParams params = init_params(model_cfg);
  auto [breakdown, grad] = principled_loss_with_gradients(params, sample, swap_k, weights);
  if (corrupt && !grad.empty()) grad[0] += 1.0;

  GradCheckReport report;
  report.h = h;
  report.threshold = threshold;
  report.n_params = grad.size();
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double saved = params.flat[i];
    params.flat[i] = saved + h;
    const double up = principled_total_frozen(params, sample, breakdown, weights);
    params.flat[i] = saved - h;
    const double down = principled_total_frozen(params, sample, breakdown, weights);
    params.flat[i] = saved;
    const double fd = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(grad[i]), std::abs(fd), 1e-6});
    const double rel = std::abs(grad[i] - fd) / denom;
    if (rel > report.max_rel_err) {
      report.max_rel_err = rel;
      report.worst_index = i;
      report.analytic_at_worst = grad[i];
      report.fd_at_worst = fd;
    }
  }
  const ParamLayout layout(model_cfg);
  report.worst_tensor = layout.owner(report.worst_index).name;
  report.pass = report.max_rel_err <= threshold;
  return report;
}

std::string trainlog_csv(const TrainLog& log, const std::string& manifest_ref) {
  std::ostringstream out;
  if (!manifest_ref.empty()) out << "# manifest: " << manifest_ref << '\n';
  out << "epoch,mean_total,mean_ce_base,mean_ce_p_prime,mean_cs_p1,mean_ce_p_hat,mean_cs_p2,"
         "valid_auc,valid_ndcg,valid_map_5,valid_map_10,valid_map_15,valid_map_20,"
         "valid_precision_5,valid_precision_10,valid_precision_15,valid_precision_20,"
         "valid_p1_obedience,valid_p2_obedience,wall_clock_sec\n";
  char buf[64];
  auto fmt = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return std::string(buf);
  };
  for (const EpochRecord& r : log.epochs) {
    out << r.epoch << ',' << fmt(r.mean_total) << ',' << fmt(r.mean_ce_base) << ','
        << fmt(r.mean_ce_p_prime) << ',' << fmt(r.mean_cs_p1) << ',' << fmt(r.mean_ce_p_hat)
        << ',' << fmt(r.mean_cs_p2) << ',';
    if (r.valid_metrics) {
      const MetricsReport& m = *r.valid_metrics;
      out << (m.auc ? fmt(*m.auc) : "") << ',' << (m.ndcg ? fmt(*m.ndcg) : "");
      for (int k : {5, 10, 15, 20}) {
        out << ',' << (m.map_at.count(k) ? fmt(m.map_at.at(k)) : "");
      }
      for (int k : {5, 10, 15, 20}) {
        out << ',' << (m.precision_at.count(k) ? fmt(m.precision_at.at(k)) : "");
      }
    } else {
      out << ",,,,,,,,,";
    }
    out << ',';
    if (r.valid_obedience) {
      out << fmt(r.valid_obedience->p1_rate) << ',' << fmt(r.valid_obedience->p2_rate);
    } else {
      out << ',';
    }
    out << ',' << fmt(r.wall_clock_sec) << '\n';
  }
  return out.str();
}

}  // namespace rerank
