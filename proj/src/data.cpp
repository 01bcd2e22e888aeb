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
#include "rerank/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "rerank/errors.hpp"
#include "rerank/rng.hpp"

#include "json.hpp"

namespace rerank {

namespace {

void validate_synth_config(const SynthConfig& cfg) {
  if (cfg.n < 2) throw ConfigError("generate: list length must be >= 2");
  if (cfg.d_item < 1) throw ConfigError("generate: d_item must be >= 1");
  if (cfg.d_user < 0) throw ConfigError("generate: d_user must be >= 0");
  if (cfg.ranker_noise < 0.0) throw ConfigError("generate: ranker_noise must be >= 0");
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

std::pair<Dataset, GroundTruth> generate(const SynthConfig& cfg, ExecPolicy policy) {
  validate_synth_config(cfg);
  const std::size_t n = static_cast<std::size_t>(cfg.n);
  const std::size_t d_item = static_cast<std::size_t>(cfg.d_item);
  const std::size_t d_user = static_cast<std::size_t>(cfg.d_user);

  // The user->weights map is shared across lists and drawn once.
  GroundTruth truth;
  {
    Rng master(mix_seed(cfg.seed, kStreamData));
    const std::size_t map_cols = std::max<std::size_t>(d_user, 1);
    truth.user_map.resize(d_item * map_cols);
    const double scale = 1.0 / std::sqrt(static_cast<double>(map_cols) *
                                         static_cast<double>(d_item));
    for (double& a : truth.user_map) a = master.normal() * scale;
  }
  truth.click_probs.resize(cfg.n_lists);
  truth.user_weights.resize(cfg.n_lists);

  Dataset data;
  data.d_item = cfg.d_item;
  data.d_user = cfg.d_user;
  data.samples.resize(cfg.n_lists);

  for_each_index(policy, cfg.n_lists, [&](std::size_t idx) {
    Rng rng(mix_seed(cfg.seed, kStreamData, idx + 1));

    std::vector<double> user(d_user);
    for (double& u : user) u = rng.normal();

    Matrix items(n, d_item);
    for (double& x : items.data()) x = rng.normal();

    // w = map * user (or the map's first column when there is no user vector).
    std::vector<double> w(d_item, 0.0);
    if (d_user > 0) {
      for (std::size_t k = 0; k < d_item; ++k) {
        double acc = 0.0;
        for (std::size_t j = 0; j < d_user; ++j) acc += truth.user_map[k * d_user + j] * user[j];
        w[k] = acc;
      }
    } else {
      for (std::size_t k = 0; k < d_item; ++k) w[k] = truth.user_map[k];
    }

    std::vector<double> base(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      const double* xi = items.row(i).data();
      for (std::size_t k = 0; k < d_item; ++k) acc += w[k] * xi[k];
      base[i] = acc;
    }

    // Cross-item context: affinity with the mean of the other items.
    std::vector<double> mean_all(d_item, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* xi = items.row(i).data();
      for (std::size_t k = 0; k < d_item; ++k) mean_all[k] += xi[k];
    }
    std::vector<double> utility(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* xi = items.row(i).data();
      double ctx = 0.0;
      for (std::size_t k = 0; k < d_item; ++k) {
        const double mean_other = (mean_all[k] - xi[k]) / static_cast<double>(n - 1);
        ctx += xi[k] * mean_other;
      }
      utility[i] = base[i] + cfg.context_weight * ctx;
    }

    std::vector<double> probs(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      probs[i] = sigmoid(cfg.click_scale * utility[i]);
      labels[i] = rng.uniform() < probs[i] ? 1 : 0;
    }

    std::vector<double> noisy(n);
    for (std::size_t i = 0; i < n; ++i) noisy[i] = base[i] + rng.normal(0.0, cfg.ranker_noise);

    // Store rows in the order the upstream ranker would display them.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (noisy[static_cast<std::size_t>(a)] != noisy[static_cast<std::size_t>(b)]) {
        return noisy[static_cast<std::size_t>(a)] > noisy[static_cast<std::size_t>(b)];
      }
      return a < b;
    });

    ListSample sample;
    sample.list_id = "synth-" + std::to_string(idx);
    sample.items = Matrix(n, d_item);
    sample.labels.resize(n);
    sample.user = user;
    std::vector<double> probs_ordered(n);
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t src = static_cast<std::size_t>(order[r]);
      std::copy(items.row(src).begin(), items.row(src).end(), sample.items.row(r).begin());
      sample.labels[r] = labels[src];
      probs_ordered[r] = probs[src];
    }
    sample.init_pos = PositionVector::identity(n);

    data.samples[idx] = std::move(sample);
    truth.click_probs[idx] = std::move(probs_ordered);
    truth.user_weights[idx] = std::move(w);
  });

  return {std::move(data), std::move(truth)};
}

void save(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError("cannot open for writing: " + path);
  for (const ListSample& sample : data.samples) {
    nlohmann::json line;
    line["list_id"] = sample.list_id;
    line["user"] = sample.user;
    nlohmann::json items = nlohmann::json::array();
    for (std::size_t r = 0; r < sample.items.rows(); ++r) {
      items.push_back(std::vector<double>(sample.items.row(r).begin(),
                                          sample.items.row(r).end()));
    }
    line["items"] = std::move(items);
    line["labels"] = sample.labels;
    line["init_pos"] = sample.init_pos.ranks();
    out << line.dump() << '\n';
  }
  if (!out) throw ParseError("write failed: " + path);
}

Dataset load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open: " + path);
  Dataset data;
  std::string text;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& field, const std::string& msg) {
    throw ParseError(path + ":" + std::to_string(line_no) + ": " + field + ": " + msg);
  };
  while (std::getline(in, text)) {
    ++line_no;
    if (text.empty()) continue;
    nlohmann::json line;
    try {
      line = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      fail("line", e.what());
    }
    ListSample sample;
    try {
      sample.list_id = line.value("list_id", "line-" + std::to_string(line_no));
      if (!line.contains("items") || !line["items"].is_array() || line["items"].empty()) {
        fail("items", "missing or empty array");
      }
      std::vector<std::vector<double>> rows;
      for (const auto& row : line["items"]) {
        rows.push_back(row.get<std::vector<double>>());
      }
      sample.items = Matrix::from_rows(rows);
      if (!line.contains("labels")) fail("labels", "missing");
      sample.labels = line["labels"].get<std::vector<int>>();
      if (line.contains("user")) sample.user = line["user"].get<std::vector<double>>();
      if (line.contains("init_pos")) {
        sample.init_pos = PositionVector(line["init_pos"].get<std::vector<int>>());
      } else {
        sample.init_pos = PositionVector::identity(sample.items.rows());
      }
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      fail("record", e.what());
    }
    const ValidationReport report = validate_sample(sample);
    if (!report.ok) fail("record", report.violation);
    if (data.samples.empty()) {
      data.d_item = static_cast<int>(sample.items.cols());
      data.d_user = static_cast<int>(sample.user.size());
    } else {
      if (sample.items.cols() != static_cast<std::size_t>(data.d_item)) {
        fail("items", "item width differs from previous lists");
      }
      if (sample.user.size() != static_cast<std::size_t>(data.d_user)) {
        fail("user", "user width differs from previous lists");
      }
    }
    data.samples.push_back(std::move(sample));
  }
  return data;
}

std::tuple<Dataset, Dataset, Dataset> split(const Dataset& data,
                                            const std::array<double, 3>& fractions,
                                            std::uint64_t seed) {
  double sum = 0.0;
  for (double f : fractions) {
    if (f < 0.0) throw ConfigError("split: fractions must be >= 0");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split: fractions must sum to 1");

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(seed, kStreamSplit));
  rng.shuffle(order);

  const std::size_t total = data.size();
  std::array<std::size_t, 3> counts{};
  std::size_t assigned = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    counts[s] = static_cast<std::size_t>(std::floor(fractions[s] * static_cast<double>(total)));
    assigned += counts[s];
  }
  for (std::size_t s = 0; assigned < total; s = (s + 1) % 3) {
    if (fractions[s] > 0.0) {
      ++counts[s];
      ++assigned;
    }
  }

  std::array<Dataset, 3> parts;
  const std::array<SplitTag, 3> tags{SplitTag::train, SplitTag::valid, SplitTag::test};
  std::size_t cursor = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    parts[s].d_item = data.d_item;
    parts[s].d_user = data.d_user;
    parts[s].fixed_length = data.fixed_length;
    parts[s].split_tag = tags[s];
    for (std::size_t i = 0; i < counts[s]; ++i) {
      parts[s].samples.push_back(data.samples[order[cursor++]]);
    }
  }
  return {std::move(parts[0]), std::move(parts[1]), std::move(parts[2])};
}

}  // namespace rerank
