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
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "rerank/data.hpp"
#include "rerank/obedience.hpp"
#include "rerank/rng.hpp"

#include "json.hpp"

using namespace rerank;

namespace {

RerankerConfig model_config(int d_item, int d_user, int n_max) {
  RerankerConfig cfg;
  cfg.d_item = d_item;
  cfg.d_user = d_user;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.n_blocks = 1;
  cfg.mlp_hidden = {8};
  cfg.n_max = n_max;
  cfg.seed = 1;
  return cfg;
}

Dataset small_dataset(std::size_t n_lists, int n, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n_lists = n_lists;
  cfg.n = n;
  cfg.d_item = 3;
  cfg.d_user = 2;
  cfg.seed = seed;
  return generate(cfg).first;
}

RerankerParams position_sensitive(const RerankerConfig& cfg, double magnitude,
                                  std::uint64_t seed) {
  RerankerParams params = init_params(cfg);
  Rng rng(seed);
  for (double& p : params.tensor("pos_table")) p = magnitude * rng.normal();
  return params;
}

}  // namespace

TEST_CASE("a position-blind model obeys both principles everywhere") {
  const Dataset data = small_dataset(40, 6, 12);
  const RerankerConfig cfg = model_config(3, 2, 6);
  const RerankerParams params = init_params(cfg);  // zero position table
  CHECK(p1_obedience(params, data) == 1.0);
  CHECK(p2_obedience(params, data, 1, 99) == 1.0);
  CHECK(p2_obedience(params, data, 3, 7, true) == 1.0);
}

TEST_CASE("single-item lists always obey") {
  Dataset data;
  data.d_item = 2;
  data.d_user = 0;
  for (int i = 0; i < 5; ++i) {
    ListSample sample;
    sample.list_id = "solo-" + std::to_string(i);
    sample.items = Matrix::from_rows({{0.1 * i, 1.0}});
    sample.labels = {1};
    sample.init_pos = PositionVector::identity(1);
    data.samples.push_back(sample);
  }
  RerankerConfig cfg = model_config(2, 0, 4);
  const RerankerParams params = position_sensitive(cfg, 2.0, 5);
  CHECK(p1_obedience(params, data) == 1.0);
  CHECK(p2_obedience(params, data, 4, 11) == 1.0);
}

TEST_CASE("strict perturbation checking is at most as lenient as sampling") {
  const Dataset data = small_dataset(60, 6, 13);
  const RerankerConfig cfg = model_config(3, 2, 6);
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const RerankerParams params = position_sensitive(cfg, 1.0, seed);
    const double sampled = p2_obedience(params, data, 1, 42);
    const double strict = p2_obedience(params, data, 1, 42, true);
    CHECK(strict <= sampled);
  }
}

TEST_CASE("perturbation checks are deterministic in the eval seed") {
  const Dataset data = small_dataset(30, 5, 14);
  const RerankerConfig cfg = model_config(3, 2, 5);
  const RerankerParams params = position_sensitive(cfg, 1.5, 8);
  const double a = p2_obedience(params, data, 2, 1234);
  const double b = p2_obedience(params, data, 2, 1234);
  CHECK(a == b);
  CHECK(p1_obedience(params, data) == p1_obedience(params, data));
}

TEST_CASE("serial and parallel obedience agree") {
  const Dataset data = small_dataset(30, 5, 15);
  const RerankerConfig cfg = model_config(3, 2, 5);
  const RerankerParams params = position_sensitive(cfg, 1.0, 9);
  CHECK(p1_obedience(params, data, ExecPolicy::serial) ==
        p1_obedience(params, data, ExecPolicy::parallel));
  CHECK(p2_obedience(params, data, 2, 77, false, ExecPolicy::serial) ==
        p2_obedience(params, data, 2, 77, false, ExecPolicy::parallel));
}

TEST_CASE("empty datasets are rejected") {
  const RerankerConfig cfg = model_config(3, 2, 5);
  const RerankerParams params = init_params(cfg);
  CHECK_THROWS_AS(p1_obedience(params, Dataset{}), ContractViolation);
  CHECK_THROWS_AS(p2_obedience(params, Dataset{}, 1, 0), ContractViolation);
}

TEST_CASE("obedience report carries its evaluation settings") {
  const Dataset data = small_dataset(20, 4, 16);
  const RerankerConfig cfg = model_config(3, 2, 4);
  const RerankerParams params = init_params(cfg);
  const ObedienceReport report = obedience_report(params, data, 2, 555);
  CHECK(report.n_lists == 20);
  CHECK(report.p2_trials_per_list == 2);
  CHECK(report.eval_seed == 555);
  CHECK(report.p1_rate == 1.0);
  CHECK(report.p2_rate == 1.0);

  const auto doc = nlohmann::json::parse(obedience_to_json(report));
  CHECK(doc.at("p1_rate") == 1.0);
  CHECK(doc.at("p2_rate") == 1.0);
  CHECK(doc.at("n_lists") == 20);
  CHECK(doc.at("p2_trials_per_list") == 2);
  CHECK(doc.at("eval_seed") == 555);
  CHECK(obedience_csv_row(report) == "1.000000,1.000000,20,2,555,0");
}

TEST_CASE("rates fall strictly below one for a strongly position-driven model") {
  const Dataset data = small_dataset(60, 6, 17);
  const RerankerConfig cfg = model_config(3, 2, 6);
  const RerankerParams params = position_sensitive(cfg, 4.0, 10);
  const double p1 = p1_obedience(params, data);
  const double p2 = p2_obedience(params, data, 1, 3);
  CHECK(p1 >= 0.0);
  CHECK(p2 >= 0.0);
  // A table this large must disturb at least one of sixty lists.
  CHECK((p1 < 1.0 || p2 < 1.0));
}
