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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "rerank/data.hpp"
#include "rerank/errors.hpp"

using namespace rerank;

namespace {

bool samples_equal(const ListSample& a, const ListSample& b) {
  return a.list_id == b.list_id && a.items == b.items && a.user == b.user &&
         a.labels == b.labels && a.init_pos == b.init_pos;
}

bool datasets_equal(const Dataset& a, const Dataset& b) {
  if (a.size() != b.size() || a.d_item != b.d_item || a.d_user != b.d_user) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!samples_equal(a.samples[i], b.samples[i])) return false;
  }
  return true;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("generate is deterministic and produces valid samples") {
  SynthConfig cfg;
  cfg.n_lists = 50;
  cfg.seed = 9;
  auto [a, truth_a] = generate(cfg);
  auto [b, truth_b] = generate(cfg);
  CHECK(datasets_equal(a, b));
  CHECK(truth_a.click_probs == truth_b.click_probs);
  for (const ListSample& sample : a.samples) {
    const ValidationReport report = validate_sample(sample);
    CHECK(report.ok);
    CHECK(sample.init_pos == PositionVector::identity(sample.size()));
  }
  for (const auto& probs : truth_a.click_probs) {
    for (double p : probs) {
      CHECK(p > 0.0);
      CHECK(p < 1.0);
    }
  }
  SynthConfig other = cfg;
  other.seed = 10;
  auto [c, truth_c] = generate(other);
  CHECK(!datasets_equal(a, c));
}

TEST_CASE("generate honors its config domain") {
  SynthConfig cfg;
  cfg.n_lists = 1;
  cfg.n = 1;
  CHECK_THROWS_AS(generate(cfg), ConfigError);
  cfg.n = 5;
  cfg.ranker_noise = -0.1;
  CHECK_THROWS_AS(generate(cfg), ConfigError);
}

TEST_CASE("noise-free generation sorts rows by true relevance") {
  SynthConfig cfg;
  cfg.n_lists = 200;
  cfg.ranker_noise = 0.0;
  cfg.context_weight = 0.0;
  cfg.seed = 4;
  auto [data, truth] = generate(cfg);
  for (const auto& probs : truth.click_probs) {
    for (std::size_t i = 1; i < probs.size(); ++i) {
      CHECK(probs[i - 1] >= probs[i]);  // descending utility, rows in display order
    }
  }
}

TEST_CASE("empirical click rate matches the ground-truth probabilities") {
  SynthConfig cfg;
  cfg.n_lists = 10000;
  cfg.n = 10;
  cfg.seed = 21;
  cfg.click_scale = 1.5;
  auto [data, truth] = generate(cfg);
  double expected = 0.0, variance = 0.0, clicks = 0.0;
  for (std::size_t l = 0; l < data.size(); ++l) {
    for (std::size_t i = 0; i < truth.click_probs[l].size(); ++i) {
      const double p = truth.click_probs[l][i];
      expected += p;
      variance += p * (1.0 - p);
      clicks += data.samples[l].labels[i];
    }
  }
  const double sigma = std::sqrt(variance);
  CHECK(std::abs(clicks - expected) <= 3.0 * sigma);
}

TEST_CASE("extreme ranker noise decorrelates the initial order from relevance") {
  SynthConfig noisy;
  noisy.n_lists = 2000;
  noisy.ranker_noise = 1000.0;
  noisy.context_weight = 0.0;
  noisy.seed = 30;
  auto [data, truth] = generate(noisy);
  // Concordance of adjacent displayed pairs with the utility order; 0.5 means
  // no signal left.
  double concordant = 0.0, pairs = 0.0;
  for (const auto& probs : truth.click_probs) {
    for (std::size_t i = 1; i < probs.size(); ++i) {
      pairs += 1.0;
      if (probs[i - 1] >= probs[i]) concordant += 1.0;
    }
  }
  const double rate = concordant / pairs;
  CHECK(rate > 0.45);
  CHECK(rate < 0.55);
}

TEST_CASE("serial and parallel generation agree bit for bit") {
  SynthConfig cfg;
  cfg.n_lists = 64;
  cfg.seed = 17;
  auto [serial, ts] = generate(cfg, ExecPolicy::serial);
  auto [parallel, tp] = generate(cfg, ExecPolicy::parallel);
  CHECK(datasets_equal(serial, parallel));
  CHECK(ts.click_probs == tp.click_probs);
}

TEST_CASE("save and load round-trip a dataset exactly") {
  SynthConfig cfg;
  cfg.n_lists = 20;
  cfg.seed = 3;
  auto [data, truth] = generate(cfg);
  const auto path = temp_file("rerank_ds_roundtrip.jsonl");
  save(data, path.string());
  const Dataset loaded = load(path.string());
  CHECK(datasets_equal(data, loaded));
  std::filesystem::remove(path);
}

TEST_CASE("load defaults: empty file, missing init_pos, missing user") {
  const auto path = temp_file("rerank_ds_defaults.jsonl");
  {
    std::ofstream out(path);
  }
  CHECK(load(path.string()).empty());
  {
    std::ofstream out(path);
    out << R"({"list_id":"a","items":[[1.0],[2.0]],"labels":[0,1]})" << '\n';
  }
  const Dataset loaded = load(path.string());
  REQUIRE(loaded.size() == 1);
  CHECK(loaded.samples[0].init_pos == PositionVector::identity(2));
  CHECK(loaded.samples[0].user.empty());
  CHECK(loaded.d_user == 0);
  std::filesystem::remove(path);
}

TEST_CASE("load rejects malformed records with a line diagnostic") {
  const auto path = temp_file("rerank_ds_bad.jsonl");
  {
    std::ofstream out(path);
    out << R"({"list_id":"ok","items":[[1.0]],"labels":[1]})" << '\n';
    out << R"({"list_id":"bad","items":[[1.0],[2.0]],"labels":[0,1],"init_pos":[0,0]})" << '\n';
  }
  try {
    load(path.string());
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    const std::string what = e.what();
    CHECK(what.find(":2:") != std::string::npos);
    CHECK(what.find("not a permutation") != std::string::npos);
  }
  {
    std::ofstream out(path);
    out << "this is not json\n";
  }
  CHECK_THROWS_AS(load(path.string()), ParseError);
  {
    std::ofstream out(path);
    out << R"({"list_id":"a","items":[[1.0]],"labels":[1]})" << '\n';
    out << R"({"list_id":"b","items":[[1.0,2.0]],"labels":[1]})" << '\n';
  }
  try {
    load(path.string());
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("width") != std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST_CASE("split partitions deterministically with documented rounding") {
  SynthConfig cfg;
  cfg.n_lists = 100;
  cfg.seed = 11;
  auto [data, truth] = generate(cfg);

  auto [train_a, valid_a, test_a] = split(data, {0.8, 0.1, 0.1}, 5);
  CHECK(train_a.size() == 80);
  CHECK(valid_a.size() == 10);
  CHECK(test_a.size() == 10);
  CHECK(train_a.split_tag == SplitTag::train);
  CHECK(valid_a.split_tag == SplitTag::valid);
  CHECK(test_a.split_tag == SplitTag::test);

  auto [train_b, valid_b, test_b] = split(data, {0.8, 0.1, 0.1}, 5);
  CHECK(datasets_equal(train_a, train_b));
  CHECK(datasets_equal(valid_a, valid_b));
  CHECK(datasets_equal(test_a, test_b));

  std::set<std::string> seen;
  for (const Dataset* part : {&train_a, &valid_a, &test_a}) {
    for (const ListSample& sample : part->samples) {
      CHECK(seen.insert(sample.list_id).second);  // no list in two splits
    }
  }
  CHECK(seen.size() == 100);

  auto [all, none_a, none_b] = split(data, {1.0, 0.0, 0.0}, 5);
  CHECK(all.size() == 100);
  CHECK(none_a.empty());
  CHECK(none_b.empty());

  CHECK_THROWS_AS(split(data, {0.5, 0.2, 0.2}, 5), ConfigError);
  CHECK_THROWS_AS(split(data, {1.2, -0.1, -0.1}, 5), ConfigError);
}

TEST_CASE("split with uneven counts gives the remainder to the earliest splits") {
  SynthConfig cfg;
  cfg.n_lists = 10;
  cfg.seed = 2;
  auto [data, truth] = generate(cfg);
  auto [train, valid, test] = split(data, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, 1);
  CHECK(train.size() == 4);
  CHECK(valid.size() == 3);
  CHECK(test.size() == 3);
}
