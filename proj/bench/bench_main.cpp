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

// Wall-clock comparison of the serial reference kernels against the
// OpenMP-parallel ones. Every kernel pair must also produce bit-identical
// results; the benchmark aborts if they diverge.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>

#include "rerank/data.hpp"
#include "rerank/metrics.hpp"
#include "rerank/obedience.hpp"
#include "rerank/parallel.hpp"
#include "rerank/training.hpp"

using namespace rerank;

namespace {

template <class Fn>
double time_ms(Fn&& fn, int repeats) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < repeats; ++r) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / repeats;
}

void row(const char* name, double serial_ms, double parallel_ms, bool identical) {
  std::printf("%-18s %10.1f ms %10.1f ms %7.2fx   %s\n", name, serial_ms, parallel_ms,
              serial_ms / parallel_ms, identical ? "bit-identical" : "DIVERGED");
}

}  // namespace

int main(int argc, char** argv) {
  bool quick = false;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--quick") == 0) quick = true;
  }
  const std::size_t n_lists = quick ? 128 : 2000;
  const int repeats = quick ? 1 : 3;

  SynthConfig synth;
  synth.n_lists = n_lists;
  synth.n = 10;
  synth.seed = 7;

  RerankerConfig model_cfg;
  model_cfg.d_item = synth.d_item;
  model_cfg.d_user = synth.d_user;
  model_cfg.d_model = 32;
  model_cfg.n_heads = 2;
  model_cfg.n_blocks = 1;
  model_cfg.mlp_hidden = {32};
  model_cfg.n_max = 10;
  model_cfg.seed = 1;

  std::printf("lists=%zu  threads=%d  repeats=%d\n\n", n_lists, max_threads(), repeats);
  std::printf("%-18s %13s %13s %9s\n", "kernel", "serial", "parallel", "speedup");

  // Dataset generation.
  Dataset data;
  {
    Dataset serial_data, parallel_data;
    const double ms_serial =
        time_ms([&] { serial_data = generate(synth, ExecPolicy::serial).first; }, repeats);
    const double ms_parallel =
        time_ms([&] { parallel_data = generate(synth, ExecPolicy::parallel).first; }, repeats);
    bool same = serial_data.size() == parallel_data.size();
    for (std::size_t i = 0; same && i < serial_data.size(); ++i) {
      same = serial_data.samples[i].items == parallel_data.samples[i].items &&
             serial_data.samples[i].labels == parallel_data.samples[i].labels;
    }
    row("generate", ms_serial, ms_parallel, same);
    data = std::move(parallel_data);
  }

  const RerankerParams params = init_params(model_cfg);

  // Full-objective batch gradients over all lists.
  {
    std::vector<std::size_t> indices(data.size());
    std::vector<int> swap_ks(data.size());
    Rng rng(3);
    for (std::size_t i = 0; i < data.size(); ++i) {
      indices[i] = i;
      swap_ks[i] = draw_swap_index(rng, data.samples[i].size());
    }
    BatchGradResult serial_result, parallel_result;
    const double ms_serial = time_ms(
        [&] {
          serial_result = batch_gradient(params, data, indices, swap_ks, {}, ExecPolicy::serial);
        },
        repeats);
    const double ms_parallel = time_ms(
        [&] {
          parallel_result =
              batch_gradient(params, data, indices, swap_ks, {}, ExecPolicy::parallel);
        },
        repeats);
    row("batch_gradient", ms_serial, ms_parallel,
        serial_result.grad == parallel_result.grad &&
            serial_result.mean_total == parallel_result.mean_total);
  }

  // Metric evaluation.
  {
    MetricsReport serial_report, parallel_report;
    EvaluateOptions serial_options, parallel_options;
    serial_options.policy = ExecPolicy::serial;
    parallel_options.policy = ExecPolicy::parallel;
    const double ms_serial =
        time_ms([&] { serial_report = evaluate(params, data, serial_options); }, repeats);
    const double ms_parallel =
        time_ms([&] { parallel_report = evaluate(params, data, parallel_options); }, repeats);
    row("evaluate", ms_serial, ms_parallel,
        serial_report.auc == parallel_report.auc && serial_report.ndcg == parallel_report.ndcg);
  }

  // Obedience with every adjacent swap checked.
  {
    double serial_rate = 0.0, parallel_rate = 0.0;
    const double ms_serial = time_ms(
        [&] { serial_rate = p2_obedience(params, data, 1, 0, true, ExecPolicy::serial); },
        repeats);
    const double ms_parallel = time_ms(
        [&] { parallel_rate = p2_obedience(params, data, 1, 0, true, ExecPolicy::parallel); },
        repeats);
    row("p2_strict", ms_serial, ms_parallel, serial_rate == parallel_rate);
  }

  return 0;
}
