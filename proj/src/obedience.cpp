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
#include "rerank/obedience.hpp"

#include "rerank/errors.hpp"
#include "rerank/rng.hpp"

#include "json.hpp"

#include <sstream>

namespace rerank {

double p1_obedience(const RerankerParams& params, const Dataset& data, ExecPolicy policy) {
  if (data.empty()) throw ContractViolation("p1_obedience: empty dataset");
  std::vector<char> obeyed(data.size(), 0);
  for_each_index(policy, data.size(), [&](std::size_t idx) {
    const ListSample& sample = data.samples[idx];
    const ScoreVector s = forward(params, sample.items, sample.user, sample.init_pos);
    const PositionVector p_prime = scores_to_positions(s, sample.init_pos);
    const ScoreVector s_prime = forward(params, sample.items, sample.user, p_prime);
    const PositionVector p_second = scores_to_positions(s_prime, p_prime);
    obeyed[idx] = (p_second == p_prime) ? 1 : 0;
  });
  std::size_t count = 0;
  for (char c : obeyed) count += static_cast<std::size_t>(c);
  return static_cast<double>(count) / static_cast<double>(data.size());
}

double p2_obedience(const RerankerParams& params, const Dataset& data, int trials,
                    std::uint64_t eval_seed, bool strict, ExecPolicy policy) {
  if (data.empty()) throw ContractViolation("p2_obedience: empty dataset");
  if (!strict && trials < 1) throw ContractViolation("p2_obedience: trials must be >= 1");
  std::vector<char> obeyed(data.size(), 0);
  for_each_index(policy, data.size(), [&](std::size_t idx) {
    const ListSample& sample = data.samples[idx];
    const std::size_t n = sample.size();
    if (n < 2) {  // only one ordering exists
      obeyed[idx] = 1;
      return;
    }
    const ScoreVector s = forward(params, sample.items, sample.user, sample.init_pos);
    const PositionVector p_prime = scores_to_positions(s, sample.init_pos);
    bool ok = true;
    auto check_swap = [&](int k) {
      const PositionVector p_hat = adjacent_swap(sample.init_pos, k);
      const ScoreVector s_hat = forward(params, sample.items, sample.user, p_hat);
      return scores_to_positions(s_hat, p_hat) == p_prime;
    };
    if (strict) {
      for (int k = 0; ok && static_cast<std::size_t>(k) <= n - 2; ++k) ok = check_swap(k);
    } else {
      Rng rng(mix_seed(eval_seed, kStreamObedience, idx));
      for (int t = 0; ok && t < trials; ++t) {
        ok = check_swap(rng.uniform_int(0, static_cast<int>(n) - 2));
      }
    }
    obeyed[idx] = ok ? 1 : 0;
  });
  std::size_t count = 0;
  for (char c : obeyed) count += static_cast<std::size_t>(c);
  return static_cast<double>(count) / static_cast<double>(data.size());
}

ObedienceReport obedience_report(const RerankerParams& params, const Dataset& data, int trials,
                                 std::uint64_t eval_seed, bool strict, ExecPolicy policy) {
  ObedienceReport report;
  report.n_lists = data.size();
  report.p2_trials_per_list = trials;
  report.eval_seed = eval_seed;
  report.strict_p2 = strict;
  report.p1_rate = p1_obedience(params, data, policy);
  report.p2_rate = p2_obedience(params, data, trials, eval_seed, strict, policy);
  return report;
}

std::string obedience_to_json(const ObedienceReport& report, int indent) {
  nlohmann::json doc{{"p1_rate", report.p1_rate},
                     {"p2_rate", report.p2_rate},
                     {"n_lists", report.n_lists},
                     {"p2_trials_per_list", report.p2_trials_per_list},
                     {"eval_seed", report.eval_seed},
                     {"strict_p2", report.strict_p2}};
  return doc.dump(indent);
}

std::string obedience_csv_header() {
  return "p1_rate,p2_rate,n_lists,p2_trials_per_list,eval_seed,strict_p2";
}

std::string obedience_csv_row(const ObedienceReport& report) {
  std::ostringstream out;
  out.precision(6);
  out << std::fixed << report.p1_rate << ',' << report.p2_rate << ',' << report.n_lists << ','
      << report.p2_trials_per_list << ',' << report.eval_seed << ','
      << (report.strict_p2 ? 1 : 0);
  return out.str();
}

}  // namespace rerank
