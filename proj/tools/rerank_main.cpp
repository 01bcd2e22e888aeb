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
#include <algorithm>
#include <array>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "rerank/data.hpp"
#include "rerank/losses.hpp"
#include "rerank/metrics.hpp"
#include "rerank/model.hpp"
#include "rerank/obedience.hpp"
#include "rerank/training.hpp"

#include "cli_common.hpp"

namespace {

using namespace rerank;
using nlohmann::json;

constexpr const char* kMetricColumns[] = {"auc",         "ndcg",         "map_5",
                                          "map_10",      "map_15",       "map_20",
                                          "precision_5", "precision_10", "precision_15",
                                          "precision_20"};

// --config JSON supplies defaults; explicit flags override them.
json prescan_config(int argc, char** argv) {
  std::string path;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) {
      path = argv[i + 1];
    } else if (arg.rfind("--config=", 0) == 0) {
      path = arg.substr(9);
    }
  }
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file: " + path);
  try {
    json doc;
    in >> doc;
    return doc;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

template <class T>
T jget(const json& config, const std::string& key, T fallback) {
  return config.value(key, fallback);
}

std::vector<std::string> argv_echo(int argc, char** argv) {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(argc));
  for (int i = 0; i < argc; ++i) out.emplace_back(argv[i]);
  return out;
}

struct ModelFlags {
  int d_model = 32;
  int n_heads = 2;
  int n_blocks = 1;
  std::vector<int> mlp_hidden = {32};
  int n_max = 0;  // 0: longest list in the data
  std::string head_mode = "softmax_list";
  std::string position_mode = "learned_add";
};

void add_model_flags(CLI::App* cmd, ModelFlags& flags, const json& config) {
  flags.d_model = jget(config, "d_model", flags.d_model);
  flags.n_heads = jget(config, "n_heads", flags.n_heads);
  flags.n_blocks = jget(config, "n_blocks", flags.n_blocks);
  flags.mlp_hidden = jget(config, "mlp_hidden", flags.mlp_hidden);
  flags.n_max = jget(config, "n_max", flags.n_max);
  flags.head_mode = jget(config, "head_mode", flags.head_mode);
  flags.position_mode = jget(config, "position_mode", flags.position_mode);
  cmd->add_option("--d-model", flags.d_model, "embedding width");
  cmd->add_option("--n-heads", flags.n_heads, "attention heads");
  cmd->add_option("--n-blocks", flags.n_blocks, "self-attention blocks");
  cmd->add_option("--mlp-hidden", flags.mlp_hidden, "head hidden widths")->delimiter(',');
  cmd->add_option("--n-max", flags.n_max, "position table depth (default: longest list)");
  cmd->add_option("--head", flags.head_mode, "softmax_list | sigmoid_item");
  cmd->add_option("--positions", flags.position_mode, "learned_add | off");
}

RerankerConfig build_model_config(const ModelFlags& flags, const Dataset& data,
                                  const Dataset* valid, std::uint64_t seed) {
  RerankerConfig cfg;
  cfg.d_item = data.d_item;
  cfg.d_user = data.d_user;
  cfg.d_model = flags.d_model;
  cfg.n_heads = flags.n_heads;
  cfg.n_blocks = flags.n_blocks;
  cfg.mlp_hidden = flags.mlp_hidden;
  cfg.head_mode = head_mode_from_string(flags.head_mode);
  cfg.position_mode = position_mode_from_string(flags.position_mode);
  cfg.seed = seed;
  std::size_t longest = 1;
  for (const ListSample& s : data.samples) longest = std::max(longest, s.size());
  if (valid != nullptr) {
    for (const ListSample& s : valid->samples) longest = std::max(longest, s.size());
  }
  cfg.n_max = flags.n_max > 0 ? flags.n_max : static_cast<int>(longest);
  validate_config(cfg);
  return cfg;
}

json model_config_json(const RerankerConfig& cfg) {
  return {{"d_item", cfg.d_item},       {"d_user", cfg.d_user},
          {"d_model", cfg.d_model},     {"n_heads", cfg.n_heads},
          {"n_blocks", cfg.n_blocks},   {"mlp_hidden", cfg.mlp_hidden},
          {"n_max", cfg.n_max},         {"head_mode", to_string(cfg.head_mode)},
          {"position_mode", to_string(cfg.position_mode)},
          {"seed", cfg.seed}};
}

std::optional<double> metric_column(const MetricsReport& report, const std::string& name) {
  if (name == "auc") return report.auc;
  if (name == "ndcg") return report.ndcg;
  if (name.rfind("map_", 0) == 0) {
    const int k = std::stoi(name.substr(4));
    if (report.map_at.count(k) != 0) return report.map_at.at(k);
    return std::nullopt;
  }
  const int k = std::stoi(name.substr(10));
  if (report.precision_at.count(k) != 0) return report.precision_at.at(k);
  return std::nullopt;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

// Raw per-seed files carry full precision so downstream recomputation is exact.
std::string fmt_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void print_metrics_table(const MetricsReport& metrics) {
  std::printf("%8s", "");
  for (const char* col : kMetricColumns) std::printf(" %12s", col);
  std::printf("\n%8s", "value");
  for (const char* col : kMetricColumns) {
    const auto v = metric_column(metrics, col);
    std::printf(" %12s", v ? fmt(*v).c_str() : "-");
  }
  std::printf("\n");
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
  SynthConfig synth;
  std::string out;
  bool serial = false;
  std::vector<std::string> argv;
};

int cmd_generate(const GenerateArgs& args) {
  const std::string out_path = cli::resolve_out(args.out);
  json config{{"lists", args.synth.n_lists},
              {"n", args.synth.n},
              {"d_item", args.synth.d_item},
              {"d_user", args.synth.d_user},
              {"context_weight", args.synth.context_weight},
              {"ranker_noise", args.synth.ranker_noise},
              {"click_scale", args.synth.click_scale},
              {"seed", args.synth.seed}};
  json manifest{{"command", "generate"},
                {"argv", args.argv},
                {"config", config},
                {"seed", args.synth.seed},
                {"inputs", json::object()},
                {"outputs", json::array({out_path})}};
  cli::write_manifest(out_path, manifest);

  auto [data, truth] =
      generate(args.synth, args.serial ? ExecPolicy::serial : ExecPolicy::parallel);
  save(data, out_path);

  std::size_t clicks = 0, items = 0;
  for (const ListSample& s : data.samples) {
    for (int y : s.labels) clicks += static_cast<std::size_t>(y);
    items += s.size();
  }
  std::printf("wrote %zu lists (n=%d, click rate %.4f) to %s\n", data.size(), args.synth.n,
              items > 0 ? static_cast<double>(clicks) / static_cast<double>(items) : 0.0,
              out_path.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string data_path, valid_path, out, log_path;
  TrainConfig train_cfg;
  ModelFlags model_flags;
  bool p1_enabled = true, p2_enabled = true;
  double w_p1 = 1.0, w_p2 = 1.0;
  bool grid = false;
  bool serial = false;
  std::uint64_t seed = 0;
  std::vector<std::string> argv;
};

json train_config_json(const TrainArgs& args, const TrainConfig& cfg,
                       const RerankerConfig& model_cfg) {
  return {{"epochs", cfg.epochs},
          {"batch_size", cfg.batch_size},
          {"lr", cfg.learning_rate},
          {"lr_grid", cfg.lr_grid},
          {"grid", args.grid},
          {"adam_beta1", cfg.adam_beta1},
          {"adam_beta2", cfg.adam_beta2},
          {"adam_eps", cfg.adam_eps},
          {"seed", cfg.seed},
          {"w_p1", cfg.principle_weights.p1},
          {"w_p2", cfg.principle_weights.p2},
          {"eval_every", cfg.eval_every},
          {"keep_best", cfg.keep_best_checkpoint},
          {"p2_trials", cfg.p2_trials},
          {"model", model_config_json(model_cfg)}};
}

int cmd_train(TrainArgs args) {
  const Dataset data = load(args.data_path);
  Dataset valid;
  const bool has_valid = !args.valid_path.empty();
  if (has_valid) valid = load(args.valid_path);

  args.train_cfg.seed = args.seed;
  args.train_cfg.policy = args.serial ? ExecPolicy::serial : ExecPolicy::parallel;
  args.train_cfg.principle_weights.p1 = args.p1_enabled ? args.w_p1 : 0.0;
  args.train_cfg.principle_weights.p2 = args.p2_enabled ? args.w_p2 : 0.0;
  const RerankerConfig model_cfg =
      build_model_config(args.model_flags, data, has_valid ? &valid : nullptr, args.seed);

  const std::string out_path = cli::resolve_out(args.out);
  std::string log_path = args.log_path;
  if (log_path.empty()) {
    std::filesystem::path p(out_path);
    p.replace_extension(".trainlog.csv");
    log_path = p.string();
  } else {
    log_path = cli::resolve_out(log_path);
  }

  json manifest{{"command", "train"},
                {"argv", args.argv},
                {"config", train_config_json(args, args.train_cfg, model_cfg)},
                {"seed", args.seed},
                {"inputs", json::object()},
                {"outputs", json::array({out_path, log_path})}};
  manifest["inputs"]["data"] = cli::input_record(args.data_path);
  if (has_valid) manifest["inputs"]["valid"] = cli::input_record(args.valid_path);

  RerankerParams params;
  TrainLog log;
  if (args.grid) {
    GridSearchResult grid = grid_search(args.train_cfg, model_cfg, data, valid);
    json runs = json::array();
    for (const GridRun& run : grid.runs) {
      json entry{{"lr", run.lr}, {"selected", run.selected}};
      if (run.valid.ndcg) entry["valid_ndcg"] = *run.valid.ndcg;
      if (run.valid.auc) entry["valid_auc"] = *run.valid.auc;
      runs.push_back(entry);
      std::printf("grid lr=%-8g valid ndcg=%s auc=%s%s\n", run.lr,
                  run.valid.ndcg ? fmt(*run.valid.ndcg).c_str() : "-",
                  run.valid.auc ? fmt(*run.valid.auc).c_str() : "-",
                  run.selected ? "  <- selected" : "");
    }
    manifest["grid_runs"] = runs;
    manifest["config"]["lr"] = grid.best_config.learning_rate;
    params = std::move(grid.best_params);
    for (GridRun& run : grid.runs) {
      if (run.selected) log = std::move(run.log);
    }
  } else {
    std::tie(params, log) = train(args.train_cfg, model_cfg, data, has_valid ? &valid : nullptr);
    for (const EpochRecord& r : log.epochs) {
      std::printf("epoch %d/%d  loss %.6f", r.epoch, args.train_cfg.epochs, r.mean_total);
      if (r.valid_metrics && r.valid_metrics->ndcg) {
        std::printf("  valid ndcg %.6f", *r.valid_metrics->ndcg);
      }
      std::printf("\n");
    }
  }

  const std::string manifest_path = cli::write_manifest(out_path, manifest);
  save_checkpoint(params, out_path);
  TrainLog log_for_csv = log;
  if (cli::deterministic_time()) {
    for (EpochRecord& r : log_for_csv.epochs) r.wall_clock_sec = 0.0;
  }
  cli::write_text_atomic(log_path, trainlog_csv(log_for_csv, manifest_path));
  std::printf("checkpoint: %s\ntrainlog:   %s\n", out_path.c_str(), log_path.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
  std::string ckpt, data_path;
  std::string metrics_out = "metrics.json";
  std::string obedience_out = "obedience.json";
  std::string metrics_csv = "metrics.csv";
  std::string obedience_csv = "obedience.csv";
  int p2_trials = 1;
  bool strict_p2 = false;
  std::uint64_t eval_seed = 0;
  bool auc_pooled = false;
  bool serial = false;
  std::vector<std::string> argv;
};

int cmd_evaluate(const EvaluateArgs& args) {
  const RerankerParams params = load_checkpoint(args.ckpt);
  const Dataset data = load(args.data_path);
  const ExecPolicy policy = args.serial ? ExecPolicy::serial : ExecPolicy::parallel;

  const std::string metrics_path = cli::resolve_out(args.metrics_out);
  const std::string obedience_path = cli::resolve_out(args.obedience_out);
  const std::string metrics_csv_path = cli::resolve_out(args.metrics_csv);
  const std::string obedience_csv_path = cli::resolve_out(args.obedience_csv);

  json manifest{{"command", "evaluate"},
                {"argv", args.argv},
                {"config",
                 {{"p2_trials", args.p2_trials},
                  {"strict_p2", args.strict_p2},
                  {"eval_seed", args.eval_seed},
                  {"auc_pooled", args.auc_pooled}}},
                {"seed", args.eval_seed},
                {"inputs", json::object()},
                {"outputs", json::array({metrics_path, obedience_path, metrics_csv_path,
                                         obedience_csv_path})}};
  manifest["inputs"]["checkpoint"] = cli::input_record(args.ckpt);
  manifest["inputs"]["data"] = cli::input_record(args.data_path);
  const std::string manifest_path = cli::write_manifest(metrics_path, manifest);

  EvaluateOptions options;
  options.pooled_auc = args.auc_pooled;
  options.policy = policy;
  const MetricsReport metrics = evaluate(params, data, options);
  const ObedienceReport obedience = obedience_report(params, data, args.p2_trials,
                                                     args.eval_seed, args.strict_p2, policy);

  auto metrics_doc = json::parse(metrics_to_json(metrics));
  metrics_doc["manifest"] = manifest_path;
  cli::write_text_atomic(metrics_path, metrics_doc.dump(2) + "\n");
  auto obedience_doc = json::parse(obedience_to_json(obedience));
  obedience_doc["manifest"] = manifest_path;
  cli::write_text_atomic(obedience_path, obedience_doc.dump(2) + "\n");
  cli::write_text_atomic(metrics_csv_path, "# manifest: " + manifest_path + "\n" +
                                               metrics_csv_header(metrics) + "\n" +
                                               metrics_csv_row(metrics) + "\n");
  cli::write_text_atomic(obedience_csv_path, "# manifest: " + manifest_path + "\n" +
                                                 obedience_csv_header() + "\n" +
                                                 obedience_csv_row(obedience) + "\n");

  print_metrics_table(metrics);
  std::printf("p1 obedience %.4f   p2 obedience %.4f   (n=%zu, trials=%d%s)\n",
              obedience.p1_rate, obedience.p2_rate, obedience.n_lists,
              obedience.p2_trials_per_list, obedience.strict_p2 ? ", strict" : "");
  return 0;
}

// ---------------------------------------------------------------------------
// ablate

struct AblateArgs {
  std::string data_path, out;
  std::string raw_out;
  std::vector<double> fractions = {0.8, 0.1, 0.1};
  int n_seeds = 3;
  std::uint64_t base_seed = 0;
  TrainConfig train_cfg;
  ModelFlags model_flags;
  double w_p1 = 1.0, w_p2 = 1.0;
  int p2_trials = 1;
  bool serial = false;
  std::vector<std::string> argv;
};

struct VariantOutcome {
  std::string name;
  std::vector<MetricsReport> metrics;      // per seed
  std::vector<ObedienceReport> obedience;  // per seed
};

struct ColumnStats {
  std::optional<double> mean, stddev;
};

ColumnStats column_stats(const VariantOutcome& variant, const std::string& column) {
  std::vector<double> values;
  for (const MetricsReport& report : variant.metrics) {
    if (const auto v = metric_column(report, column)) values.push_back(*v);
  }
  if (values.empty()) return {};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  return {mean, std::sqrt(var)};
}

int cmd_ablate(AblateArgs args) {
  if (args.fractions.size() != 3) throw ConfigError("ablate: --fractions needs 3 values");
  if (args.n_seeds < 1) throw ConfigError("ablate: --seeds must be >= 1");
  const Dataset all = load(args.data_path);
  auto [train_split, valid_split, test_split] =
      split(all, {args.fractions[0], args.fractions[1], args.fractions[2]}, args.base_seed);
  if (train_split.empty() || test_split.empty()) {
    throw ConfigError("ablate: train and test splits must be nonempty");
  }

  args.train_cfg.policy = args.serial ? ExecPolicy::serial : ExecPolicy::parallel;
  const std::string out_path = cli::resolve_out(args.out);
  std::string raw_path = args.raw_out;
  if (raw_path.empty()) {
    std::filesystem::path p(out_path);
    p.replace_extension(".raw.csv");
    raw_path = p.string();
  } else {
    raw_path = cli::resolve_out(raw_path);
  }

  const RerankerConfig model_template =
      build_model_config(args.model_flags, train_split, &test_split, args.base_seed);

  json manifest{{"command", "ablate"},
                {"argv", args.argv},
                {"config",
                 {{"fractions", args.fractions},
                  {"seeds", args.n_seeds},
                  {"base_seed", args.base_seed},
                  {"epochs", args.train_cfg.epochs},
                  {"batch_size", args.train_cfg.batch_size},
                  {"lr", args.train_cfg.learning_rate},
                  {"w_p1", args.w_p1},
                  {"w_p2", args.w_p2},
                  {"p2_trials", args.p2_trials},
                  {"model", model_config_json(model_template)}}},
                {"seed", args.base_seed},
                {"inputs", json::object()},
                {"outputs", json::array({out_path, raw_path})}};
  manifest["inputs"]["data"] = cli::input_record(args.data_path);
  const std::string manifest_path = cli::write_manifest(out_path, manifest);

  const std::array<std::pair<std::string, PrincipleWeights>, 4> variants{{
      {"baseline", {0.0, 0.0}},
      {"p1", {args.w_p1, 0.0}},
      {"p2", {0.0, args.w_p2}},
      {"both", {args.w_p1, args.w_p2}},
  }};

  std::vector<VariantOutcome> outcomes;
  for (const auto& [name, weights] : variants) {
    VariantOutcome outcome;
    outcome.name = name;
    for (int s = 0; s < args.n_seeds; ++s) {
      const std::uint64_t seed = args.base_seed + static_cast<std::uint64_t>(s);
      TrainConfig cfg = args.train_cfg;
      cfg.seed = seed;
      cfg.principle_weights = weights;
      RerankerConfig model_cfg = model_template;
      model_cfg.seed = seed;  // shared across variants for the same trial
      auto [params, log] = train(cfg, model_cfg, train_split);
      EvaluateOptions eval_options;
      eval_options.policy = cfg.policy;
      outcome.metrics.push_back(evaluate(params, test_split, eval_options));
      outcome.obedience.push_back(obedience_report(params, test_split, args.p2_trials,
                                                   args.base_seed, false, cfg.policy));
      std::printf("variant %-8s seed %llu done\n", name.c_str(),
                  static_cast<unsigned long long>(seed));
    }
    outcomes.push_back(std::move(outcome));
  }

  // Raw per-seed rows.
  std::string raw_csv = "# manifest: " + manifest_path + "\nvariant,seed";
  for (const char* col : kMetricColumns) raw_csv += std::string(",") + col;
  raw_csv += ",p1_obedience,p2_obedience\n";
  for (const VariantOutcome& outcome : outcomes) {
    for (int s = 0; s < args.n_seeds; ++s) {
      raw_csv += outcome.name + "," +
                 std::to_string(args.base_seed + static_cast<std::uint64_t>(s));
      const MetricsReport& m = outcome.metrics[static_cast<std::size_t>(s)];
      for (const char* col : kMetricColumns) {
        const auto v = metric_column(m, col);
        raw_csv += ",";
        if (v) raw_csv += fmt_full(*v);
      }
      const ObedienceReport& o = outcome.obedience[static_cast<std::size_t>(s)];
      raw_csv += "," + fmt_full(o.p1_rate) + "," + fmt_full(o.p2_rate) + "\n";
    }
  }
  cli::write_text_atomic(raw_path, raw_csv);

  // Summary: means, standard deviations, improvements over the baseline, and
  // the one-principle/both-principles improvement ratios.
  const VariantOutcome& baseline = outcomes[0];
  auto mean_obedience = [](const VariantOutcome& outcome) {
    double p1 = 0.0, p2 = 0.0;
    for (const ObedienceReport& o : outcome.obedience) {
      p1 += o.p1_rate;
      p2 += o.p2_rate;
    }
    const double n = static_cast<double>(outcome.obedience.size());
    return std::make_pair(p1 / n, p2 / n);
  };

  std::string csv = "# manifest: " + manifest_path + "\nvariant,n_seeds";
  for (const char* col : kMetricColumns) csv += std::string(",mean_") + col;
  for (const char* col : kMetricColumns) csv += std::string(",std_") + col;
  for (const char* col : kMetricColumns) csv += std::string(",impr_") + col + "_pct";
  csv += ",p1_obedience_mean,p2_obedience_mean\n";

  std::map<std::string, std::map<std::string, std::optional<double>>> improvements;
  for (const VariantOutcome& outcome : outcomes) {
    csv += outcome.name + "," + std::to_string(args.n_seeds);
    for (const char* col : kMetricColumns) {
      const ColumnStats stats = column_stats(outcome, col);
      csv += ",";
      if (stats.mean) csv += fmt(*stats.mean);
    }
    for (const char* col : kMetricColumns) {
      const ColumnStats stats = column_stats(outcome, col);
      csv += ",";
      if (stats.stddev) csv += fmt(*stats.stddev);
    }
    for (const char* col : kMetricColumns) {
      const ColumnStats base = column_stats(baseline, col);
      const ColumnStats stats = column_stats(outcome, col);
      csv += ",";
      std::optional<double> impr;
      if (base.mean && stats.mean && *base.mean != 0.0) {
        impr = (*stats.mean - *base.mean) / *base.mean * 100.0;
        csv += fmt(*impr);
      }
      improvements[outcome.name][col] = impr;
    }
    const auto [p1_mean, p2_mean] = mean_obedience(outcome);
    csv += "," + fmt(p1_mean) + "," + fmt(p2_mean) + "\n";
  }
  for (const char* ratio_of_cstr : {"p1", "p2"}) {
    const std::string ratio_of = ratio_of_cstr;
    csv += "ratio_" + ratio_of + "_over_both," + std::to_string(args.n_seeds);
    std::string ratio_cells;
    for (const char* col : kMetricColumns) {
      ratio_cells += ",";
      const auto single = improvements[ratio_of][col];
      const auto both = improvements["both"][col];
      if (single && both && *both != 0.0) ratio_cells += fmt(*single / *both * 100.0);
    }
    csv += ratio_cells;
    for (std::size_t i = 0; i < std::size(kMetricColumns); ++i) csv += ",";
    csv += ",,,\n";
  }
  cli::write_text_atomic(out_path, csv);

  for (const VariantOutcome& outcome : outcomes) {
    const ColumnStats ndcg = column_stats(outcome, "ndcg");
    const auto [p1_mean, p2_mean] = mean_obedience(outcome);
    std::printf("%-8s ndcg %s (+/- %s)  p1 %.4f  p2 %.4f\n", outcome.name.c_str(),
                ndcg.mean ? fmt(*ndcg.mean).c_str() : "-",
                ndcg.stddev ? fmt(*ndcg.stddev).c_str() : "-", p1_mean, p2_mean);
  }
  std::printf("summary: %s\nraw:     %s\n", out_path.c_str(), raw_path.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradcheckArgs {
  int n = 4;
  int d_item = 3;
  int d_user = 2;
  ModelFlags model_flags;
  std::uint64_t seed = 0;
  int swap_k = 1;
  double h = 1e-5;
  double threshold = 1e-4;
  double w_p1 = 1.0, w_p2 = 1.0;
  bool corrupt = false;
};

int cmd_gradcheck(const GradcheckArgs& args) {
  SynthConfig synth;
  synth.n_lists = 1;
  synth.n = args.n;
  synth.d_item = args.d_item;
  synth.d_user = args.d_user;
  synth.seed = args.seed;
  const Dataset data = generate(synth).first;

  RerankerConfig cfg;
  cfg.d_item = args.d_item;
  cfg.d_user = args.d_user;
  cfg.d_model = args.model_flags.d_model;
  cfg.n_heads = args.model_flags.n_heads;
  cfg.n_blocks = args.model_flags.n_blocks;
  cfg.mlp_hidden = args.model_flags.mlp_hidden;
  cfg.n_max = args.model_flags.n_max > 0 ? args.model_flags.n_max : args.n;
  cfg.head_mode = head_mode_from_string(args.model_flags.head_mode);
  cfg.position_mode = position_mode_from_string(args.model_flags.position_mode);
  cfg.seed = args.seed;
  validate_config(cfg);

  const GradCheckReport report =
      gradient_check(cfg, data.samples[0], args.swap_k, args.h, args.threshold, args.corrupt,
                     {args.w_p1, args.w_p2});
  std::printf("%s  max_rel_err=%.3g at %s[%zu] (analytic=%.8g fd=%.8g, h=%g, threshold=%g, "
              "%zu params)\n",
              report.pass ? "PASS" : "FAIL", report.max_rel_err, report.worst_tensor.c_str(),
              report.worst_index, report.analytic_at_worst, report.fd_at_worst, report.h,
              report.threshold, report.n_params);
  return report.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"List re-ranker with consistency-regularized training"};
  app.require_subcommand(1);

  json config;
  try {
    config = prescan_config(argc, argv);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  std::string config_path_echo;
  app.add_option("--config", config_path_echo, "JSON file with defaults; flags override it");
  const auto argv_list = argv_echo(argc, argv);

  // generate ----------------------------------------------------------------
  GenerateArgs gen;
  gen.argv = argv_list;
  CLI::App* generate_cmd = app.add_subcommand("generate", "write a synthetic dataset");
  gen.synth.n_lists = jget<std::size_t>(config, "lists", gen.synth.n_lists);
  gen.synth.n = jget(config, "n", gen.synth.n);
  gen.synth.d_item = jget(config, "d_item", gen.synth.d_item);
  gen.synth.d_user = jget(config, "d_user", gen.synth.d_user);
  gen.synth.context_weight = jget(config, "context_weight", gen.synth.context_weight);
  gen.synth.ranker_noise = jget(config, "ranker_noise", gen.synth.ranker_noise);
  gen.synth.click_scale = jget(config, "click_scale", gen.synth.click_scale);
  gen.synth.seed = jget(config, "seed", gen.synth.seed);
  generate_cmd->add_option("--lists", gen.synth.n_lists, "number of lists")->required();
  generate_cmd->add_option("--n", gen.synth.n, "items per list");
  generate_cmd->add_option("--d-item", gen.synth.d_item, "item feature width");
  generate_cmd->add_option("--d-user", gen.synth.d_user, "user feature width");
  generate_cmd->add_option("--context-weight", gen.synth.context_weight,
                           "cross-item utility strength");
  generate_cmd->add_option("--ranker-noise", gen.synth.ranker_noise,
                           "initial-order noise sigma");
  generate_cmd->add_option("--click-scale", gen.synth.click_scale, "click logit scale");
  generate_cmd->add_option("--seed", gen.synth.seed, "generation seed");
  generate_cmd->add_option("-o,--out", gen.out, "output JSONL path")->required();
  generate_cmd->add_flag("--serial", gen.serial, "disable parallel generation");
  generate_cmd->add_option("--config", config_path_echo, "JSON config file");

  // train ---------------------------------------------------------------
  TrainArgs tr;
  tr.argv = argv_list;
  CLI::App* train_cmd = app.add_subcommand("train", "train a re-ranker");
  tr.train_cfg.epochs = jget(config, "epochs", 10);
  tr.train_cfg.batch_size = jget(config, "batch_size", tr.train_cfg.batch_size);
  tr.train_cfg.learning_rate = jget(config, "lr", tr.train_cfg.learning_rate);
  tr.train_cfg.lr_grid = jget(config, "lr_grid", tr.train_cfg.lr_grid);
  tr.train_cfg.eval_every = jget(config, "eval_every", tr.train_cfg.eval_every);
  tr.train_cfg.p2_trials = jget(config, "p2_trials", tr.train_cfg.p2_trials);
  tr.seed = jget(config, "seed", tr.seed);
  tr.w_p1 = jget(config, "w_p1", tr.w_p1);
  tr.w_p2 = jget(config, "w_p2", tr.w_p2);
  train_cmd->add_option("--data", tr.data_path, "training dataset (JSONL)")->required();
  train_cmd->add_option("--valid", tr.valid_path, "validation dataset (JSONL)");
  train_cmd->add_option("-o,--out", tr.out, "checkpoint output path")->required();
  train_cmd->add_option("--log", tr.log_path, "trainlog CSV path");
  train_cmd->add_option("--epochs", tr.train_cfg.epochs, "training epochs");
  train_cmd->add_option("--batch-size", tr.train_cfg.batch_size, "lists per update");
  CLI::Option* lr_opt = train_cmd->add_option("--lr", tr.train_cfg.learning_rate,
                                              "Adam learning rate");
  train_cmd->add_option("--lr-grid", tr.train_cfg.lr_grid, "rates tried with --grid")
      ->delimiter(',');
  CLI::Option* valid_opt = train_cmd->get_option("--valid");
  CLI::Option* grid_flag =
      train_cmd->add_flag("--grid", tr.grid, "pick the rate by validation ranking quality");
  grid_flag->needs(valid_opt);
  grid_flag->excludes(lr_opt);
  train_cmd->add_option("--seed", tr.seed, "training + initialization seed");
  train_cmd->add_flag("--p1,!--no-p1", tr.p1_enabled, "re-ranked-output consistency terms");
  train_cmd->add_flag("--p2,!--no-p2", tr.p2_enabled, "perturbed-input consistency terms");
  train_cmd->add_option("--w-p1", tr.w_p1, "weight of the convergence pair");
  train_cmd->add_option("--w-p2", tr.w_p2, "weight of the perturbation pair");
  train_cmd->add_option("--eval-every", tr.train_cfg.eval_every,
                        "validate every k epochs (0: last only)");
  train_cmd->add_flag("--keep-best", tr.train_cfg.keep_best_checkpoint,
                      "return the best-validation epoch");
  train_cmd->add_option("--p2-trials", tr.train_cfg.p2_trials,
                        "perturbation trials per list in validation");
  train_cmd->add_flag("--serial", tr.serial, "single-threaded execution");
  train_cmd->add_option("--config", config_path_echo, "JSON config file");
  add_model_flags(train_cmd, tr.model_flags, config);

  // evaluate ------------------------------------------------------------
  EvaluateArgs ev;
  ev.argv = argv_list;
  CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "metrics + obedience for a checkpoint");
  ev.p2_trials = jget(config, "p2_trials", ev.p2_trials);
  ev.eval_seed = jget(config, "eval_seed", ev.eval_seed);
  evaluate_cmd->add_option("--ckpt", ev.ckpt, "checkpoint path")->required();
  evaluate_cmd->add_option("--data", ev.data_path, "dataset to evaluate (JSONL)")->required();
  evaluate_cmd->add_option("--metrics-out", ev.metrics_out, "metrics JSON path");
  evaluate_cmd->add_option("--obedience-out", ev.obedience_out, "obedience JSON path");
  evaluate_cmd->add_option("--metrics-csv", ev.metrics_csv, "metrics CSV path");
  evaluate_cmd->add_option("--obedience-csv", ev.obedience_csv, "obedience CSV path");
  evaluate_cmd->add_option("--p2-trials", ev.p2_trials, "perturbation trials per list");
  evaluate_cmd->add_flag("--strict-p2", ev.strict_p2, "check every adjacent swap");
  evaluate_cmd->add_option("--eval-seed", ev.eval_seed, "perturbation sampling seed");
  evaluate_cmd->add_flag("--auc-pooled", ev.auc_pooled, "pool items across lists for AUC");
  evaluate_cmd->add_flag("--serial", ev.serial, "single-threaded execution");
  evaluate_cmd->add_option("--config", config_path_echo, "JSON config file");

  // ablate --------------------------------------------------------------
  AblateArgs ab;
  ab.argv = argv_list;
  CLI::App* ablate_cmd =
      app.add_subcommand("ablate", "baseline/p1/p2/both over shared seeds");
  ab.train_cfg.epochs = jget(config, "epochs", 10);
  ab.train_cfg.batch_size = jget(config, "batch_size", ab.train_cfg.batch_size);
  ab.train_cfg.learning_rate = jget(config, "lr", ab.train_cfg.learning_rate);
  ab.n_seeds = jget(config, "seeds", ab.n_seeds);
  ab.base_seed = jget(config, "seed", ab.base_seed);
  ab.w_p1 = jget(config, "w_p1", ab.w_p1);
  ab.w_p2 = jget(config, "w_p2", ab.w_p2);
  ab.p2_trials = jget(config, "p2_trials", ab.p2_trials);
  ablate_cmd->add_option("--data", ab.data_path, "dataset (JSONL), split internally")
      ->required();
  ablate_cmd->add_option("-o,--out", ab.out, "summary CSV path")->required();
  ablate_cmd->add_option("--raw-out", ab.raw_out, "per-seed raw CSV path");
  ablate_cmd->add_option("--fractions", ab.fractions, "train,valid,test fractions")
      ->delimiter(',');
  ablate_cmd->add_option("--seeds", ab.n_seeds, "number of repeated trials");
  ablate_cmd->add_option("--seed", ab.base_seed, "base seed (trial s uses seed+s)");
  ablate_cmd->add_option("--epochs", ab.train_cfg.epochs, "training epochs");
  ablate_cmd->add_option("--batch-size", ab.train_cfg.batch_size, "lists per update");
  ablate_cmd->add_option("--lr", ab.train_cfg.learning_rate, "Adam learning rate");
  ablate_cmd->add_option("--w-p1", ab.w_p1, "weight of the convergence pair");
  ablate_cmd->add_option("--w-p2", ab.w_p2, "weight of the perturbation pair");
  ablate_cmd->add_option("--p2-trials", ab.p2_trials, "perturbation trials per list");
  ablate_cmd->add_flag("--serial", ab.serial, "single-threaded execution");
  ablate_cmd->add_option("--config", config_path_echo, "JSON config file");
  add_model_flags(ablate_cmd, ab.model_flags, config);

  // gradcheck -------------------------------------------------------------
  GradcheckArgs gc;
  CLI::App* gradcheck_cmd =
      app.add_subcommand("gradcheck", "finite-difference check of the training gradient");
  gradcheck_cmd->set_help_flag("--help", "print help");  // frees -h for the probe step
  gc.model_flags.d_model = 8;
  gc.model_flags.mlp_hidden = {8};
  gradcheck_cmd->add_option("--n", gc.n, "list length");
  gradcheck_cmd->add_option("--d-item", gc.d_item, "item feature width");
  gradcheck_cmd->add_option("--d-user", gc.d_user, "user feature width");
  gradcheck_cmd->add_option("--seed", gc.seed, "seed for model and sample");
  gradcheck_cmd->add_option("--swap-k", gc.swap_k, "perturbed rank");
  gradcheck_cmd->add_option("-h,--h", gc.h, "finite-difference step");
  gradcheck_cmd->add_option("--threshold", gc.threshold, "max relative error to pass");
  gradcheck_cmd->add_option("--w-p1", gc.w_p1, "weight of the convergence pair");
  gradcheck_cmd->add_option("--w-p2", gc.w_p2, "weight of the perturbation pair");
  gradcheck_cmd->add_flag("--corrupt", gc.corrupt, "corrupt one coordinate (negative control)");
  gradcheck_cmd->add_option("--config", config_path_echo, "JSON config file");
  add_model_flags(gradcheck_cmd, gc.model_flags, config);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*generate_cmd) return cmd_generate(gen);
    if (*train_cmd) return cmd_train(std::move(tr));
    if (*evaluate_cmd) return cmd_evaluate(ev);
    if (*ablate_cmd) return cmd_ablate(std::move(ab));
    if (*gradcheck_cmd) return cmd_gradcheck(gc);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
