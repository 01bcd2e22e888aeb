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
#include <fstream>

#include "rerank/errors.hpp"
#include "rerank/model.hpp"

#include "json.hpp"

namespace rerank {

namespace {
constexpr const char* kCheckpointFormat = "rerank-checkpoint-v1";
}

void save_checkpoint(const RerankerParams& params, const std::string& path) {
  const ParamLayout layout(params.cfg);
  nlohmann::json doc;
  doc["format"] = kCheckpointFormat;
  doc["config"] = {{"d_item", params.cfg.d_item},
                   {"d_user", params.cfg.d_user},
                   {"d_model", params.cfg.d_model},
                   {"n_heads", params.cfg.n_heads},
                   {"n_blocks", params.cfg.n_blocks},
                   {"mlp_hidden", params.cfg.mlp_hidden},
                   {"n_max", params.cfg.n_max},
                   {"head_mode", to_string(params.cfg.head_mode)},
                   {"position_mode", to_string(params.cfg.position_mode)},
                   {"seed", params.cfg.seed}};
  nlohmann::json arrays = nlohmann::json::object();
  for (const TensorInfo& t : layout.tensors()) {
    arrays[t.name] = std::vector<double>(params.flat.begin() + static_cast<long>(t.offset),
                                         params.flat.begin() +
                                             static_cast<long>(t.offset + t.count()));
  }
  doc["arrays"] = std::move(arrays);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError("cannot open for writing: " + path);
  out << doc.dump(2) << '\n';
  if (!out) throw ParseError("write failed: " + path);
}

RerankerParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  try {
    if (doc.value("format", "") != kCheckpointFormat) {
      throw ParseError(path + ": format: not a checkpoint file");
    }
    const nlohmann::json& c = doc.at("config");
    RerankerConfig cfg;
    cfg.d_item = c.at("d_item").get<int>();
    cfg.d_user = c.at("d_user").get<int>();
    cfg.d_model = c.at("d_model").get<int>();
    cfg.n_heads = c.at("n_heads").get<int>();
    cfg.n_blocks = c.at("n_blocks").get<int>();
    cfg.mlp_hidden = c.at("mlp_hidden").get<std::vector<int>>();
    cfg.n_max = c.at("n_max").get<int>();
    cfg.head_mode = head_mode_from_string(c.at("head_mode").get<std::string>());
    cfg.position_mode = position_mode_from_string(c.at("position_mode").get<std::string>());
    cfg.seed = c.at("seed").get<std::uint64_t>();
    const ParamLayout layout(cfg);
    RerankerParams params{cfg, std::vector<double>(layout.total_size(), 0.0)};
    const nlohmann::json& arrays = doc.at("arrays");
    for (const TensorInfo& t : layout.tensors()) {
      if (!arrays.contains(t.name)) {
        throw ParseError(path + ": arrays: missing tensor " + t.name);
      }
      const auto values = arrays.at(t.name).get<std::vector<double>>();
      if (values.size() != t.count()) {
        throw ParseError(path + ": arrays: tensor " + t.name + " has " +
                         std::to_string(values.size()) + " values, expected " +
                         std::to_string(t.count()));
      }
      std::copy(values.begin(), values.end(), params.flat.begin() + static_cast<long>(t.offset));
    }
    return params;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace rerank
