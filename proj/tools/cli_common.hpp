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
#ifndef RERANK_TOOLS_CLI_COMMON_HPP_
#define RERANK_TOOLS_CLI_COMMON_HPP_

#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "rerank/errors.hpp"

#include "json.hpp"

namespace rerank::cli {

inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

inline std::string file_hash_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open for hashing: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

/// SOURCE_DATE_EPOCH, when set, pins timestamps and wall-clock fields so rerun
/// outputs are byte-identical.
inline bool deterministic_time() { return std::getenv("SOURCE_DATE_EPOCH") != nullptr; }

inline std::string now_iso_utc() {
  std::time_t t;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  } else {
    t = std::time(nullptr);
  }
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

/// Relative output paths land under RERANK_OUT_DIR when it is set.
inline std::string resolve_out(const std::string& path) {
  if (path.empty()) return path;
  std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  if (const char* dir = std::getenv("RERANK_OUT_DIR")) {
    p = std::filesystem::path(dir) / p;
  }
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  return p.string();
}

inline void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot open for writing: " + tmp);
    out << content;
    if (!out) throw ParseError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

inline std::string manifest_path_for(const std::string& out_path) {
  std::filesystem::path p(out_path);
  p.replace_extension(".manifest.json");
  return p.string();
}

/// Writes the run manifest (atomically) before any result file. The body must
/// already carry command/config/inputs/outputs; timestamp and tool fields are
/// added here.
inline std::string write_manifest(const std::string& out_path, nlohmann::json body) {
  const std::string path = manifest_path_for(out_path);
  body["timestamp_utc"] = now_iso_utc();
  body["tool"] = "rerank";
  write_text_atomic(path, body.dump(2) + "\n");
  return path;
}

inline nlohmann::json input_record(const std::string& path) {
  return {{"path", path}, {"fnv1a64", file_hash_hex(path)}};
}

}  // namespace rerank::cli

#endif  // RERANK_TOOLS_CLI_COMMON_HPP_
