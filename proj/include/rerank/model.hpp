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
#ifndef RERANK_MODEL_HPP_
#define RERANK_MODEL_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rerank/core.hpp"

namespace rerank {

enum class HeadMode { softmax_list, sigmoid_item };
enum class PositionMode { learned_add, off };

std::string to_string(HeadMode mode);
std::string to_string(PositionMode mode);
HeadMode head_mode_from_string(const std::string& s);
PositionMode position_mode_from_string(const std::string& s);

/// List scorer architecture: item/user embeddings, learned additive position
/// signal, self-attention blocks with residual feed-forward, and an MLP head
/// emitting one score per item (softmax over the list by default).
struct RerankerConfig {
  int d_item = 0;
  int d_user = 0;
  int d_model = 32;
  int n_heads = 2;
  int n_blocks = 1;
  std::vector<int> mlp_hidden = {32};
  int n_max = 0;  // longest list the position table can address
  HeadMode head_mode = HeadMode::softmax_list;
  PositionMode position_mode = PositionMode::learned_add;
  std::uint64_t seed = 0;
};

/// Throws ConfigError when a field is out of its domain (d_model not divisible
/// by n_heads, nonpositive widths, ...).
void validate_config(const RerankerConfig& cfg);

/// One named slice of the flat parameter vector.
struct TensorInfo {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;   // output width for weights; 1 for vectors
  std::size_t cols = 0;   // fan-in for weights; length for vectors
  bool is_weight = false; // weights get fan-in initialization, the rest start at zero
  std::size_t count() const { return rows * cols; }
};

/// Canonical flat layout of all trainable arrays for a config. The tensor
/// order is fixed; it defines initialization draw order and checkpoint naming.
class ParamLayout {
 public:
  explicit ParamLayout(const RerankerConfig& cfg);
  std::size_t total_size() const { return total_; }
  const std::vector<TensorInfo>& tensors() const { return tensors_; }
  const TensorInfo* find(const std::string& name) const;
  /// Name of the tensor that owns flat index i.
  const TensorInfo& owner(std::size_t flat_index) const;

 private:
  std::vector<TensorInfo> tensors_;
  std::size_t total_ = 0;
};

/// All trainable parameters, stored flat. Gradients use the same layout.
struct RerankerParams {
  RerankerConfig cfg;
  std::vector<double> flat;

  std::span<double> tensor(const std::string& name);
  std::span<const double> tensor(const std::string& name) const;
};

/// Fan-in uniform initialization for affine weights, zeros for biases and the
/// position table (a fresh model is position-blind). Deterministic in cfg.seed.
RerankerParams init_params(const RerankerConfig& cfg);

/// Intermediate activations of one forward pass, kept for the backward pass.
struct BlockCache {
  Matrix h_in;        // n x d_model
  Matrix q, k, v;     // n x d_model
  std::vector<double> attn;  // n_heads * n * n softmax rows
  Matrix attn_heads;  // n x d_model, concatenated head outputs
  Matrix h_attn;      // n x d_model, after attention residual
  Matrix ff1_pre;     // n x d_ff
  Matrix ff1_act;     // n x d_ff
  Matrix h_out;       // n x d_model, after feed-forward residual
};

struct ForwardCache {
  Matrix items;
  std::vector<double> user;
  PositionVector pos;
  Matrix h0;                    // item embedding + position row
  std::vector<BlockCache> blocks;
  std::vector<double> user_emb; // d_model, empty when d_user == 0
  Matrix head_in;               // n x (d_model or 2*d_model)
  std::vector<Matrix> head_pre; // per hidden layer
  std::vector<Matrix> head_act;
  std::vector<double> logits;   // n
  ScoreVector scores;
};

/// Scores a list. Deterministic; softmax head output sums to 1 within 1e-6.
/// Throws ContractViolation on dimension mismatch, invalid position vector,
/// or n > n_max.
ScoreVector forward(const RerankerParams& params, const Matrix& items,
                    const std::vector<double>& user, const PositionVector& pos);

/// Same computation, returning the activations needed by backward().
ForwardCache forward_cached(const RerankerParams& params, const Matrix& items,
                            const std::vector<double>& user, const PositionVector& pos);

/// Accumulates d(objective)/d(params) into grad given d(objective)/d(scores).
/// grad must have layout size and is added to, not overwritten.
void backward(const RerankerParams& params, const ForwardCache& cache,
              const std::vector<double>& dscores, std::span<double> grad);

/// Checkpoint file: JSON document with the config and named flat arrays.
/// 64-bit values round-trip exactly.
void save_checkpoint(const RerankerParams& params, const std::string& path);
RerankerParams load_checkpoint(const std::string& path);

}  // namespace rerank

#endif  // RERANK_MODEL_HPP_
