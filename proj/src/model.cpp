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
#include "rerank/model.hpp"

#include <algorithm>
#include <cmath>

#include "rerank/errors.hpp"
#include "rerank/rng.hpp"

namespace rerank {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_grad(double x) {
  return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

// y(i,o) = b[o] + sum_c x(i,c) * w[o*in + c]
void affine_forward(std::span<const double> w, std::span<const double> b,
                    const Matrix& x, Matrix& y) {
  const std::size_t n = x.rows(), in = x.cols(), out = b.size();
  y = Matrix(n, out);
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x.row(i).data();
    for (std::size_t o = 0; o < out; ++o) {
      const double* wo = w.data() + o * in;
      double acc = b[o];
      for (std::size_t c = 0; c < in; ++c) acc += wo[c] * xi[c];
      y(i, o) = acc;
    }
  }
}

// Gradients of an affine layer. dx, when non-null, is accumulated into.
void affine_backward(std::span<const double> w, const Matrix& x, const Matrix& dy,
                     std::span<double> dw, std::span<double> db, Matrix* dx) {
  const std::size_t n = x.rows(), in = x.cols(), out = db.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x.row(i).data();
    const double* dyi = dy.row(i).data();
    for (std::size_t o = 0; o < out; ++o) {
      const double g = dyi[o];
      db[o] += g;
      double* dwo = dw.data() + o * in;
      for (std::size_t c = 0; c < in; ++c) dwo[c] += g * xi[c];
    }
    if (dx != nullptr) {
      double* dxi = dx->row(i).data();
      for (std::size_t o = 0; o < out; ++o) {
        const double g = dyi[o];
        const double* wo = w.data() + o * in;
        for (std::size_t c = 0; c < in; ++c) dxi[c] += g * wo[c];
      }
    }
  }
}

// Affine applied to a single vector (the user path).
void affine_forward_vec(std::span<const double> w, std::span<const double> b,
                        std::span<const double> x, std::vector<double>& y) {
  const std::size_t in = x.size(), out = b.size();
  y.assign(out, 0.0);
  for (std::size_t o = 0; o < out; ++o) {
    const double* wo = w.data() + o * in;
    double acc = b[o];
    for (std::size_t c = 0; c < in; ++c) acc += wo[c] * x[c];
    y[o] = acc;
  }
}

void affine_backward_vec(std::span<const double> x, std::span<const double> dy,
                         std::span<double> dw, std::span<double> db) {
  const std::size_t in = x.size(), out = dy.size();
  for (std::size_t o = 0; o < out; ++o) {
    const double g = dy[o];
    db[o] += g;
    double* dwo = dw.data() + o * in;
    for (std::size_t c = 0; c < in; ++c) dwo[c] += g * x[c];
  }
}

struct AffineOffsets {
  std::size_t w = 0, b = 0;
  std::size_t out = 0, in = 0;
};

struct BlockOffsets {
  AffineOffsets q, k, v, o, ff1, ff2;
};

// Offsets into the flat vector, mirroring ParamLayout's canonical order.
struct Offsets {
  AffineOffsets item_proj;
  AffineOffsets user_proj;  // out == 0 when absent
  std::size_t pos_table = 0;
  bool has_pos_table = false;
  std::vector<BlockOffsets> blocks;
  std::vector<AffineOffsets> head;  // hidden layers then the output layer
  std::size_t total = 0;
};

Offsets compute_offsets(const RerankerConfig& cfg) {
  Offsets off;
  std::size_t at = 0;
  auto affine = [&at](std::size_t out, std::size_t in) {
    AffineOffsets a;
    a.w = at;
    at += out * in;
    a.b = at;
    at += out;
    a.out = out;
    a.in = in;
    return a;
  };
  const auto d = static_cast<std::size_t>(cfg.d_model);
  off.item_proj = affine(d, static_cast<std::size_t>(cfg.d_item));
  if (cfg.d_user > 0) off.user_proj = affine(d, static_cast<std::size_t>(cfg.d_user));
  if (cfg.position_mode == PositionMode::learned_add) {
    off.has_pos_table = true;
    off.pos_table = at;
    at += static_cast<std::size_t>(cfg.n_max) * d;
  }
  for (int b = 0; b < cfg.n_blocks; ++b) {
    BlockOffsets blk;
    blk.q = affine(d, d);
    blk.k = affine(d, d);
    blk.v = affine(d, d);
    blk.o = affine(d, d);
    blk.ff1 = affine(d, d);  // feed-forward hidden width kept at d_model
    blk.ff2 = affine(d, d);
    off.blocks.push_back(blk);
  }
  std::size_t head_in = d + (cfg.d_user > 0 ? d : 0);
  for (int width : cfg.mlp_hidden) {
    off.head.push_back(affine(static_cast<std::size_t>(width), head_in));
    head_in = static_cast<std::size_t>(width);
  }
  off.head.push_back(affine(1, head_in));
  off.total = at;
  return off;
}

void check_forward_inputs(const RerankerConfig& cfg, const Matrix& items,
                          const std::vector<double>& user, const PositionVector& pos) {
  const std::size_t n = items.rows();
  if (n == 0) throw ContractViolation("forward: empty item list");
  if (items.cols() != static_cast<std::size_t>(cfg.d_item)) {
    throw ContractViolation("forward: item width " + std::to_string(items.cols()) +
                            " != d_item " + std::to_string(cfg.d_item));
  }
  if (user.size() != static_cast<std::size_t>(cfg.d_user)) {
    throw ContractViolation("forward: user width " + std::to_string(user.size()) +
                            " != d_user " + std::to_string(cfg.d_user));
  }
  if (pos.size() != n) throw ContractViolation("forward: position length != item count");
  if (!pos.is_valid()) throw ContractViolation("forward: position vector is not a permutation");
  if (n > static_cast<std::size_t>(cfg.n_max)) {
    throw ContractViolation("forward: list length " + std::to_string(n) + " exceeds n_max " +
                            std::to_string(cfg.n_max));
  }
}

}  // namespace

std::string to_string(HeadMode mode) {
  return mode == HeadMode::softmax_list ? "softmax_list" : "sigmoid_item";
}

std::string to_string(PositionMode mode) {
  return mode == PositionMode::learned_add ? "learned_add" : "off";
}

HeadMode head_mode_from_string(const std::string& s) {
  if (s == "softmax_list") return HeadMode::softmax_list;
  if (s == "sigmoid_item") return HeadMode::sigmoid_item;
  throw ConfigError("unknown head_mode: " + s);
}

PositionMode position_mode_from_string(const std::string& s) {
  if (s == "learned_add") return PositionMode::learned_add;
  if (s == "off") return PositionMode::off;
  throw ConfigError("unknown position_mode: " + s);
}

void validate_config(const RerankerConfig& cfg) {
  if (cfg.d_item < 1) throw ConfigError("d_item must be >= 1");
  if (cfg.d_user < 0) throw ConfigError("d_user must be >= 0");
  if (cfg.d_model < 1) throw ConfigError("d_model must be >= 1");
  if (cfg.n_heads < 1) throw ConfigError("n_heads must be >= 1");
  if (cfg.d_model % cfg.n_heads != 0) {
    throw ConfigError("d_model " + std::to_string(cfg.d_model) + " not divisible by n_heads " +
                      std::to_string(cfg.n_heads));
  }
  if (cfg.n_blocks < 0) throw ConfigError("n_blocks must be >= 0");
  if (cfg.n_max < 1) throw ConfigError("n_max must be >= 1");
  for (int w : cfg.mlp_hidden) {
    if (w < 1) throw ConfigError("mlp_hidden widths must be >= 1");
  }
}

ParamLayout::ParamLayout(const RerankerConfig& cfg) {
  validate_config(cfg);
  const Offsets off = compute_offsets(cfg);
  auto push_affine = [this](const std::string& name, const AffineOffsets& a) {
    tensors_.push_back({name + ".w", a.w, a.out, a.in, true});
    tensors_.push_back({name + ".b", a.b, 1, a.out, false});
  };
  push_affine("item_proj", off.item_proj);
  if (cfg.d_user > 0) push_affine("user_proj", off.user_proj);
  if (off.has_pos_table) {
    tensors_.push_back({"pos_table", off.pos_table, static_cast<std::size_t>(cfg.n_max),
                        static_cast<std::size_t>(cfg.d_model), false});
  }
  for (int b = 0; b < cfg.n_blocks; ++b) {
    const std::string prefix = "block" + std::to_string(b);
    push_affine(prefix + ".attn.q", off.blocks[static_cast<std::size_t>(b)].q);
    push_affine(prefix + ".attn.k", off.blocks[static_cast<std::size_t>(b)].k);
    push_affine(prefix + ".attn.v", off.blocks[static_cast<std::size_t>(b)].v);
    push_affine(prefix + ".attn.o", off.blocks[static_cast<std::size_t>(b)].o);
    push_affine(prefix + ".ff1", off.blocks[static_cast<std::size_t>(b)].ff1);
    push_affine(prefix + ".ff2", off.blocks[static_cast<std::size_t>(b)].ff2);
  }
  for (std::size_t l = 0; l + 1 < off.head.size(); ++l) {
    push_affine("head.l" + std::to_string(l), off.head[l]);
  }
  push_affine("head.out", off.head.back());
  total_ = off.total;
}

const TensorInfo* ParamLayout::find(const std::string& name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

const TensorInfo& ParamLayout::owner(std::size_t flat_index) const {
  for (const auto& t : tensors_) {
    if (flat_index >= t.offset && flat_index < t.offset + t.count()) return t;
  }
  throw ContractViolation("flat index out of range: " + std::to_string(flat_index));
}

std::span<double> RerankerParams::tensor(const std::string& name) {
  const ParamLayout layout(cfg);
  const TensorInfo* info = layout.find(name);
  if (info == nullptr) throw ContractViolation("unknown tensor: " + name);
  return {flat.data() + info->offset, info->count()};
}

std::span<const double> RerankerParams::tensor(const std::string& name) const {
  const ParamLayout layout(cfg);
  const TensorInfo* info = layout.find(name);
  if (info == nullptr) throw ContractViolation("unknown tensor: " + name);
  return {flat.data() + info->offset, info->count()};
}

RerankerParams init_params(const RerankerConfig& cfg) {
  const ParamLayout layout(cfg);
  RerankerParams params{cfg, std::vector<double>(layout.total_size(), 0.0)};
  Rng rng(mix_seed(cfg.seed, kStreamInit));
  for (const auto& t : layout.tensors()) {
    if (!t.is_weight) continue;  // biases and the position table start at zero
    const double bound = 1.0 / std::sqrt(static_cast<double>(t.cols));
    for (std::size_t i = 0; i < t.count(); ++i) {
      params.flat[t.offset + i] = rng.uniform(-bound, bound);
    }
  }
  return params;
}

ForwardCache forward_cached(const RerankerParams& params, const Matrix& items,
                            const std::vector<double>& user, const PositionVector& pos) {
  const RerankerConfig& cfg = params.cfg;
  check_forward_inputs(cfg, items, user, pos);
  const Offsets off = compute_offsets(cfg);
  const std::span<const double> flat(params.flat);
  auto w_of = [&flat](const AffineOffsets& a) { return flat.subspan(a.w, a.out * a.in); };
  auto b_of = [&flat](const AffineOffsets& a) { return flat.subspan(a.b, a.out); };

  const std::size_t n = items.rows();
  const std::size_t d = static_cast<std::size_t>(cfg.d_model);
  const std::size_t n_heads = static_cast<std::size_t>(cfg.n_heads);
  const std::size_t dh = d / n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  ForwardCache cache;
  cache.items = items;
  cache.user = user;
  cache.pos = pos;

  affine_forward(w_of(off.item_proj), b_of(off.item_proj), items, cache.h0);
  if (off.has_pos_table) {
    for (std::size_t i = 0; i < n; ++i) {
      const double* row =
          flat.data() + off.pos_table + static_cast<std::size_t>(pos[i]) * d;
      double* hi = cache.h0.row(i).data();
      for (std::size_t c = 0; c < d; ++c) hi[c] += row[c];
    }
  }

  const Matrix* h = &cache.h0;
  cache.blocks.resize(static_cast<std::size_t>(cfg.n_blocks));
  for (std::size_t b = 0; b < cache.blocks.size(); ++b) {
    BlockCache& blk = cache.blocks[b];
    const BlockOffsets& bo = off.blocks[b];
    blk.h_in = *h;
    affine_forward(w_of(bo.q), b_of(bo.q), blk.h_in, blk.q);
    affine_forward(w_of(bo.k), b_of(bo.k), blk.h_in, blk.k);
    affine_forward(w_of(bo.v), b_of(bo.v), blk.h_in, blk.v);

    blk.attn.assign(n_heads * n * n, 0.0);
    blk.attn_heads = Matrix(n, d);
    for (std::size_t head = 0; head < n_heads; ++head) {
      const std::size_t base = head * dh;
      for (std::size_t i = 0; i < n; ++i) {
        double* arow = blk.attn.data() + (head * n + i) * n;
        double max_e = -HUGE_VAL;
        for (std::size_t j = 0; j < n; ++j) {
          double e = 0.0;
          const double* qi = blk.q.row(i).data() + base;
          const double* kj = blk.k.row(j).data() + base;
          for (std::size_t c = 0; c < dh; ++c) e += qi[c] * kj[c];
          e *= scale;
          arow[j] = e;
          max_e = std::max(max_e, e);
        }
        double denom = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          arow[j] = std::exp(arow[j] - max_e);
          denom += arow[j];
        }
        for (std::size_t j = 0; j < n; ++j) arow[j] /= denom;
        double* orow = blk.attn_heads.row(i).data() + base;
        for (std::size_t j = 0; j < n; ++j) {
          const double a = arow[j];
          const double* vj = blk.v.row(j).data() + base;
          for (std::size_t c = 0; c < dh; ++c) orow[c] += a * vj[c];
        }
      }
    }

    Matrix attn_proj;
    affine_forward(w_of(bo.o), b_of(bo.o), blk.attn_heads, attn_proj);
    blk.h_attn = blk.h_in;
    for (std::size_t i = 0; i < n; ++i) {
      double* hi = blk.h_attn.row(i).data();
      const double* pi = attn_proj.row(i).data();
      for (std::size_t c = 0; c < d; ++c) hi[c] += pi[c];
    }

    affine_forward(w_of(bo.ff1), b_of(bo.ff1), blk.h_attn, blk.ff1_pre);
    blk.ff1_act = blk.ff1_pre;
    for (double& x : blk.ff1_act.data()) x = gelu(x);
    Matrix ff2;
    affine_forward(w_of(bo.ff2), b_of(bo.ff2), blk.ff1_act, ff2);
    blk.h_out = blk.h_attn;
    for (std::size_t i = 0; i < n; ++i) {
      double* hi = blk.h_out.row(i).data();
      const double* fi = ff2.row(i).data();
      for (std::size_t c = 0; c < d; ++c) hi[c] += fi[c];
    }
    h = &blk.h_out;
  }

  if (cfg.d_user > 0) {
    affine_forward_vec(w_of(off.user_proj), b_of(off.user_proj), user, cache.user_emb);
    cache.head_in = Matrix(n, 2 * d);
    for (std::size_t i = 0; i < n; ++i) {
      double* zi = cache.head_in.row(i).data();
      const double* hi = h->row(i).data();
      for (std::size_t c = 0; c < d; ++c) zi[c] = hi[c];
      for (std::size_t c = 0; c < d; ++c) zi[d + c] = cache.user_emb[c];
    }
  } else {
    cache.head_in = *h;
  }

  const Matrix* z = &cache.head_in;
  const std::size_t n_hidden = off.head.size() - 1;
  cache.head_pre.resize(n_hidden);
  cache.head_act.resize(n_hidden);
  for (std::size_t l = 0; l < n_hidden; ++l) {
    affine_forward(w_of(off.head[l]), b_of(off.head[l]), *z, cache.head_pre[l]);
    cache.head_act[l] = cache.head_pre[l];
    for (double& x : cache.head_act[l].data()) x = gelu(x);
    z = &cache.head_act[l];
  }
  Matrix logit_col;
  affine_forward(w_of(off.head.back()), b_of(off.head.back()), *z, logit_col);
  cache.logits.resize(n);
  for (std::size_t i = 0; i < n; ++i) cache.logits[i] = logit_col(i, 0);

  cache.scores.values.resize(n);
  if (cfg.head_mode == HeadMode::softmax_list) {
    double max_l = -HUGE_VAL;
    for (double l : cache.logits) max_l = std::max(max_l, l);
    double denom = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      cache.scores.values[i] = std::exp(cache.logits[i] - max_l);
      denom += cache.scores.values[i];
    }
    for (double& s : cache.scores.values) s /= denom;
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      cache.scores.values[i] = 1.0 / (1.0 + std::exp(-cache.logits[i]));
    }
  }
  return cache;
}

ScoreVector forward(const RerankerParams& params, const Matrix& items,
                    const std::vector<double>& user, const PositionVector& pos) {
  return forward_cached(params, items, user, pos).scores;
}

void backward(const RerankerParams& params, const ForwardCache& cache,
              const std::vector<double>& dscores, std::span<double> grad) {
  const RerankerConfig& cfg = params.cfg;
  const Offsets off = compute_offsets(cfg);
  if (grad.size() != off.total) throw ContractViolation("backward: gradient size mismatch");
  if (dscores.size() != cache.scores.size()) {
    throw ContractViolation("backward: dscores length mismatch");
  }
  const std::span<const double> flat(params.flat);
  auto w_of = [&flat](const AffineOffsets& a) { return flat.subspan(a.w, a.out * a.in); };
  auto dw_of = [&grad](const AffineOffsets& a) { return grad.subspan(a.w, a.out * a.in); };
  auto db_of = [&grad](const AffineOffsets& a) { return grad.subspan(a.b, a.out); };

  const std::size_t n = cache.items.rows();
  const std::size_t d = static_cast<std::size_t>(cfg.d_model);
  const std::size_t n_heads = static_cast<std::size_t>(cfg.n_heads);
  const std::size_t dh = d / n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  // Head output back to logits.
  std::vector<double> dlogits(n, 0.0);
  if (cfg.head_mode == HeadMode::softmax_list) {
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) dot += dscores[i] * cache.scores[i];
    for (std::size_t i = 0; i < n; ++i) {
      dlogits[i] = cache.scores[i] * (dscores[i] - dot);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const double s = cache.scores[i];
      dlogits[i] = dscores[i] * s * (1.0 - s);
    }
  }

  // MLP head, output layer first.
  const std::size_t n_hidden = off.head.size() - 1;
  Matrix dlogit_col(n, 1);
  for (std::size_t i = 0; i < n; ++i) dlogit_col(i, 0) = dlogits[i];
  const Matrix* last_act = n_hidden > 0 ? &cache.head_act[n_hidden - 1] : &cache.head_in;
  Matrix d_prev(last_act->rows(), last_act->cols());
  affine_backward(w_of(off.head.back()), *last_act, dlogit_col, dw_of(off.head.back()),
                  db_of(off.head.back()), &d_prev);
  for (std::size_t l = n_hidden; l-- > 0;) {
    Matrix dpre = d_prev;
    for (std::size_t idx = 0; idx < dpre.data().size(); ++idx) {
      dpre.data()[idx] *= gelu_grad(cache.head_pre[l].data()[idx]);
    }
    const Matrix* input = l > 0 ? &cache.head_act[l - 1] : &cache.head_in;
    d_prev = Matrix(input->rows(), input->cols());
    affine_backward(w_of(off.head[l]), *input, dpre, dw_of(off.head[l]), db_of(off.head[l]),
                    &d_prev);
  }

  // Split the concatenated head input back into item and user parts.
  Matrix dh_top(n, d);
  if (cfg.d_user > 0) {
    std::vector<double> duser_emb(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* di = d_prev.row(i).data();
      double* ti = dh_top.row(i).data();
      for (std::size_t c = 0; c < d; ++c) ti[c] = di[c];
      for (std::size_t c = 0; c < d; ++c) duser_emb[c] += di[d + c];
    }
    affine_backward_vec(cache.user, duser_emb, dw_of(off.user_proj), db_of(off.user_proj));
  } else {
    dh_top = d_prev;
  }

  // Attention blocks, last first.
  Matrix dh_out = dh_top;
  for (std::size_t b = cache.blocks.size(); b-- > 0;) {
    const BlockCache& blk = cache.blocks[b];
    const BlockOffsets& bo = off.blocks[b];

    // Feed-forward residual: h_out = h_attn + ff2(gelu(ff1(h_attn)))
    Matrix dh_attn = dh_out;
    Matrix dff1_act(n, d);
    affine_backward(w_of(bo.ff2), blk.ff1_act, dh_out, dw_of(bo.ff2), db_of(bo.ff2), &dff1_act);
    Matrix dff1_pre = dff1_act;
    for (std::size_t idx = 0; idx < dff1_pre.data().size(); ++idx) {
      dff1_pre.data()[idx] *= gelu_grad(blk.ff1_pre.data()[idx]);
    }
    affine_backward(w_of(bo.ff1), blk.h_attn, dff1_pre, dw_of(bo.ff1), db_of(bo.ff1), &dh_attn);

    // Attention residual: h_attn = h_in + o_proj(attn_heads)
    Matrix dh_in = dh_attn;
    Matrix dattn_heads(n, d);
    affine_backward(w_of(bo.o), blk.attn_heads, dh_attn, dw_of(bo.o), db_of(bo.o), &dattn_heads);

    Matrix dq(n, d), dk(n, d), dv(n, d);
    std::vector<double> da(n), de(n);
    for (std::size_t head = 0; head < n_heads; ++head) {
      const std::size_t base = head * dh;
      for (std::size_t i = 0; i < n; ++i) {
        const double* arow = blk.attn.data() + (head * n + i) * n;
        const double* doi = dattn_heads.row(i).data() + base;
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          const double* vj = blk.v.row(j).data() + base;
          double s = 0.0;
          for (std::size_t c = 0; c < dh; ++c) s += doi[c] * vj[c];
          da[j] = s;
          dot += arow[j] * s;
          double* dvj = dv.row(j).data() + base;
          const double a = arow[j];
          for (std::size_t c = 0; c < dh; ++c) dvj[c] += a * doi[c];
        }
        for (std::size_t j = 0; j < n; ++j) de[j] = arow[j] * (da[j] - dot);
        double* dqi = dq.row(i).data() + base;
        for (std::size_t j = 0; j < n; ++j) {
          const double g = de[j] * scale;
          const double* kj = blk.k.row(j).data() + base;
          double* dkj = dk.row(j).data() + base;
          const double* qi = blk.q.row(i).data() + base;
          for (std::size_t c = 0; c < dh; ++c) {
            dqi[c] += g * kj[c];
            dkj[c] += g * qi[c];
          }
        }
      }
    }

    affine_backward(w_of(bo.q), blk.h_in, dq, dw_of(bo.q), db_of(bo.q), &dh_in);
    affine_backward(w_of(bo.k), blk.h_in, dk, dw_of(bo.k), db_of(bo.k), &dh_in);
    affine_backward(w_of(bo.v), blk.h_in, dv, dw_of(bo.v), db_of(bo.v), &dh_in);
    dh_out = dh_in;
  }

  // Position table and item projection.
  if (off.has_pos_table) {
    for (std::size_t i = 0; i < n; ++i) {
      double* row = grad.data() + off.pos_table + static_cast<std::size_t>(cache.pos[i]) * d;
      const double* gi = dh_out.row(i).data();
      for (std::size_t c = 0; c < d; ++c) row[c] += gi[c];
    }
  }
  affine_backward(w_of(off.item_proj), cache.items, dh_out, dw_of(off.item_proj),
                  db_of(off.item_proj), nullptr);
}

}  // namespace rerank
