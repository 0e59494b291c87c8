// SPDX-FileCopyrightText: © 2026 The zsvad Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Single-head attention, MLP and the two-way block shared by the projector
// and the mask decoder. A two-way block lets a small query set and a larger
// context update each other:
//
//   q   += Attn(LN(q), LN(ctx))        queries read the context
//   q   += Attn(LN(q), LN(q))          query self-attention
//   q   += MLP(LN(q))
//   ctx += Attn(LN(ctx), LN(q))        context reads the queries back
//
// LN is a parameter-free layer norm. No positional terms are added, so the
// block is equivariant to context-row permutations.

#include <string>
#include <vector>

#include "zsvad/numerics.h"

namespace zsvad {

struct AttentionWeights {
  Matrix wq;  // query_dim x inner
  Matrix wk;  // key_dim x inner
  Matrix wv;  // key_dim x inner
  Matrix wo;  // inner x query_dim

  static AttentionWeights random(std::size_t query_dim, std::size_t key_dim, std::size_t inner,
                                 Rng& rng);
  static AttentionWeights zeros(std::size_t query_dim, std::size_t key_dim, std::size_t inner);
};

struct MlpWeights {
  Matrix w1;  // dim x hidden
  Matrix b1;  // 1 x hidden
  Matrix w2;  // hidden x dim
  Matrix b2;  // 1 x dim

  static MlpWeights random(std::size_t dim, std::size_t hidden, Rng& rng);
  static MlpWeights zeros(std::size_t dim, std::size_t hidden);
};

struct TwoWayBlockWeights {
  AttentionWeights to_context;
  AttentionWeights self;
  MlpWeights mlp;
  AttentionWeights from_context;

  static TwoWayBlockWeights random(std::size_t query_dim, std::size_t context_dim,
                                   std::size_t inner, std::size_t mlp_hidden, Rng& rng);
  static TwoWayBlockWeights zeros(std::size_t query_dim, std::size_t context_dim,
                                  std::size_t inner, std::size_t mlp_hidden);
};

/// Row-wise (x - mean) / sqrt(var + eps).
Matrix layer_norm(const Matrix& x, double eps = 1e-5);

/// softmax((queries wq)(keys wk)^T / sqrt(inner)) (keys wv) wo.
Matrix attend(const AttentionWeights& w, const Matrix& queries, const Matrix& keys);

/// relu(x w1 + b1) w2 + b2.
Matrix mlp(const MlpWeights& w, const Matrix& x);

void two_way_block(const TwoWayBlockWeights& w, Matrix& queries, Matrix& context);

void add_inplace(Matrix& target, const Matrix& delta);

/// Calls f(name, matrix) for every tensor of the block, names prefixed.
template <typename Block, typename F>
void for_each_tensor(Block& block, const std::string& prefix, F&& f) {
  auto attention = [&](auto& a, const std::string& name) {
    f(prefix + name + ".wq", a.wq);
    f(prefix + name + ".wk", a.wk);
    f(prefix + name + ".wv", a.wv);
    f(prefix + name + ".wo", a.wo);
  };
  attention(block.to_context, "to_context");
  attention(block.self, "self");
  f(prefix + "mlp.w1", block.mlp.w1);
  f(prefix + "mlp.b1", block.mlp.b1);
  f(prefix + "mlp.w2", block.mlp.w2);
  f(prefix + "mlp.b2", block.mlp.b2);
  attention(block.from_context, "from_context");
}

}  // namespace zsvad
