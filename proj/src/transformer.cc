// SPDX-FileCopyrightText: © 2026 The zsvad Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "zsvad/transformer.h"

#include <algorithm>
#include <cmath>

#include "zsvad/errors.h"

namespace zsvad {

AttentionWeights AttentionWeights::random(std::size_t query_dim, std::size_t key_dim,
                                          std::size_t inner, Rng& rng) {
  AttentionWeights w;
  w.wq = gaussian_matrix(query_dim, inner, rng);
  w.wk = gaussian_matrix(key_dim, inner, rng);
  w.wv = gaussian_matrix(key_dim, inner, rng);
  w.wo = gaussian_matrix(inner, query_dim, rng);
  return w;
}

AttentionWeights AttentionWeights::zeros(std::size_t query_dim, std::size_t key_dim,
                                         std::size_t inner) {
  return {Matrix::zeros(query_dim, inner), Matrix::zeros(key_dim, inner),
          Matrix::zeros(key_dim, inner), Matrix::zeros(inner, query_dim)};
}

MlpWeights MlpWeights::random(std::size_t dim, std::size_t hidden, Rng& rng) {
  MlpWeights w;
  w.w1 = gaussian_matrix(dim, hidden, rng);
  w.b1 = Matrix::zeros(1, hidden);
  w.w2 = gaussian_matrix(hidden, dim, rng);
  w.b2 = Matrix::zeros(1, dim);
  return w;
}

MlpWeights MlpWeights::zeros(std::size_t dim, std::size_t hidden) {
  return {Matrix::zeros(dim, hidden), Matrix::zeros(1, hidden), Matrix::zeros(hidden, dim),
          Matrix::zeros(1, dim)};
}

TwoWayBlockWeights TwoWayBlockWeights::random(std::size_t query_dim, std::size_t context_dim,
                                              std::size_t inner, std::size_t mlp_hidden,
                                              Rng& rng) {
  TwoWayBlockWeights w;
  w.to_context = AttentionWeights::random(query_dim, context_dim, inner, rng);
  w.self = AttentionWeights::random(query_dim, query_dim, inner, rng);
  w.mlp = MlpWeights::random(query_dim, mlp_hidden, rng);
  w.from_context = AttentionWeights::random(context_dim, query_dim, inner, rng);
  return w;
}

TwoWayBlockWeights TwoWayBlockWeights::zeros(std::size_t query_dim, std::size_t context_dim,
                                             std::size_t inner, std::size_t mlp_hidden) {
  return {AttentionWeights::zeros(query_dim, context_dim, inner),
          AttentionWeights::zeros(query_dim, query_dim, inner),
          MlpWeights::zeros(query_dim, mlp_hidden),
          AttentionWeights::zeros(context_dim, query_dim, inner)};
}

Matrix layer_norm(const Matrix& x, double eps) {
  Matrix out = x;
  const double n = static_cast<double>(x.cols());
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= n;
    const double inv = 1.0 / std::sqrt(var + eps);
    for (double& v : row) v = (v - mean) * inv;
  }
  return out;
}

Matrix attend(const AttentionWeights& w, const Matrix& queries, const Matrix& keys) {
  const Matrix q = matmul(queries, w.wq);
  const Matrix k = matmul(keys, w.wk);
  const Matrix v = matmul(keys, w.wv);
  const double scale = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(1, q.cols())));
  return matmul(cross_attention(q, k, v, scale), w.wo);
}

Matrix mlp(const MlpWeights& w, const Matrix& x) {
  Matrix h = matmul(x, w.w1);
  for (std::size_t r = 0; r < h.rows(); ++r) {
    auto row = h.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = std::max(0.0, row[c] + w.b1(0, c));
  }
  Matrix out = matmul(h, w.w2);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += w.b2(0, c);
  }
  return out;
}

void add_inplace(Matrix& target, const Matrix& delta) {
  require(target.rows() == delta.rows() && target.cols() == delta.cols(),
          "add_inplace: shape mismatch");
  auto t = target.data();
  auto d = delta.data();
  for (std::size_t i = 0; i < t.size(); ++i) t[i] += d[i];
}

void two_way_block(const TwoWayBlockWeights& w, Matrix& queries, Matrix& context) {
  add_inplace(queries, attend(w.to_context, layer_norm(queries), layer_norm(context)));
  const Matrix qn = layer_norm(queries);
  add_inplace(queries, attend(w.self, qn, qn));
  add_inplace(queries, mlp(w.mlp, layer_norm(queries)));
  add_inplace(context, attend(w.from_context, layer_norm(context), layer_norm(queries)));
}

}  // namespace zsvad
