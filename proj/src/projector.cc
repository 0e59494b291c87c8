// SPDX-FileCopyrightText: © 2026 The zsvad Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "zsvad/projector.h"

#include <cmath>

#include "zsvad/errors.h"
#include "zsvad/tensor_io.h"

namespace zsvad {

ProjectorWeights ProjectorWeights::random(const ProjectorConfig& c) {
  Rng rng(c.seed);
  ProjectorWeights w;
  w.w_c = gaussian_matrix(c.category_dim, c.latent_dim, rng);
  w.w_v = gaussian_matrix(c.vision_dim, c.latent_dim, rng);
  w.w_o = gaussian_matrix(c.latent_dim, c.hidden_dim, rng);
  w.w_llm = gaussian_matrix(c.semantic_dim, c.hidden_dim, rng);
  w.queries = Matrix::zeros(c.queries, c.model_dim);
  for (double& v : w.queries.data()) v = rng.normal();
  w.w_out = gaussian_matrix(c.model_dim, c.model_dim, rng);
  for (std::size_t b = 0; b < c.depth; ++b) {
    w.blocks.push_back(
        TwoWayBlockWeights::random(c.model_dim, c.hidden_dim, c.model_dim, c.mlp_dim, rng));
  }
  return w;
}

void ProjectorWeights::validate() const {
  require(w_c.cols() == w_v.cols(), "projector: W_c and W_v disagree on D_l");
  require(w_o.rows() == w_c.cols(), "projector: W_o rows must equal D_l");
  require(w_llm.cols() == w_o.cols(), "projector: W_LLM and W_o disagree on D_a");
  require(queries.rows() >= 1, "projector: needs at least one query");
  require(w_out.rows() == queries.cols(), "projector: output map rows must equal D_m");
  for (const auto& b : blocks) {
    require(b.to_context.wq.rows() == queries.cols() && b.to_context.wk.rows() == w_o.cols(),
            "projector: block widths inconsistent with D_m / D_a");
  }
}

void save_projector(const std::filesystem::path& dir, const ProjectorWeights& w) {
  std::vector<std::pair<std::string, const Matrix*>> tensors;
  ProjectorWeights::visit(w, [&](const std::string& name, const Matrix& m) {
    tensors.emplace_back(name, &m);
  });
  save_named_tensors(dir, tensors);
}

ProjectorWeights load_projector(const std::filesystem::path& dir, const ProjectorConfig& config) {
  ProjectorWeights w = ProjectorWeights::random(config);
  std::vector<std::pair<std::string, Matrix*>> tensors;
  ProjectorWeights::visit(w, [&](const std::string& name, Matrix& m) {
    tensors.emplace_back(name, &m);
  });
  load_named_tensors(dir, tensors);
  w.validate();
  return w;
}

std::vector<Matrix> frame_cross_attention(const CategoryFeatures& f_c, const VisionFeatures& f_v,
                                          const ProjectorWeights& w) {
  require(f_c.features.cols() == w.w_c.rows(), "frame_cross_attention: category width " +
                                                   std::to_string(f_c.features.cols()) +
                                                   " != W_c rows " + std::to_string(w.w_c.rows()));
  require(f_v.dim() == w.w_v.rows(), "frame_cross_attention: vision width " +
                                         std::to_string(f_v.dim()) + " != W_v rows " +
                                         std::to_string(w.w_v.rows()));
  const Matrix queries = matmul(f_c.features, w.w_c);
  const double scale = 1.0 / std::sqrt(static_cast<double>(w.w_c.cols()));
  std::vector<Matrix> out;
  out.reserve(f_v.frame_count());
  for (const Matrix& frame : f_v.frames) {
    const Matrix keys = matmul(frame, w.w_v);
    out.push_back(matmul(cross_attention(queries, keys, keys, scale), w.w_o));
  }
  return out;
}

ProjectedPrompt project(const SemanticFeature& f_sem, std::vector<Matrix> f_a,
                        const ProjectorWeights& w) {
  w.validate();
  require(f_sem.values.size() == w.w_llm.rows(), "project: semantic feature has " +
                                                     std::to_string(f_sem.values.size()) +
                                                     " values, W_LLM expects " +
                                                     std::to_string(w.w_llm.rows()));
  const Matrix sem_row = matmul(Matrix::row_vector(f_sem.values), w.w_llm);
  const std::size_t hidden = sem_row.cols();
  const std::size_t model = w.queries.cols();

  ProjectedPrompt out;
  out.f_proj = Matrix::zeros(f_a.size(), model);
  for (std::size_t t = 0; t < f_a.size(); ++t) {
    const Matrix& frame = f_a[t];
    require(frame.cols() == hidden, "project: f_a width differs from D_a");
    Matrix context = Matrix::zeros(frame.rows() + 1, hidden);
    std::copy(sem_row.data().begin(), sem_row.data().end(), context.row(0).begin());
    for (std::size_t k = 0; k < frame.rows(); ++k)
      std::copy(frame.row(k).begin(), frame.row(k).end(), context.row(k + 1).begin());

    Matrix queries = w.queries;
    for (const auto& block : w.blocks) two_way_block(block, queries, context);
    const Matrix pooled = matmul(queries.mean_rows(), w.w_out);
    std::copy(pooled.data().begin(), pooled.data().end(), out.f_proj.row(t).begin());
  }
  out.f_a = std::move(f_a);
  return out;
}

}  // namespace zsvad
