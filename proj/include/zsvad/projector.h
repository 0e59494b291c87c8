// SPDX-FileCopyrightText: © 2026 The zsvad Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Multi-scale semantic projector. Per frame, category features attend over
// the frame's patch features; the clip-level semantic feature is appended as
// one more context row; learnable queries and the context then run through
// two-way blocks and the mean query is mapped to the decoder width.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "zsvad/encoders.h"
#include "zsvad/numerics.h"
#include "zsvad/semantic_provider.h"
#include "zsvad/transformer.h"

namespace zsvad {

struct ProjectorConfig {
  std::size_t category_dim = 64;   // D_t
  std::size_t vision_dim = 64;     // D_v
  std::size_t semantic_dim = 256;  // D_s
  std::size_t latent_dim = 64;     // D_l
  std::size_t hidden_dim = 64;     // D_a
  std::size_t model_dim = 64;      // D_m
  std::size_t queries = 48;        // N_q
  std::size_t depth = 2;           // B
  std::size_t mlp_dim = 128;
  std::uint64_t seed = 0;
};

struct ProjectorWeights {
  Matrix w_c;      // D_t x D_l
  Matrix w_v;      // D_v x D_l
  Matrix w_o;      // D_l x D_a
  Matrix w_llm;    // D_s x D_a
  Matrix queries;  // N_q x D_m
  Matrix w_out;    // D_m x D_m
  std::vector<TwoWayBlockWeights> blocks;

  /// Gaussian init with std 1/sqrt(fan_in); queries use std 1.
  static ProjectorWeights random(const ProjectorConfig& config);
  void validate() const;

  template <typename Self, typename F>
  static void visit(Self& self, F&& f) {
    f("w_c", self.w_c);
    f("w_v", self.w_v);
    f("w_o", self.w_o);
    f("w_llm", self.w_llm);
    f("queries", self.queries);
    f("w_out", self.w_out);
    for (std::size_t b = 0; b < self.blocks.size(); ++b)
      for_each_tensor(self.blocks[b], "block" + std::to_string(b) + ".", f);
  }
};

void save_projector(const std::filesystem::path& dir, const ProjectorWeights& w);
/// Loads into weights shaped by `config`.
ProjectorWeights load_projector(const std::filesystem::path& dir, const ProjectorConfig& config);

struct ProjectedPrompt {
  Matrix f_proj;            // T x D_m
  std::vector<Matrix> f_a;  // T matrices of K x D_a
};

/// f_a[t] = CrossAttn(f_c W_c, f_v[t] W_v, f_v[t] W_v) W_o with scale 1/sqrt(D_l).
std::vector<Matrix> frame_cross_attention(const CategoryFeatures& f_c, const VisionFeatures& f_v,
                                          const ProjectorWeights& w);

ProjectedPrompt project(const SemanticFeature& f_sem, std::vector<Matrix> f_a,
                        const ProjectorWeights& w);

}  // namespace zsvad
