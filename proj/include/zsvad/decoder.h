// SPDX-FileCopyrightText: © 2026 The zsvad Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Mask decoder producing per-frame object scores and pixel score maps, and
// the segmentation losses with closed-form gradients w.r.t. the logits.
//
// Per frame t:
//   image  = f_v[t] image_proj + dense_embed                 (N_p x D_m)
//   tokens = [mask_token; object_token; f_proj[t]]           (3 x D_m)
//   two-way blocks: tokens <-> image
//   patch logit p = (mask' hyper) . (image'[p] upscale) + pixel_bias
//   pixel logits  = bilinear upsample of the patch grid by U
//   frame logit   = object' object_head + object_bias

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "zsvad/encoders.h"
#include "zsvad/numerics.h"
#include "zsvad/projector.h"
#include "zsvad/transformer.h"

namespace zsvad {

struct DecoderConfig {
  std::size_t vision_dim = 64;  // D_v
  std::size_t model_dim = 64;   // D_m
  std::size_t embed_dim = 32;   // per-pixel embedding width
  std::size_t depth = 2;        // B_d
  std::size_t mlp_dim = 128;
  std::size_t upscale = 4;      // U
  std::uint64_t seed = 0;
};

struct DecoderWeights {
  Matrix image_proj;    // D_v x D_m
  Matrix dense_embed;   // 1 x D_m, added to every patch embedding
  Matrix mask_token;    // 1 x D_m
  Matrix object_token;  // 1 x D_m
  std::vector<TwoWayBlockWeights> blocks;
  Matrix hyper;         // D_m x D_e, mask token -> pixel embedding space
  Matrix upscale_map;   // D_m x D_e, patch embedding -> pixel embedding space
  Matrix pixel_bias;    // 1 x 1
  Matrix object_head;   // D_m x 1
  Matrix object_bias;   // 1 x 1
  std::size_t upscale = 4;

  static DecoderWeights random(const DecoderConfig& config);
  static DecoderWeights zeros(const DecoderConfig& config);
  void validate() const;

  template <typename Self, typename F>
  static void visit(Self& self, F&& f) {
    f("image_proj", self.image_proj);
    f("dense_embed", self.dense_embed);
    f("mask_token", self.mask_token);
    f("object_token", self.object_token);
    for (std::size_t b = 0; b < self.blocks.size(); ++b)
      for_each_tensor(self.blocks[b], "block" + std::to_string(b) + ".", f);
    f("hyper", self.hyper);
    f("upscale_map", self.upscale_map);
    f("pixel_bias", self.pixel_bias);
    f("object_head", self.object_head);
    f("object_bias", self.object_bias);
  }
};

void save_decoder(const std::filesystem::path& dir, const DecoderWeights& w);
DecoderWeights load_decoder(const std::filesystem::path& dir, const DecoderConfig& config);

struct ScoreBundle {
  std::vector<double> frame_logits;
  std::vector<double> frame_scores;
  /// Per frame, grid_rows x grid_cols logits before upsampling.
  std::vector<Matrix> patch_logits;
  /// Per frame, (grid_rows * U) x (grid_cols * U).
  std::vector<Matrix> pixel_logits;
  std::vector<Matrix> pixel_scores;

  std::size_t frame_count() const noexcept { return frame_logits.size(); }
};

/// Bilinear resize by an integer factor with half-pixel centers, edges clamped.
Matrix bilinear_upsample(const Matrix& grid, std::size_t factor);

ScoreBundle decode(const ProjectedPrompt& prompt, const VisionFeatures& f_v,
                   const DecoderWeights& w);

struct LossValue {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d logit
};

/// Mean sigmoid focal loss.
LossValue focal_loss(std::span<const double> logits, std::span<const std::uint8_t> targets,
                     double alpha, double gamma);
/// 1 - (2 sum(p t) + s) / (sum p + sum t + s) with p = sigmoid(logit).
LossValue dice_loss(std::span<const double> logits, std::span<const std::uint8_t> targets,
                    double smooth = 1.0);
/// Mean binary cross-entropy with logits.
LossValue bce_loss(std::span<const double> logits, std::span<const std::uint8_t> targets);

struct LossConfig {
  double seg = 1.0;
  double focal = 20.0;
  double dice = 1.0;
  double object = 1.0;
  double focal_alpha = 0.25;
  double focal_gamma = 2.0;

  void validate() const;
};

struct SegLoss {
  double loss = 0.0;
  double focal = 0.0;
  double dice = 0.0;
  double object = 0.0;
  std::vector<double> pixel_grad;  // frame-major, matching pixel_logits
  std::vector<double> frame_grad;
};

/// Pixel terms run over all frames' pixel logits jointly; `pixel_targets`
/// must already be at logit resolution, frame-major.
SegLoss seg_loss(const ScoreBundle& bundle, std::span<const std::uint8_t> frame_targets,
                 std::span<const std::uint8_t> pixel_targets, const LossConfig& config);

}  // namespace zsvad
