// SPDX-FileCopyrightText: © 2026 The zsvad Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "zsvad/decoder.h"

#include <algorithm>
#include <cmath>

#include "zsvad/errors.h"
#include "zsvad/tensor_io.h"

namespace zsvad {

DecoderWeights DecoderWeights::random(const DecoderConfig& c) {
  Rng rng(c.seed);
  DecoderWeights w;
  w.image_proj = gaussian_matrix(c.vision_dim, c.model_dim, rng);
  w.dense_embed = Matrix::zeros(1, c.model_dim);
  w.mask_token = Matrix::zeros(1, c.model_dim);
  w.object_token = Matrix::zeros(1, c.model_dim);
  for (double& v : w.mask_token.data()) v = rng.normal();
  for (double& v : w.object_token.data()) v = rng.normal();
  for (std::size_t b = 0; b < c.depth; ++b) {
    w.blocks.push_back(
        TwoWayBlockWeights::random(c.model_dim, c.model_dim, c.model_dim, c.mlp_dim, rng));
  }
  w.hyper = gaussian_matrix(c.model_dim, c.embed_dim, rng);
  w.upscale_map = gaussian_matrix(c.model_dim, c.embed_dim, rng);
  w.pixel_bias = Matrix::zeros(1, 1);
  w.object_head = gaussian_matrix(c.model_dim, 1, rng);
  w.object_bias = Matrix::zeros(1, 1);
  w.upscale = c.upscale;
  return w;
}

DecoderWeights DecoderWeights::zeros(const DecoderConfig& c) {
  DecoderWeights w;
  w.image_proj = Matrix::zeros(c.vision_dim, c.model_dim);
  w.dense_embed = Matrix::zeros(1, c.model_dim);
  w.mask_token = Matrix::zeros(1, c.model_dim);
  w.object_token = Matrix::zeros(1, c.model_dim);
  for (std::size_t b = 0; b < c.depth; ++b) {
    w.blocks.push_back(
        TwoWayBlockWeights::zeros(c.model_dim, c.model_dim, c.model_dim, c.mlp_dim));
  }
  w.hyper = Matrix::zeros(c.model_dim, c.embed_dim);
  w.upscale_map = Matrix::zeros(c.model_dim, c.embed_dim);
  w.pixel_bias = Matrix::zeros(1, 1);
  w.object_head = Matrix::zeros(c.model_dim, 1);
  w.object_bias = Matrix::zeros(1, 1);
  w.upscale = c.upscale;
  return w;
}

void DecoderWeights::validate() const {
  const std::size_t dm = image_proj.cols();
  require(dense_embed.cols() == dm && mask_token.cols() == dm && object_token.cols() == dm,
          "decoder: token widths must equal D_m");
  require(hyper.rows() == dm && upscale_map.rows() == dm && hyper.cols() == upscale_map.cols(),
          "decoder: hyper/upscale maps inconsistent");
  require(object_head.rows() == dm && object_head.cols() == 1, "decoder: object head must be D_m x 1");
  require(upscale >= 1, "decoder: upscale factor must be positive");
  for (const auto& b : blocks) {
    require(b.to_context.wq.rows() == dm && b.to_context.wk.rows() == dm,
            "decoder: block widths must equal D_m");
  }
}

void save_decoder(const std::filesystem::path& dir, const DecoderWeights& w) {
  std::vector<std::pair<std::string, const Matrix*>> tensors;
  DecoderWeights::visit(w, [&](const std::string& name, const Matrix& m) {
    tensors.emplace_back(name, &m);
  });
  save_named_tensors(dir, tensors);
}

DecoderWeights load_decoder(const std::filesystem::path& dir, const DecoderConfig& config) {
  DecoderWeights w = DecoderWeights::zeros(config);
  std::vector<std::pair<std::string, Matrix*>> tensors;
  DecoderWeights::visit(w, [&](const std::string& name, Matrix& m) {
    tensors.emplace_back(name, &m);
  });
  load_named_tensors(dir, tensors);
  w.validate();
  return w;
}

Matrix bilinear_upsample(const Matrix& grid, std::size_t factor) {
  require(factor >= 1, "bilinear_upsample: factor must be positive");
  require(grid.rows() >= 1 && grid.cols() >= 1, "bilinear_upsample: empty grid");
  const std::size_t rows = grid.rows() * factor;
  const std::size_t cols = grid.cols() * factor;
  Matrix out = Matrix::zeros(rows, cols);
  auto source = [factor](std::size_t dst, std::size_t n, std::size_t& lo, std::size_t& hi,
                         double& frac) {
    double s = (static_cast<double>(dst) + 0.5) / static_cast<double>(factor) - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(n - 1));
    lo = static_cast<std::size_t>(std::floor(s));
    hi = std::min(lo + 1, n - 1);
    frac = s - static_cast<double>(lo);
  };
  for (std::size_t y = 0; y < rows; ++y) {
    std::size_t y0, y1;
    double fy;
    source(y, grid.rows(), y0, y1, fy);
    for (std::size_t x = 0; x < cols; ++x) {
      std::size_t x0, x1;
      double fx;
      source(x, grid.cols(), x0, x1, fx);
      const double top = grid(y0, x0) * (1.0 - fx) + grid(y0, x1) * fx;
      const double bottom = grid(y1, x0) * (1.0 - fx) + grid(y1, x1) * fx;
      out(y, x) = top * (1.0 - fy) + bottom * fy;
    }
  }
  return out;
}

ScoreBundle decode(const ProjectedPrompt& prompt, const VisionFeatures& f_v,
                   const DecoderWeights& w) {
  w.validate();
  const std::size_t dm = w.image_proj.cols();
  require(prompt.f_proj.cols() == dm, "decode: f_proj width " +
                                          std::to_string(prompt.f_proj.cols()) + " != D_m " +
                                          std::to_string(dm));
  require(prompt.f_proj.rows() == f_v.frame_count(), "decode: f_proj rows != frame count");
  require(f_v.dim() == w.image_proj.rows(), "decode: vision width " + std::to_string(f_v.dim()) +
                                                " != D_v " + std::to_string(w.image_proj.rows()));

  ScoreBundle out;
  for (std::size_t t = 0; t < f_v.frame_count(); ++t) {
    Matrix image = matmul(f_v.frames[t], w.image_proj);
    for (std::size_t p = 0; p < image.rows(); ++p) {
      auto row = image.row(p);
      for (std::size_t c = 0; c < dm; ++c) row[c] += w.dense_embed(0, c);
    }
    Matrix tokens = Matrix::zeros(3, dm);
    std::copy_n(w.mask_token.data().begin(), dm, tokens.row(0).begin());
    std::copy_n(w.object_token.data().begin(), dm, tokens.row(1).begin());
    std::copy_n(prompt.f_proj.row(t).begin(), dm, tokens.row(2).begin());

    for (const auto& block : w.blocks) two_way_block(block, tokens, image);

    const Matrix hyper = matmul(tokens.gather_rows(std::vector<std::size_t>{0}), w.hyper);
    const Matrix embed = matmul(image, w.upscale_map);
    const Matrix dots = matmul_transposed(hyper, embed);
    Matrix patch = Matrix::zeros(f_v.grid_rows, f_v.grid_cols);
    for (std::size_t p = 0; p < patch.size(); ++p) patch.data()[p] = dots(0, p) + w.pixel_bias(0, 0);

    double frame_logit = w.object_bias(0, 0);
    for (std::size_t c = 0; c < dm; ++c) frame_logit += tokens(1, c) * w.object_head(c, 0);

    Matrix pixel = bilinear_upsample(patch, w.upscale);
    Matrix probs = pixel;
    for (double& v : probs.data()) v = sigmoid(v);

    out.frame_logits.push_back(frame_logit);
    out.frame_scores.push_back(sigmoid(frame_logit));
    out.patch_logits.push_back(std::move(patch));
    out.pixel_logits.push_back(std::move(pixel));
    out.pixel_scores.push_back(std::move(probs));
  }
  return out;
}

LossValue focal_loss(std::span<const double> logits, std::span<const std::uint8_t> targets,
                     double alpha, double gamma) {
  require(logits.size() == targets.size(), "focal_loss: shape mismatch");
  LossValue out;
  out.grad.resize(logits.size());
  if (logits.empty()) return out;
  const double n = static_cast<double>(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double x = logits[i];
    const double p = sigmoid(x);
    const double q = sigmoid(-x);
    if (targets[i]) {
      const double nll = softplus(-x);  // -log p
      const double qg = std::pow(q, gamma);
      out.loss += alpha * qg * nll;
      out.grad[i] = alpha * (-gamma * p * qg * nll - qg * q) / n;
    } else {
      const double nll = softplus(x);  // -log q
      const double pg = std::pow(p, gamma);
      out.loss += (1.0 - alpha) * pg * nll;
      out.grad[i] = (1.0 - alpha) * (pg * p + gamma * pg * q * nll) / n;
    }
  }
  out.loss /= n;
  return out;
}

LossValue dice_loss(std::span<const double> logits, std::span<const std::uint8_t> targets,
                    double smooth) {
  require(logits.size() == targets.size(), "dice_loss: shape mismatch");
  std::vector<double> probs(logits.size());
  double overlap = 0.0, prob_sum = 0.0, target_sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = sigmoid(logits[i]);
    const double t = targets[i] ? 1.0 : 0.0;
    overlap += probs[i] * t;
    prob_sum += probs[i];
    target_sum += t;
  }
  const double num = 2.0 * overlap + smooth;
  const double den = prob_sum + target_sum + smooth;
  LossValue out;
  out.loss = 1.0 - num / den;
  out.grad.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double t = targets[i] ? 1.0 : 0.0;
    const double d_prob = -(2.0 * t * den - num) / (den * den);
    out.grad[i] = d_prob * probs[i] * (1.0 - probs[i]);
  }
  return out;
}

LossValue bce_loss(std::span<const double> logits, std::span<const std::uint8_t> targets) {
  require(logits.size() == targets.size(), "bce_loss: shape mismatch");
  LossValue out;
  out.grad.resize(logits.size());
  if (logits.empty()) return out;
  const double n = static_cast<double>(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double t = targets[i] ? 1.0 : 0.0;
    out.loss += softplus(logits[i]) - t * logits[i];
    out.grad[i] = (sigmoid(logits[i]) - t) / n;
  }
  out.loss /= n;
  return out;
}

void LossConfig::validate() const {
  for (double v : {seg, focal, dice, object}) {
    require(std::isfinite(v) && v >= 0.0, "loss weights must be finite and nonnegative");
  }
  require(focal_gamma >= 0.0, "focal gamma must be nonnegative");
  require(focal_alpha >= 0.0 && focal_alpha <= 1.0, "focal alpha must lie in [0, 1]");
}

SegLoss seg_loss(const ScoreBundle& bundle, std::span<const std::uint8_t> frame_targets,
                 std::span<const std::uint8_t> pixel_targets, const LossConfig& config) {
  config.validate();
  require(frame_targets.size() == bundle.frame_count(), "seg_loss: frame target length mismatch");
  std::vector<double> pixels;
  for (const auto& m : bundle.pixel_logits) pixels.insert(pixels.end(), m.data().begin(), m.data().end());
  require(pixel_targets.size() == pixels.size(), "seg_loss: pixel target size " +
                                                     std::to_string(pixel_targets.size()) +
                                                     " != logit count " +
                                                     std::to_string(pixels.size()));

  const LossValue focal = focal_loss(pixels, pixel_targets, config.focal_alpha, config.focal_gamma);
  const LossValue dice = dice_loss(pixels, pixel_targets);
  const LossValue object = bce_loss(bundle.frame_logits, frame_targets);

  SegLoss out;
  out.focal = focal.loss;
  out.dice = dice.loss;
  out.object = object.loss;
  const double inner = config.focal * focal.loss + config.dice * dice.loss + config.object * object.loss;
  out.loss = config.seg * inner;
  out.pixel_grad.resize(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    out.pixel_grad[i] = config.seg * (config.focal * focal.grad[i] + config.dice * dice.grad[i]);
  }
  out.frame_grad.resize(object.grad.size());
  for (std::size_t i = 0; i < object.grad.size(); ++i) {
    out.frame_grad[i] = config.seg * (config.object * object.grad[i]);
  }
  return out;
}

}  // namespace zsvad
