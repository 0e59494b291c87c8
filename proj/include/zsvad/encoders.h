// SPDX-FileCopyrightText: © 2026 The zsvad Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Deterministic stand-ins for the vision backbone and the category text
// encoder, plus raw-frame and feature-file ingestion.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "zsvad/numerics.h"
#include "zsvad/token_compression.h"

namespace zsvad {

/// Raw frames, values in [0, 1], laid out [t][c][y][x].
struct FrameTensor {
  std::size_t frames = 0;
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  double& at(std::size_t t, std::size_t c, std::size_t y, std::size_t x) {
    return data[((t * channels + c) * height + y) * width + x];
  }
  double at(std::size_t t, std::size_t c, std::size_t y, std::size_t x) const {
    return data[((t * channels + c) * height + y) * width + x];
  }
  static FrameTensor zeros(std::size_t t, std::size_t c, std::size_t h, std::size_t w);
  /// Frames [begin, begin + count) as a new tensor.
  FrameTensor slice(std::size_t begin, std::size_t count) const;
};

struct VisionFeatures {
  /// One N_p x D_v matrix per frame.
  std::vector<Matrix> frames;
  std::size_t grid_rows = 0;
  std::size_t grid_cols = 0;

  std::size_t frame_count() const noexcept { return frames.size(); }
  std::size_t patches() const noexcept { return grid_rows * grid_cols; }
  std::size_t dim() const noexcept { return frames.empty() ? 0 : frames.front().cols(); }
  /// All frames stacked into a (T * N_p) x D_v token set with its grid.
  TokenSet tokens() const;
};

struct CategoryFeatures {
  Matrix features;
  std::vector<std::string> categories;
};

struct VisionEncoderConfig {
  std::size_t patch_size = 16;
  std::size_t dim = 64;
  std::uint64_t seed = 0;
};

/// Patch flatten (channel, row, col order; partial edge patches zero-padded)
/// followed by a fixed seeded linear map to `dim`. Linear in pixel values.
class VisionEncoder {
 public:
  VisionEncoder(const VisionEncoderConfig& config, std::size_t channels);

  VisionFeatures encode(const FrameTensor& frames) const;
  /// (channels * P * P) x dim projection.
  const Matrix& projection() const noexcept { return projection_; }
  const VisionEncoderConfig& config() const noexcept { return config_; }
  std::size_t channels() const noexcept { return channels_; }

 private:
  VisionEncoderConfig config_;
  std::size_t channels_;
  Matrix projection_;
};

VisionFeatures encode_vision(const FrameTensor& frames, const VisionEncoderConfig& config);

/// Hash-seeded Gaussian embedding of each category, normalized to unit length.
CategoryFeatures encode_text(std::span<const std::string> categories, std::size_t dim,
                             std::uint64_t seed);

/// Raw video blob: u64 T, C, H, W (little-endian) then T*C*H*W bytes.
FrameTensor read_raw_video(const std::filesystem::path& path);
void write_raw_video(const std::filesystem::path& path, const FrameTensor& frames);
/// Binary PGM (P5) or PPM (P6) with maxval <= 255.
FrameTensor read_pnm(const std::filesystem::path& path);
/// Single-frame images concatenated in time order; all must agree in shape.
FrameTensor read_pnm_sequence(std::span<const std::filesystem::path> paths);

/// Features as a (T*N_p) x D_v tensor file plus `<path>.json` with the grid.
void write_vision_features(const std::filesystem::path& path, const VisionFeatures& features);
VisionFeatures read_vision_features(const std::filesystem::path& path);

}  // namespace zsvad
