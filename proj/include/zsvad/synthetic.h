// SPDX-FileCopyrightText: © 2026 The zsvad Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Procedural grayscale videos with an optional bright moving rectangle and
// exact ground truth.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "zsvad/encoders.h"
#include "zsvad/metrics.h"
#include "zsvad/numerics.h"

namespace zsvad {

enum class BackgroundPattern {
  kUniform,
  /// 2x2-pixel checkerboard at level +/- amplitude.
  kChecker,
  /// Vertical stripes, 1 pixel wide, alternating level +/- amplitude.
  kStripes,
};

std::string to_string(BackgroundPattern p);
BackgroundPattern parse_pattern(const std::string& name);

/// Rectangle of `width` x `height` whose top-left corner is (x, y) at frame
/// `first_frame` and moves by (dx, dy) per frame while present.
struct PlantedRect {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t width = 0;
  std::size_t height = 0;
  std::int64_t dx = 0;
  std::int64_t dy = 0;
  std::size_t first_frame = 0;
  std::size_t frame_count = 0;
  double level = 0.95;
};

struct SyntheticScene {
  std::string id;
  std::size_t frames = 16;
  std::size_t height = 64;
  std::size_t width = 64;
  BackgroundPattern pattern = BackgroundPattern::kUniform;
  double background_level = 0.3;
  double amplitude = 0.1;
  /// Standard deviation of additive Gaussian pixel noise.
  double noise = 0.02;
  std::optional<PlantedRect> rect;
  std::uint64_t seed = 0;

  /// Throws ContractViolation when the rectangle leaves the frame.
  void validate() const;
  /// Background value at (y, x) without noise.
  double background(std::size_t y, std::size_t x) const;
};

struct SyntheticVideo {
  FrameTensor frames;  // 1 channel, values clamped to [0, 1]
  std::vector<std::uint8_t> frame_labels;
  std::vector<BinaryMask> masks;
};

/// Renders the scene; noise comes from an Rng seeded with `scene.seed`.
SyntheticVideo generate_synthetic(const SyntheticScene& scene);

/// `count` scenes with varied patterns, levels and trajectories. Every
/// fourth scene has no rectangle.
std::vector<SyntheticScene> synthetic_suite(std::size_t count, std::size_t frames,
                                            std::size_t height, std::size_t width,
                                            std::uint64_t seed);

}  // namespace zsvad
