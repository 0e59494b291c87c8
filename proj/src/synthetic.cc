// SPDX-FileCopyrightText: © 2026 The zsvad Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "zsvad/synthetic.h"

#include <algorithm>
#include <cstdio>

#include "zsvad/errors.h"

namespace zsvad {

std::string to_string(BackgroundPattern p) {
  switch (p) {
    case BackgroundPattern::kUniform: return "uniform";
    case BackgroundPattern::kChecker: return "checker";
    case BackgroundPattern::kStripes: return "stripes";
  }
  return "uniform";
}

BackgroundPattern parse_pattern(const std::string& name) {
  if (name == "uniform") return BackgroundPattern::kUniform;
  if (name == "checker") return BackgroundPattern::kChecker;
  if (name == "stripes") return BackgroundPattern::kStripes;
  throw DataError("unknown background pattern '" + name + "'");
}

void SyntheticScene::validate() const {
  require(frames >= 1 && height >= 1 && width >= 1, "synthetic scene must be nonempty");
  if (!rect) return;
  const PlantedRect& r = *rect;
  require(r.width >= 1 && r.height >= 1, "planted rectangle must be nonempty");
  require(r.first_frame + r.frame_count <= frames, "planted rectangle outlives the video");
  for (std::size_t i = 0; i < r.frame_count; ++i) {
    const auto x = static_cast<std::int64_t>(r.x) + r.dx * static_cast<std::int64_t>(i);
    const auto y = static_cast<std::int64_t>(r.y) + r.dy * static_cast<std::int64_t>(i);
    require(x >= 0 && y >= 0 && x + static_cast<std::int64_t>(r.width) <= static_cast<std::int64_t>(width) &&
                y + static_cast<std::int64_t>(r.height) <= static_cast<std::int64_t>(height),
            "planted rectangle leaves the frame at t=" + std::to_string(r.first_frame + i));
  }
}

double SyntheticScene::background(std::size_t y, std::size_t x) const {
  switch (pattern) {
    case BackgroundPattern::kUniform:
      return background_level;
    case BackgroundPattern::kChecker:
      return background_level + ((((y / 2) + (x / 2)) % 2 == 0) ? amplitude : -amplitude);
    case BackgroundPattern::kStripes:
      return background_level + ((x % 2 == 0) ? amplitude : -amplitude);
  }
  return background_level;
}

SyntheticVideo generate_synthetic(const SyntheticScene& scene) {
  scene.validate();
  Rng rng(scene.seed);
  SyntheticVideo out;
  out.frames = FrameTensor::zeros(scene.frames, 1, scene.height, scene.width);
  out.frame_labels.assign(scene.frames, 0);
  out.masks.assign(scene.frames, BinaryMask{scene.height, scene.width,
                                            std::vector<std::uint8_t>(scene.height * scene.width, 0)});
  for (std::size_t t = 0; t < scene.frames; ++t) {
    for (std::size_t y = 0; y < scene.height; ++y)
      for (std::size_t x = 0; x < scene.width; ++x)
        out.frames.at(t, 0, y, x) = scene.background(y, x) + scene.noise * rng.normal();
    if (scene.rect && t >= scene.rect->first_frame &&
        t < scene.rect->first_frame + scene.rect->frame_count) {
      const PlantedRect& r = *scene.rect;
      const auto i = static_cast<std::int64_t>(t - r.first_frame);
      const auto x0 = static_cast<std::size_t>(static_cast<std::int64_t>(r.x) + r.dx * i);
      const auto y0 = static_cast<std::size_t>(static_cast<std::int64_t>(r.y) + r.dy * i);
      for (std::size_t y = y0; y < y0 + r.height; ++y) {
        for (std::size_t x = x0; x < x0 + r.width; ++x) {
          out.frames.at(t, 0, y, x) = r.level + scene.noise * rng.normal();
          out.masks[t].data[y * scene.width + x] = 1;
        }
      }
      out.frame_labels[t] = 1;
    }
  }
  for (double& v : out.frames.data) v = std::clamp(v, 0.0, 1.0);
  return out;
}

std::vector<SyntheticScene> synthetic_suite(std::size_t count, std::size_t frames,
                                            std::size_t height, std::size_t width,
                                            std::uint64_t seed) {
  std::vector<SyntheticScene> scenes;
  scenes.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(splitmix64(seed ^ i));
    SyntheticScene s;
    char id[32];
    std::snprintf(id, sizeof id, "scene_%03zu", i);
    s.id = id;
    s.frames = frames;
    s.height = height;
    s.width = width;
    s.pattern = static_cast<BackgroundPattern>(i % 3);
    s.background_level = 0.2 + 0.3 * rng.uniform();
    s.amplitude = 0.1;
    s.noise = 0.02;
    s.seed = rng.next();
    if (i % 4 != 3) {
      const std::size_t side_max = std::min<std::size_t>(24, std::min(height, width) / 2);
      const std::size_t side_min = std::min<std::size_t>(16, side_max);
      PlantedRect r;
      r.width = side_min + rng.uniform_index(side_max - side_min + 1);
      r.height = side_min + rng.uniform_index(side_max - side_min + 1);
      r.frame_count = std::max<std::size_t>(1, frames / 4 + rng.uniform_index(frames / 2 + 1));
      r.first_frame = rng.uniform_index(frames - r.frame_count + 1);
      r.dx = static_cast<std::int64_t>(rng.uniform_index(3)) - 1;
      r.dy = static_cast<std::int64_t>(rng.uniform_index(3)) - 1;
      // Start so the whole trajectory stays inside the frame.
      const auto span = static_cast<std::int64_t>(r.frame_count - 1);
      const auto lo_x = std::max<std::int64_t>(0, -r.dx * span);
      const auto hi_x = static_cast<std::int64_t>(width - r.width) - std::max<std::int64_t>(0, r.dx * span);
      const auto lo_y = std::max<std::int64_t>(0, -r.dy * span);
      const auto hi_y = static_cast<std::int64_t>(height - r.height) - std::max<std::int64_t>(0, r.dy * span);
      if (hi_x < lo_x) r.dx = 0;
      if (hi_y < lo_y) r.dy = 0;
      const auto lx = std::max<std::int64_t>(0, -r.dx * span);
      const auto hx = static_cast<std::int64_t>(width - r.width) - std::max<std::int64_t>(0, r.dx * span);
      const auto ly = std::max<std::int64_t>(0, -r.dy * span);
      const auto hy = static_cast<std::int64_t>(height - r.height) - std::max<std::int64_t>(0, r.dy * span);
      r.x = static_cast<std::size_t>(lx + static_cast<std::int64_t>(rng.uniform_index(static_cast<std::uint64_t>(hx - lx + 1))));
      r.y = static_cast<std::size_t>(ly + static_cast<std::int64_t>(rng.uniform_index(static_cast<std::uint64_t>(hy - ly + 1))));
      r.level = 0.85 + 0.1 * rng.uniform();
      s.rect = r;
    }
    scenes.push_back(s);
  }
  return scenes;
}

}  // namespace zsvad
