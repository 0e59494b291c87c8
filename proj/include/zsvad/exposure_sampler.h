// SPDX-FileCopyrightText: © 2026 The zsvad Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Pseudo-anomaly sampler: turns segmentation-style samples (frames, object
// mask, description) into anomaly-detection samples by injecting categories
// taken from other samples and randomly designating each sample as
// anomalous or normal.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "zsvad/numerics.h"

namespace zsvad {

/// Uncompressed COCO-style run lengths. Runs alternate 0/1 starting with a
/// (possibly empty) 0-run. Each frame is scanned column-major (down each
/// column, then left to right) and frames are concatenated in time order.
std::vector<std::uint64_t> rle_encode(std::span<const std::uint8_t> mask, std::size_t frames,
                                      std::size_t height, std::size_t width);
/// Inverse of rle_encode; returns the mask row-major as [t][y][x].
std::vector<std::uint8_t> rle_decode(std::span<const std::uint64_t> counts, std::size_t frames,
                                     std::size_t height, std::size_t width);

struct SourceSample {
  std::string id;
  std::string visual_ref;
  std::size_t frames = 1;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint64_t> mask_counts;
  std::string description;

  /// Throws DataError when the mask does not cover frames x height x width
  /// or the description is empty.
  void validate() const;
  std::vector<std::uint8_t> mask() const {
    return rle_decode(mask_counts, frames, height, width);
  }
};

enum class NormalBranch {
  /// Normal samples carry only irrelevant categories.
  kProse,
  /// Normal samples carry exactly their own description with negative labels.
  kEquation,
};

struct SamplerConfig {
  double anomaly_probability = 0.5;
  std::size_t max_categories = 30;
  std::uint64_t seed = 0;
  NormalBranch normal_branch = NormalBranch::kProse;

  void validate() const;
};

struct ExposureSample {
  SourceSample base;
  std::vector<std::string> categories;
  std::vector<std::uint8_t> frame_labels;
  bool is_anomalous = false;
  std::size_t k_e = 0;
  std::uint64_t sub_seed = 0;
};

/// Distinct descriptions of a source list in first-appearance order.
class CategoryPool {
 public:
  explicit CategoryPool(std::span<const SourceSample> sources);

  std::size_t distinct() const noexcept { return names_.size(); }
  /// Number of descriptions that differ from sample i's own.
  std::size_t available_for(std::size_t i) const;
  /// `count` distinct descriptions other than s_i, uniformly without
  /// replacement, in uniformly random order.
  std::vector<std::string> draw(std::size_t i, std::size_t count, Rng& rng) const;

 private:
  std::vector<std::string> names_;
  std::vector<std::size_t> name_of_source_;
};

/// K_E - 1 irrelevant categories for sample i.
std::vector<std::string> sample_irrelevant(std::span<const SourceSample> sources, std::size_t i,
                                           std::size_t k_e, Rng& rng);

/// Flips the anomaly coin with probability `p` and assembles the sample.
ExposureSample designate(const SourceSample& sample, std::span<const std::string> irrelevant,
                         double p, Rng& rng, NormalBranch branch = NormalBranch::kProse);

/// Assembles a sample whose designation is already decided.
ExposureSample assemble_exposure(const SourceSample& sample,
                                 std::span<const std::string> irrelevant, bool anomalous,
                                 Rng& rng, NormalBranch branch = NormalBranch::kProse);

/// One output per source. Sample i draws from its own generator seeded with
/// splitmix64(seed ^ i): K_E uniform on {1..max}, then the coin, then the
/// irrelevant categories (K_E - 1 for anomalous samples, K_E for normal
/// ones so that |c_i| == K_E on both branches).
std::vector<ExposureSample> build_exposure_dataset(std::span<const SourceSample> sources,
                                                   const SamplerConfig& config);

/// Pixel supervision target: the source mask for anomalous samples, all
/// zeros for normal ones.
std::vector<std::uint8_t> pixel_target(const ExposureSample& sample);

nlohmann::json to_json(const SourceSample& s);
SourceSample source_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExposureSample& s, const SamplerConfig& config);
ExposureSample exposure_from_json(const nlohmann::json& j);

std::vector<SourceSample> read_source_manifest(const std::filesystem::path& path);
std::string render_exposure_manifest(std::span<const ExposureSample> samples,
                                     const SamplerConfig& config);

}  // namespace zsvad
