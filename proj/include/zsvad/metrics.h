// SPDX-FileCopyrightText: © 2026 The zsvad Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "zsvad/numerics.h"

namespace zsvad {

struct BinaryMask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> data;

  std::uint8_t operator()(std::size_t r, std::size_t c) const noexcept { return data[r * cols + c]; }
};

/// Nearest-neighbor resize sampling the source at each target pixel center.
BinaryMask resample_nearest(const BinaryMask& mask, std::size_t rows, std::size_t cols);

struct EvalRecord {
  std::string video_id;
  std::vector<double> frame_scores;
  std::vector<std::uint8_t> frame_labels;
  /// Optional; when present, one score map and one label mask per frame.
  std::vector<Matrix> pixel_scores;
  std::vector<BinaryMask> pixel_labels;

  void validate() const;
  bool has_pixels() const noexcept { return !pixel_scores.empty() && !pixel_labels.empty(); }
};

/// ROC-AUC from average ranks; a tied positive/negative pair counts 1/2.
/// Throws UndefinedMetric unless both classes are present.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Mean over positives of precision at the positive's rank, ranking by
/// descending score and then ascending index. The per-positive precisions
/// are summed in ascending order so the result does not depend on
/// traversal order. Throws UndefinedMetric without positives.
double average_precision(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Micro ROC-AUC over every pixel of every frame, labels resampled to the
/// score resolution.
double pixel_auc(std::span<const EvalRecord> records);

struct MetricsReport {
  std::size_t videos = 0;
  std::size_t frames = 0;
  std::optional<double> frame_auc;
  std::optional<double> frame_ap;
  std::optional<double> pixel_auc;
  std::vector<std::string> notes;
};

/// Frame metrics over concatenated frames of all records. Undefined metrics
/// are left empty with a note instead of failing.
MetricsReport evaluate(std::span<const EvalRecord> records);

nlohmann::json to_json(const MetricsReport& report);

/// "video_id,frame,score,label" rows for plotting score curves.
std::string render_score_csv(std::span<const EvalRecord> records);

}  // namespace zsvad
