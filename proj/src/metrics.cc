// SPDX-FileCopyrightText: © 2026 The zsvad Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "zsvad/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "zsvad/errors.h"

namespace zsvad {

namespace {

void check_inputs(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  require(scores.size() == labels.size(), "metric: score/label length mismatch");
  for (double s : scores) require(std::isfinite(s), "metric: non-finite score");
  for (auto l : labels) require(l <= 1, "metric: labels must be 0 or 1");
}

}  // namespace

BinaryMask resample_nearest(const BinaryMask& mask, std::size_t rows, std::size_t cols) {
  require(mask.rows >= 1 && mask.cols >= 1 && mask.data.size() == mask.rows * mask.cols,
          "resample_nearest: malformed mask");
  if (rows == mask.rows && cols == mask.cols) return mask;
  BinaryMask out{rows, cols, std::vector<std::uint8_t>(rows * cols)};
  for (std::size_t y = 0; y < rows; ++y) {
    const auto sy = std::min(mask.rows - 1, static_cast<std::size_t>(
                                                (static_cast<double>(y) + 0.5) * mask.rows / rows));
    for (std::size_t x = 0; x < cols; ++x) {
      const auto sx = std::min(mask.cols - 1, static_cast<std::size_t>(
                                                  (static_cast<double>(x) + 0.5) * mask.cols / cols));
      out.data[y * cols + x] = mask(sy, sx);
    }
  }
  return out;
}

void EvalRecord::validate() const {
  require(frame_scores.size() == frame_labels.size(),
          "record '" + video_id + "': score/label length mismatch");
  for (auto l : frame_labels) require(l <= 1, "record '" + video_id + "': labels must be 0 or 1");
  if (!pixel_scores.empty() || !pixel_labels.empty()) {
    require(pixel_scores.size() == pixel_labels.size(),
            "record '" + video_id + "': pixel score/label frame counts differ");
  }
}

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_inputs(scores, labels);
  const std::size_t n = scores.size();
  const std::size_t positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) {
    throw UndefinedMetric("undefined AUC: both classes must be present");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // 1-based ranks i+1..j share their average.
    const double average_rank = static_cast<double>(i + 1 + j) / 2.0;
    for (std::size_t m = i; m < j; ++m)
      if (labels[order[m]]) positive_rank_sum += average_rank;
    i = j;
  }
  const double p = static_cast<double>(positives);
  const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(negatives));
}

double average_precision(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_inputs(scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  std::vector<double> precisions;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (labels[order[r]]) {
      ++hits;
      precisions.push_back(static_cast<double>(hits) / static_cast<double>(r + 1));
    }
  }
  if (precisions.empty()) throw UndefinedMetric("undefined AP: no positive labels");
  std::sort(precisions.begin(), precisions.end());
  double total = 0.0;
  for (double v : precisions) total += v;
  return total / static_cast<double>(precisions.size());
}

double pixel_auc(std::span<const EvalRecord> records) {
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  for (const auto& rec : records) {
    rec.validate();
    require(rec.has_pixels(), "pixel_auc: record '" + rec.video_id + "' has no pixel data");
    for (std::size_t t = 0; t < rec.pixel_scores.size(); ++t) {
      const Matrix& s = rec.pixel_scores[t];
      const BinaryMask m = resample_nearest(rec.pixel_labels[t], s.rows(), s.cols());
      scores.insert(scores.end(), s.data().begin(), s.data().end());
      labels.insert(labels.end(), m.data.begin(), m.data.end());
    }
  }
  return roc_auc(scores, labels);
}

MetricsReport evaluate(std::span<const EvalRecord> records) {
  MetricsReport report;
  report.videos = records.size();
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  bool pixels = !records.empty();
  for (const auto& rec : records) {
    rec.validate();
    scores.insert(scores.end(), rec.frame_scores.begin(), rec.frame_scores.end());
    labels.insert(labels.end(), rec.frame_labels.begin(), rec.frame_labels.end());
    pixels = pixels && rec.has_pixels();
  }
  report.frames = scores.size();
  if (records.empty()) {
    report.notes.push_back("no videos");
    return report;
  }
  try {
    report.frame_auc = roc_auc(scores, labels);
  } catch (const UndefinedMetric& e) {
    report.notes.push_back(std::string("frame_auc: ") + e.message());
  }
  try {
    report.frame_ap = average_precision(scores, labels);
  } catch (const UndefinedMetric& e) {
    report.notes.push_back(std::string("frame_ap: ") + e.message());
  }
  if (pixels) {
    try {
      report.pixel_auc = pixel_auc(records);
    } catch (const UndefinedMetric& e) {
      report.notes.push_back(std::string("pixel_auc: ") + e.message());
    }
  } else {
    report.notes.push_back("pixel_auc: pixel labels not available for every video");
  }
  return report;
}

nlohmann::json to_json(const MetricsReport& report) {
  auto opt = [](const std::optional<double>& v) -> nlohmann::json {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  return {{"videos", report.videos},       {"frames", report.frames},
          {"frame_auc", opt(report.frame_auc)}, {"frame_ap", opt(report.frame_ap)},
          {"pixel_auc", opt(report.pixel_auc)}, {"notes", report.notes}};
}

std::string render_score_csv(std::span<const EvalRecord> records) {
  std::string out = "video_id,frame,score,label\n";
  char buf[64];
  for (const auto& rec : records) {
    for (std::size_t t = 0; t < rec.frame_scores.size(); ++t) {
      std::snprintf(buf, sizeof buf, ",%zu,%.17g,%u\n", t, rec.frame_scores[t],
                    static_cast<unsigned>(rec.frame_labels[t]));
      out += rec.video_id;
      out += buf;
    }
  }
  return out;
}

}  // namespace zsvad
