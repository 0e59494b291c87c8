// SPDX-FileCopyrightText: © 2026 The zsvad Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

// End-to-end orchestration behind the command-line subcommands.
//
// Detect manifest (JSON-lines, one video per line):
//   video_id      string, unique
//   visual_ref    raw video blob, PGM/PPM image, or directory of PGM/PPM
//                 frames; relative paths resolve against the manifest
//   features_ref  optional precomputed vision feature file (replaces
//                 encoding of visual_ref)
//   categories    prompted category strings
//   frame_labels  optional 0/1 per frame
//   mask          optional {"counts": [...]} RLE over frames x height x width
//   frames, height, width
//   synthetic     optional {"pattern", "background_level", "amplitude", "noise"}
//
// Detect output directory:
//   scores/<id>.json        frame scores/logits, stage digests, provenance
//   scores/<id>.pixels.bin  (T * H') x W' pixel scores
//   scores.csv              video_id,frame,score,label
//   metrics.json            metrics report with provenance

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "zsvad/config.h"
#include "zsvad/decoder.h"
#include "zsvad/encoders.h"
#include "zsvad/metrics.h"
#include "zsvad/semantic_provider.h"
#include "zsvad/synthetic.h"

namespace zsvad {

/// Per-stage implementation versions recorded in every output.
const std::map<std::string, std::string>& stage_versions();

struct SyntheticInfo {
  BackgroundPattern pattern = BackgroundPattern::kUniform;
  double background_level = 0.0;
  double amplitude = 0.0;
  double noise = 0.0;
};

struct DetectItem {
  std::string video_id;
  std::string visual_ref;
  std::string features_ref;
  std::vector<std::string> categories;
  std::vector<std::uint8_t> frame_labels;
  std::vector<std::uint64_t> mask_counts;
  std::size_t frames = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::optional<SyntheticInfo> synthetic;
};

nlohmann::json to_json(const DetectItem& item);
DetectItem detect_item_from_json(const nlohmann::json& j);
/// Items sorted by video id; relative refs are resolved against the
/// manifest's directory. Duplicate ids raise DataError.
std::vector<DetectItem> read_detect_manifest(const std::filesystem::path& path);
std::string render_detect_manifest(const std::vector<DetectItem>& items);

/// Makes an id safe to use as a file name.
std::string sanitize_id(const std::string& id);

/// Provider that reports, in coordinate 0, the largest brightness offset
/// from the known background among the compressed tokens; other
/// coordinates are zero.
class OracleProvider final : public SemanticProvider {
 public:
  OracleProvider(std::vector<double> brightness, std::map<std::string, double> background,
                 std::size_t dim);
  std::string id() const override { return "oracle"; }
  std::size_t dim() const override { return dim_; }
  std::vector<double> query(const SemanticRequest& request) const override;

 private:
  std::vector<double> brightness_;
  std::map<std::string, double> background_;
  std::size_t dim_;
};

/// Verification fixture for synthetic scenes: a provider plus a decoder
/// preset under which the patch logit equals gain * (patch mean - known
/// background level) and the frame logit tracks the largest such offset.
/// Not a trained model.
struct OracleWiring {
  std::unique_ptr<SemanticProvider> provider;
  /// One preset per video id; only the background offset differs.
  std::map<std::string, DecoderWeights> decoders;
  /// Linear functional on vision features returning the patch mean.
  std::vector<double> brightness;
};

/// Throws ConfigError when any item lacks synthetic ground truth or the
/// configuration cannot host the preset.
OracleWiring oracle_provider_wiring(const PipelineConfig& config, const VisionEncoder& encoder,
                                    const std::vector<DetectItem>& items);

struct VideoResult {
  std::string video_id;
  ScoreBundle bundle;
  EvalRecord record;
  nlohmann::json summary;
};

struct DetectSummary {
  std::vector<VideoResult> videos;
  MetricsReport report;
};

/// Optional hook for messages such as the untrained-weights notice.
using Notifier = std::function<void(const std::string&)>;

std::vector<ExposureSample> run_sampler(const PipelineConfig& config,
                                        const std::filesystem::path& sources,
                                        const std::filesystem::path& output);

CompressionResult run_compress(const PipelineConfig& config, const std::filesystem::path& tokens,
                               const std::filesystem::path& output);

DetectSummary run_detect(const PipelineConfig& config, const std::filesystem::path& manifest,
                         const std::filesystem::path& out_dir, const Notifier& notify = {});

/// Recomputes metrics from a detect output directory against the manifest's
/// labels. `scores_dir` is either a detect output directory or its
/// `scores` subdirectory. Every score file's provenance is verified first.
MetricsReport run_eval(const PipelineConfig& config, const std::filesystem::path& manifest,
                       const std::filesystem::path& scores_dir,
                       const std::filesystem::path& out_dir);

struct SynthOptions {
  std::size_t count = 20;
  std::size_t frames = 16;
  std::size_t height = 64;
  std::size_t width = 64;
};

/// Writes videos/<id>.raw, manifest.jsonl (detect input), sources.jsonl
/// (sampler input) and synthetic.ini (configuration for the oracle run).
std::vector<SyntheticScene> run_synth(const PipelineConfig& config, const SynthOptions& options,
                                      const std::filesystem::path& out_dir);

/// Adds {"config_hash", "stage_versions", "content_digest"} under
/// "provenance"; the digest covers the whole document except itself.
void seal(nlohmann::json& doc, const PipelineConfig& config);
/// Throws DataError when the digest no longer matches the content.
void verify_seal(const nlohmann::json& doc);

}  // namespace zsvad
