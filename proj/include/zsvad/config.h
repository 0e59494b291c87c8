// SPDX-FileCopyrightText: © 2026 The zsvad Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Pipeline configuration. The file format is a flat key-value text file
// with one section per module:
//
//   # comment
//   [compression]
//   k = 8
//   ratio = 0.2
//
// Every key is optional and defaults to the values below; unknown sections
// or keys are rejected. `render_config` writes all keys in a fixed order and
// its FNV-1a hash identifies the configuration in output provenance. The
// worker count does not change outputs and is left out of the hash.

#include <cstdint>
#include <filesystem>
#include <string>

#include "zsvad/decoder.h"
#include "zsvad/encoders.h"
#include "zsvad/exposure_sampler.h"
#include "zsvad/projector.h"
#include "zsvad/semantic_provider.h"
#include "zsvad/token_compression.h"

namespace zsvad {

enum class ProviderKind { kSynthetic, kFixture, kSubprocess };

struct PipelineConfig {
  // [pipeline]
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  bool oracle = false;
  ProviderKind provider = ProviderKind::kSynthetic;
  std::string fixture_path;
  std::string provider_command;
  std::size_t provider_timeout_ms = 10000;
  PromptTemplate prompt_template = PromptTemplate::kFindAnomaly;
  std::string projector_weights;
  std::string decoder_weights;

  // [sampler]
  SamplerConfig sampler;
  // [compression]
  CompressionConfig compression;
  // [encoder]
  std::size_t patch_size = 16;
  std::size_t vision_dim = 64;
  std::size_t text_dim = 64;
  // [semantic]
  std::size_t semantic_dim = 256;
  // [projector]
  std::size_t latent_dim = 64;
  std::size_t hidden_dim = 64;
  std::size_t model_dim = 64;
  std::size_t queries = 48;
  std::size_t projector_depth = 2;
  std::size_t projector_mlp_dim = 128;
  // [decoder]
  std::size_t embed_dim = 32;
  std::size_t decoder_depth = 2;
  std::size_t decoder_mlp_dim = 128;
  std::size_t upscale = 4;
  // [loss]
  LossConfig loss;

  /// Cross-module consistency; throws ConfigError.
  void validate() const;

  VisionEncoderConfig vision_encoder() const;
  std::uint64_t text_seed() const;
  std::uint64_t provider_seed() const;
  ProjectorConfig projector() const;
  DecoderConfig decoder() const;
};

PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::filesystem::path& path);
std::string render_config(const PipelineConfig& config);
/// Applies one "section.key=value" override.
void apply_override(PipelineConfig& config, const std::string& assignment);
std::uint64_t config_hash(const PipelineConfig& config);

}  // namespace zsvad
