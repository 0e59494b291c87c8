// SPDX-FileCopyrightText: © 2026 The zsvad Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zsvad/numerics.h"
#include "zsvad/token_compression.h"

namespace zsvad {

/// Segmentation marker whose embedding is the semantic feature.
inline constexpr std::string_view kSegToken = "<SEG>";

enum class PromptTemplate {
  kFindAnomaly = 0,
  kAnomalyTypes = 1,
  /// Picks one of the concrete templates with the supplied generator.
  kRandom = -1,
};

inline constexpr std::size_t kPromptTemplateCount = 2;

struct PromptSpec {
  PromptTemplate template_id = PromptTemplate::kFindAnomaly;
  std::vector<std::string> categories;
  std::string rendered;
};

/// Categories are joined with ", " in the given order.
PromptSpec render_prompt(std::span<const std::string> categories, PromptTemplate template_id,
                         Rng& rng);

struct SemanticFeature {
  std::vector<double> values;
  std::string provider_id;
  PromptSpec prompt;
};

struct SemanticRequest {
  std::string_view sample_id;
  const CompressionResult& visual;
  const PromptSpec& prompt;
};

/// Source of the per-clip semantic feature. Implementations must tolerate
/// concurrent `query` calls.
class SemanticProvider {
 public:
  virtual ~SemanticProvider() = default;
  virtual std::string id() const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::vector<double> query(const SemanticRequest& request) const = 0;
};

/// Validates the provider's answer (dimension, finiteness) and wraps it.
SemanticFeature extract_semantic(std::string_view sample_id, const CompressionResult& visual,
                                 const PromptSpec& prompt, const SemanticProvider& provider);

/// f_sem = mean(Z') * A + mean_k e(c_k).
///
/// A is a seeded Gaussian token_dim x dim matrix (std 1/sqrt(token_dim));
/// e(c) is a Gaussian vector (std 1/sqrt(dim)) seeded by
/// splitmix64(fnv1a64(c) ^ seed ^ kBagSalt). Categories are summed in sorted
/// order, so the output ignores their order.
class SyntheticProvider final : public SemanticProvider {
 public:
  static constexpr std::uint64_t kBagSalt = 0x5eed'ba9'0f'ca75ULL;

  SyntheticProvider(std::size_t dim, std::size_t token_dim, std::uint64_t seed);

  std::string id() const override { return "synthetic"; }
  std::size_t dim() const override { return dim_; }
  std::vector<double> query(const SemanticRequest& request) const override;

  /// Frobenius norm of A: bounds |f(Z'+D) - f(Z')| by C * max_row_norm(D).
  double lipschitz_bound() const;
  const Matrix& visual_map() const noexcept { return visual_map_; }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
  Matrix visual_map_;
};

/// Returns stored vectors keyed by sample id; misses raise FixtureNotFound.
class FixtureProvider final : public SemanticProvider {
 public:
  FixtureProvider(std::map<std::string, std::vector<double>> vectors, std::size_t dim);
  /// JSON-lines of {"sample_id": ..., "vector": [...]}.
  static FixtureProvider from_file(const std::filesystem::path& path, std::size_t dim);

  std::string id() const override { return "fixture"; }
  std::size_t dim() const override { return dim_; }
  std::vector<double> query(const SemanticRequest& request) const override;

 private:
  std::map<std::string, std::vector<double>> vectors_;
  std::size_t dim_;
};

std::string render_fixture_file(const std::map<std::string, std::vector<double>>& vectors);

/// Talks to an external process over its stdin/stdout, one JSON object per
/// line in each direction:
///
///   request:  {"sample_id", "prompt", "categories", "template_id", "dim",
///              "tokens": {"rows", "cols", "data"}}
///   response: {"vector": [...]}  or  {"error": "..."}
///
/// Requests are serialized. A missing reply within the timeout, a dead
/// child, or an "error" reply raise ProviderError.
class SubprocessProvider final : public SemanticProvider {
 public:
  SubprocessProvider(std::vector<std::string> argv, std::size_t dim,
                     std::chrono::milliseconds timeout = std::chrono::milliseconds(10000));
  ~SubprocessProvider() override;
  SubprocessProvider(const SubprocessProvider&) = delete;
  SubprocessProvider& operator=(const SubprocessProvider&) = delete;

  std::string id() const override { return "subprocess"; }
  std::size_t dim() const override { return dim_; }
  std::vector<double> query(const SemanticRequest& request) const override;

 private:
  void spawn() const;
  void shutdown() const;
  std::string read_line() const;

  std::vector<std::string> argv_;
  std::size_t dim_;
  std::chrono::milliseconds timeout_;
  mutable std::mutex mu_;
  mutable int fd_ = -1;
  mutable int pid_ = -1;
  mutable std::string buffer_;
};

}  // namespace zsvad
