// SPDX-FileCopyrightText: © 2026 The zsvad Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Training-free visual token compression.
//
//   1. Local density of each token: k over the summed squared distance to
//      its k nearest other tokens.
//   2. The L_r densest tokens become background prototypes.
//   3. Every token joins the neighborhood of its nearest prototype.
//   4. Each prototype is replaced by reverse attention over its
//      neighborhood: softmax(-b . z / sqrt(D)) weighting, so tokens unlike
//      the background dominate the aggregate.

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "zsvad/numerics.h"

namespace zsvad {

struct TokenSet {
  Matrix tokens;
  /// (frames, rows, cols) of the token grid, when known.
  std::optional<std::array<std::size_t, 3>> grid_shape;

  /// Throws ContractViolation on an empty token set or a grid whose product
  /// differs from the token count.
  void validate() const;
  std::size_t size() const noexcept { return tokens.rows(); }
};

struct CompressionConfig {
  std::size_t k = 8;
  double ratio = 0.2;
  double epsilon = 1e-12;

  void validate() const;
};

struct CompressionResult {
  /// L_r x D_z aggregated tokens.
  Matrix compressed;
  /// Token index of each prototype, in prototype (position) order.
  std::vector<std::size_t> background_indices;
  /// For each input token, the position of its prototype in background_indices.
  std::vector<std::size_t> assignment;
  std::vector<double> densities;
  /// Reverse-attention weight of each token inside its own neighborhood;
  /// the weights of one neighborhood sum to 1.
  std::vector<double> attention;
};

/// max(1, round(ratio * L_z)) with round-half-away-from-zero.
std::size_t compressed_length(std::size_t token_count, double ratio);

std::vector<double> local_density(const TokenSet& tokens, std::size_t k, double epsilon = 1e-12);
std::vector<std::size_t> select_background(const std::vector<double>& densities, double ratio);
std::vector<std::size_t> assign_to_background(const TokenSet& tokens,
                                              const std::vector<std::size_t>& background_indices);
/// Fills compressed/attention from the partition. Leaves densities untouched.
CompressionResult reverse_attend(const TokenSet& tokens,
                                 std::vector<std::size_t> background_indices,
                                 std::vector<std::size_t> assignment);

CompressionResult compress(const TokenSet& tokens, const CompressionConfig& config);

}  // namespace zsvad
