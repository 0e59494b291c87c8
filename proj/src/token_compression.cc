// SPDX-FileCopyrightText: © 2026 The zsvad Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "zsvad/token_compression.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "zsvad/errors.h"

namespace zsvad {

void TokenSet::validate() const {
  require(tokens.rows() >= 1 && tokens.cols() >= 1, "token set must be non-empty");
  if (grid_shape) {
    const auto& g = *grid_shape;
    require(g[0] * g[1] * g[2] == tokens.rows(), "grid shape does not match token count");
  }
}

void CompressionConfig::validate() const {
  require(k >= 1, "k must be at least 1");
  require(ratio > 0.0 && ratio <= 1.0, "ratio must lie in (0, 1]");
  require(epsilon > 0.0, "epsilon must be positive");
}

std::size_t compressed_length(std::size_t token_count, double ratio) {
  const double scaled = std::round(ratio * static_cast<double>(token_count));
  return std::max<std::size_t>(1, static_cast<std::size_t>(scaled));
}

std::vector<double> local_density(const TokenSet& tokens, std::size_t k, double epsilon) {
  tokens.validate();
  const std::size_t n = tokens.size();
  require(k >= 1 && k < n, "local_density: k=" + std::to_string(k) + " needs k < L_z=" +
                               std::to_string(n));
  const Matrix& z = tokens.tokens;
  std::vector<double> densities(n);
  std::vector<double> others;
  others.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    others.clear();
    auto zi = z.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      auto zj = z.row(j);
      double d2 = 0.0;
      for (std::size_t c = 0; c < z.cols(); ++c) {
        const double d = zi[c] - zj[c];
        d2 += d * d;
      }
      others.push_back(d2);
    }
    std::nth_element(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(k - 1),
                     others.end());
    std::sort(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(k));
    double sum = 0.0;
    for (std::size_t m = 0; m < k; ++m) sum += others[m];
    densities[i] = static_cast<double>(k) / (sum < epsilon ? epsilon : sum);
  }
  return densities;
}

std::vector<std::size_t> select_background(const std::vector<double>& densities, double ratio) {
  require(!densities.empty(), "select_background: no densities");
  require(ratio > 0.0 && ratio <= 1.0, "select_background: ratio must lie in (0, 1]");
  return top_k(densities, compressed_length(densities.size(), ratio));
}

std::vector<std::size_t> assign_to_background(const TokenSet& tokens,
                                              const std::vector<std::size_t>& background_indices) {
  tokens.validate();
  require(!background_indices.empty(), "assign_to_background: empty background set");
  const Matrix prototypes = tokens.tokens.gather_rows(background_indices);
  const Matrix dist = pairwise_sq_dist(tokens.tokens, prototypes);
  std::vector<std::size_t> assignment(tokens.size());
  for (std::size_t j = 0; j < tokens.size(); ++j) {
    std::size_t best = 0;
    for (std::size_t b = 1; b < prototypes.rows(); ++b)
      if (dist(j, b) < dist(j, best)) best = b;
    assignment[j] = best;
  }
  return assignment;
}

CompressionResult reverse_attend(const TokenSet& tokens,
                                 std::vector<std::size_t> background_indices,
                                 std::vector<std::size_t> assignment) {
  tokens.validate();
  const std::size_t n = tokens.size();
  const std::size_t dim = tokens.tokens.cols();
  const std::size_t lr = background_indices.size();
  require(lr >= 1, "reverse_attend: empty background set");
  require(assignment.size() == n, "reverse_attend: assignment length differs from L_z");

  std::vector<std::vector<std::size_t>> members(lr);
  for (std::size_t j = 0; j < n; ++j) {
    require(assignment[j] < lr, "reverse_attend: assignment outside background positions");
    members[assignment[j]].push_back(j);
  }

  CompressionResult result;
  result.compressed = Matrix::zeros(lr, dim);
  result.attention.assign(n, 0.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  std::vector<double> scores;
  for (std::size_t i = 0; i < lr; ++i) {
    auto prototype = tokens.tokens.row(background_indices[i]);
    auto out = result.compressed.row(i);
    if (members[i].empty()) {
      // Only reachable when this prototype duplicates an earlier one.
      std::copy(prototype.begin(), prototype.end(), out.begin());
      continue;
    }
    scores.assign(members[i].size(), 0.0);
    for (std::size_t m = 0; m < members[i].size(); ++m) {
      auto z = tokens.tokens.row(members[i][m]);
      double dot = 0.0;
      for (std::size_t c = 0; c < dim; ++c) dot += prototype[c] * z[c];
      scores[m] = -dot * scale;
    }
    softmax_inplace(scores);
    for (std::size_t m = 0; m < members[i].size(); ++m) {
      const std::size_t j = members[i][m];
      result.attention[j] = scores[m];
      auto z = tokens.tokens.row(j);
      for (std::size_t c = 0; c < dim; ++c) out[c] += scores[m] * z[c];
    }
  }
  result.background_indices = std::move(background_indices);
  result.assignment = std::move(assignment);
  return result;
}

CompressionResult compress(const TokenSet& tokens, const CompressionConfig& config) {
  config.validate();
  tokens.validate();
  auto densities = local_density(tokens, config.k, config.epsilon);
  auto background = select_background(densities, config.ratio);
  auto assignment = assign_to_background(tokens, background);
  CompressionResult result = reverse_attend(tokens, std::move(background), std::move(assignment));
  result.densities = std::move(densities);
  return result;
}

}  // namespace zsvad
