// SPDX-FileCopyrightText: © 2026 The zsvad Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

namespace zsvad {

/// Dense row-major matrix of doubles.
///
/// The checked constructor rejects size mismatches and non-finite values.
/// `zeros` builds an all-zero matrix that kernels then fill in place.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix zeros(std::size_t rows, std::size_t cols);
  static Matrix identity(std::size_t n);
  /// Single-row matrix holding `values`.
  static Matrix row_vector(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  Matrix transpose() const;
  /// Rows selected by `indices`, in that order.
  Matrix gather_rows(std::span<const std::size_t> indices) const;
  /// Mean over rows; a 1 x cols matrix.
  Matrix mean_rows() const;
  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// splitmix64 step: advances `state` and returns the mixed output.
std::uint64_t splitmix64_next(std::uint64_t& state) noexcept;
/// One-shot splitmix64 mix of `value` (used to derive sub-seeds).
std::uint64_t splitmix64(std::uint64_t value) noexcept;
/// FNV-1a 64-bit hash of a byte string.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;
std::uint64_t fnv1a64(std::string_view text, std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;

/// xoshiro256** generator whose 256-bit state is filled from a 64-bit seed
/// by four splitmix64 steps. The output stream depends only on the seed.
///
/// Satisfies UniformRandomBitGenerator, but prefer the member helpers: the
/// std distributions are implementation-defined and would break
/// cross-platform reproducibility.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }
  result_type operator()() noexcept { return next(); }

  std::uint64_t next() noexcept;
  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform integer in [0, n). `n` must be positive.
  std::uint64_t uniform_index(std::uint64_t n) noexcept;
  /// True with probability `p` (exactly never for p <= 0, always for p >= 1).
  bool bernoulli(double p) noexcept;
  /// Standard normal via Box-Muller (no cached spare, so the stream
  /// position is a pure function of the call count).
  double normal() noexcept;

  template <typename T>
  void shuffle(std::vector<T>& items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t s_[4];
};

/// Gaussian matrix with standard deviation 1/sqrt(rows), i.e. 1/sqrt(fan_in)
/// for a weight applied as x * W.
Matrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng);

Matrix matmul(const Matrix& a, const Matrix& b);
/// a * b^T without materializing the transpose.
Matrix matmul_transposed(const Matrix& a, const Matrix& b);

/// Softmax of each row of `m * scale`, using max subtraction.
Matrix row_softmax(const Matrix& m, double scale);
/// In-place softmax of one score vector (already scaled).
void softmax_inplace(std::span<double> scores);

/// Squared Euclidean distances between the rows of `a` and `b`, computed
/// coordinatewise so that identical rows give exactly zero.
Matrix pairwise_sq_dist(const Matrix& a, const Matrix& b);

/// Indices of the `k` largest values ordered by (value desc, index asc).
std::vector<std::size_t> top_k(std::span<const double> values, std::size_t k);

/// softmax(q * kmat^T * scale) * vmat.
Matrix cross_attention(const Matrix& q, const Matrix& kmat, const Matrix& vmat, double scale);

/// Solves a x = b by Gaussian elimination with partial pivoting. Throws
/// ContractViolation for non-square or numerically singular systems.
std::vector<double> solve_linear(Matrix a, std::vector<double> b);

double sigmoid(double x) noexcept;
/// log(1 + exp(x)) without overflow.
double softplus(double x) noexcept;

}  // namespace zsvad
