// SPDX-FileCopyrightText: © 2026 The zsvad Authors
//
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "doctest.h"
#include "oracles.h"
#include "test_util.h"
#include "zsvad/errors.h"
#include "zsvad/token_compression.h"

using namespace zsvad;
using zsvad::testing::random_matrix;

namespace {

TokenSet column(std::vector<double> v) {
  const std::size_t n = v.size();
  return TokenSet{Matrix(n, 1, std::move(v)), std::nullopt};
}

}  // namespace

TEST_CASE("token set validation") {
  CHECK_THROWS_AS(TokenSet{}.validate(), ContractViolation);
  TokenSet t{Matrix::zeros(6, 2), std::array<std::size_t, 3>{1, 2, 3}};
  CHECK_NOTHROW(t.validate());
  t.grid_shape = std::array<std::size_t, 3>{1, 2, 2};
  CHECK_THROWS_AS(t.validate(), ContractViolation);
}

TEST_CASE("compressed length rounds half away from zero") {
  CHECK(compressed_length(100, 0.2) == 20);
  CHECK(compressed_length(10, 0.25) == 3);  // 2.5 -> 3
  CHECK(compressed_length(10, 0.05) == 1);  // 0.5 -> 1
  CHECK(compressed_length(3, 0.1) == 1);    // 0.3 -> floor at 1
  CHECK(compressed_length(7, 1.0) == 7);
}

TEST_CASE("local density examples") {
  const auto rho = local_density(column({0.0, 0.1, 0.2, 10.0}), 2);
  CHECK(rho[0] == doctest::Approx(40.0).epsilon(1e-12));
  // Brute-force check of every entry.
  const std::vector<double> x{0.0, 0.1, 0.2, 10.0};
  for (std::size_t i = 0; i < 4; ++i) {
    std::vector<double> d;
    for (std::size_t j = 0; j < 4; ++j)
      if (j != i) d.push_back((x[i] - x[j]) * (x[i] - x[j]));
    std::sort(d.begin(), d.end());
    CHECK(rho[i] == doctest::Approx(2.0 / (d[0] + d[1])).epsilon(1e-12));
  }
  // The outlier is the least dense.
  CHECK(std::min_element(rho.begin(), rho.end()) - rho.begin() == 3);

  CHECK_THROWS_AS(local_density(column({1.0, 2.0}), 2), ContractViolation);
  CHECK_THROWS_AS(local_density(column({1.0, 2.0}), 0), ContractViolation);
}

TEST_CASE("duplicate tokens take the epsilon guard") {
  const auto rho = local_density(column({3.0, 3.0}), 1, 1e-12);
  CHECK(rho[0] == 1e12);
  CHECK(rho[1] == 1e12);
  TokenSet dup{Matrix(6, 2, {1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1}), std::nullopt};
  const auto r = compress(dup, {3, 0.5, 1e-12});
  CHECK(r.compressed.all_finite());
  for (double v : r.densities) CHECK(std::isfinite(v));
  for (double v : r.compressed.data()) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("isolated token is the least dense in a cluster-plus-outlier set") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix z = random_matrix(30, 4, rng, 0.1);
    for (std::size_t c = 0; c < 4; ++c) z(17, c) = 50.0 + c;
    const auto rho = local_density(TokenSet{z, std::nullopt}, 4);
    const auto oracle = oracle::compress(z, 4, 0.2, 1e-12);
    for (std::size_t i = 0; i < rho.size(); ++i) {
      CHECK(rho[i] == doctest::Approx(oracle.densities[i]).epsilon(1e-12));
      if (i != 17) CHECK(rho[17] < rho[i]);
    }
  }
}

TEST_CASE("select_background examples") {
  const std::vector<double> d{3.0, 1.0, 2.0, 5.0};
  const auto all = select_background(d, 1.0);
  CHECK(std::set<std::size_t>(all.begin(), all.end()) == std::set<std::size_t>{0, 1, 2, 3});
  std::vector<double> hundred(100);
  std::iota(hundred.begin(), hundred.end(), 0.0);
  CHECK(select_background(hundred, 0.2).size() == 20);
  const std::vector<double> flat(10, 1.0);
  CHECK(select_background(flat, 0.3) == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("assign_to_background examples and oracle") {
  Rng rng(2);
  const Matrix z = random_matrix(50, 8, rng);
  const TokenSet t{z, std::nullopt};
  const auto single = assign_to_background(t, {7});
  CHECK(std::all_of(single.begin(), single.end(), [](auto v) { return v == 0; }));

  std::vector<std::size_t> bg{3, 9, 14, 20, 22, 30, 31, 40, 41, 49};
  const auto a = assign_to_background(t, bg);
  for (std::size_t b = 0; b < bg.size(); ++b) CHECK(a[bg[b]] == b);
  for (std::size_t j = 0; j < 50; ++j) {
    double best = INFINITY;
    std::size_t arg = 0;
    for (std::size_t b = 0; b < bg.size(); ++b) {
      double s = 0.0;
      for (std::size_t c = 0; c < 8; ++c) s += (z(j, c) - z(bg[b], c)) * (z(j, c) - z(bg[b], c));
      if (s < best) {
        best = s;
        arg = b;
      }
    }
    CHECK(a[j] == arg);
  }
}

TEST_CASE("reverse attention examples") {
  // Singleton neighborhood: output is the member.
  const TokenSet t{Matrix(3, 2, {1, 0, 0, 1, 5, 5}), std::nullopt};
  const auto r = reverse_attend(t, {0, 1, 2}, {0, 1, 2});
  CHECK(r.compressed == t.tokens);

  // Prototype (1, 0) with itself and a dissimilar token (-1, 0): the
  // dissimilar one gets the larger weight.
  const TokenSet pair{Matrix(2, 2, {1, 0, -1, 0}), std::nullopt};
  const auto p = reverse_attend(pair, {0}, {0, 0});
  const double s = 1.0 / std::sqrt(2.0);
  const double w_self = std::exp(-s) / (std::exp(-s) + std::exp(s));
  CHECK(p.attention[0] == doctest::Approx(w_self).epsilon(1e-14));
  CHECK(p.attention[1] > p.attention[0]);
  CHECK(p.compressed(0, 0) == doctest::Approx(w_self - (1 - w_self)).epsilon(1e-14));

  // Empty neighborhood passes the prototype through.
  const TokenSet dup{Matrix(3, 1, {2, 2, 7}), std::nullopt};
  const auto e = reverse_attend(dup, {0, 1}, {0, 0, 0});
  CHECK(e.compressed(1, 0) == 2.0);
  CHECK(e.compressed.rows() == 2);
}

TEST_CASE("compress equals the straight-line oracle") {
  Rng rng(64);
  const Matrix z = random_matrix(64, 6, rng);
  const auto r = compress(TokenSet{z, std::nullopt}, {4, 0.25, 1e-12});
  const auto o = oracle::compress(z, 4, 0.25, 1e-12);
  CHECK(r.background_indices == o.background);
  CHECK(r.assignment == o.assignment);
  REQUIRE(r.compressed.rows() == o.rows.size());
  for (std::size_t i = 0; i < o.rows.size(); ++i)
    for (std::size_t c = 0; c < z.cols(); ++c) CHECK(std::abs(r.compressed(i, c) - o.rows[i][c]) <= 1e-10);
}

TEST_CASE("compress sweeps and plumbing") {
  Rng rng(5);
  const Matrix z = random_matrix(100, 4, rng);
  for (double ratio : {0.05, 0.1, 0.2, 0.5}) {
    const auto r = compress(TokenSet{z, std::nullopt}, {8, ratio, 1e-12});
    CHECK(r.compressed.rows() == std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(ratio * 100))));
    CHECK(r.densities == local_density(TokenSet{z, std::nullopt}, 8, 1e-12));
  }
  // All tokens far apart at ratio 1: every neighborhood is a singleton.
  Matrix far = Matrix::zeros(5, 2);
  for (std::size_t i = 0; i < 5; ++i) far(i, i % 2) = 100.0 * (i + 1);
  const auto r = compress(TokenSet{far, std::nullopt}, {2, 1.0, 1e-12});
  for (std::size_t b = 0; b < 5; ++b) {
    const auto i = r.background_indices[b];
    CHECK(r.compressed(b, 0) == far(i, 0));
    CHECK(r.compressed(b, 1) == far(i, 1));
  }
}

TEST_CASE("compression properties on random inputs") {
  Rng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 5 + rng.uniform_index(60);
    const std::size_t d = 1 + rng.uniform_index(8);
    const Matrix z = random_matrix(n, d, rng);
    const std::size_t k = 1 + rng.uniform_index(std::min<std::size_t>(n - 1, 6));
    const double ratio = 0.05 + 0.9 * rng.uniform();
    const auto r = compress(TokenSet{z, std::nullopt}, {k, ratio, 1e-12});
    const std::size_t lr = r.background_indices.size();
    CHECK(lr == compressed_length(n, ratio));
    std::vector<double> weight_sum(lr, 0.0);
    std::vector<std::vector<std::size_t>> members(lr);
    for (std::size_t j = 0; j < n; ++j) {
      REQUIRE(r.assignment[j] < lr);
      weight_sum[r.assignment[j]] += r.attention[j];
      members[r.assignment[j]].push_back(j);
    }
    for (std::size_t b = 0; b < lr; ++b) {
      CHECK(r.assignment[r.background_indices[b]] == b);
      CHECK(std::abs(weight_sum[b] - 1.0) <= 1e-9);
      for (std::size_t c = 0; c < d; ++c) {
        double lo = INFINITY, hi = -INFINITY;
        for (auto j : members[b]) {
          lo = std::min(lo, z(j, c));
          hi = std::max(hi, z(j, c));
        }
        CHECK(r.compressed(b, c) >= lo - 1e-12);
        CHECK(r.compressed(b, c) <= hi + 1e-12);
      }
    }
  }
}

TEST_CASE("compression is permutation equivariant") {
  Rng rng(101);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 30, d = 3;
    const Matrix z = random_matrix(n, d, rng);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    const Matrix zp = z.gather_rows(perm);  // row i of zp is row perm[i] of z
    const auto a = compress(TokenSet{z, std::nullopt}, {4, 0.2, 1e-12});
    const auto b = compress(TokenSet{zp, std::nullopt}, {4, 0.2, 1e-12});
    // Same prototypes as a set of original indices.
    std::set<std::size_t> pa(a.background_indices.begin(), a.background_indices.end());
    std::set<std::size_t> pb;
    for (auto i : b.background_indices) pb.insert(perm[i]);
    CHECK(pa == pb);
    // Each token keeps its prototype and the aggregated rows agree.
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(a.background_indices[a.assignment[perm[i]]] == perm[b.background_indices[b.assignment[i]]]);
    }
    for (std::size_t bi = 0; bi < b.background_indices.size(); ++bi) {
      const std::size_t orig = perm[b.background_indices[bi]];
      const auto pos = std::find(a.background_indices.begin(), a.background_indices.end(), orig) -
                       a.background_indices.begin();
      for (std::size_t c = 0; c < d; ++c) CHECK(b.compressed(bi, c) == doctest::Approx(a.compressed(pos, c)).epsilon(1e-12));
    }
  }
}

TEST_CASE("compression config validation") {
  CompressionConfig c;
  CHECK(c.k == 8);
  CHECK(c.ratio == 0.2);
  CHECK(c.epsilon == 1e-12);
  c.ratio = 0.0;
  CHECK_THROWS(c.validate());
  c.ratio = 1.5;
  CHECK_THROWS(c.validate());
  c = CompressionConfig{};
  c.epsilon = 0.0;
  CHECK_THROWS(c.validate());
}
