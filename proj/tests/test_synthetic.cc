// SPDX-FileCopyrightText: © 2026 The zsvad Authors
//
// SPDX-License-Identifier: Apache-2.0

#include <numeric>

#include "doctest.h"
#include "zsvad/errors.h"
#include "zsvad/synthetic.h"

using namespace zsvad;

namespace {

std::size_t mask_count(const BinaryMask& m) {
  return static_cast<std::size_t>(std::accumulate(m.data.begin(), m.data.end(), 0));
}

}  // namespace

TEST_CASE("scene without a rectangle has no positives") {
  SyntheticScene s;
  s.frames = 4;
  s.height = 16;
  s.width = 16;
  const auto v = generate_synthetic(s);
  CHECK(v.frames.frames == 4);
  CHECK(v.frames.channels == 1);
  CHECK(v.frame_labels == std::vector<std::uint8_t>(4, 0));
  for (const auto& m : v.masks) CHECK(mask_count(m) == 0);
  for (double x : v.frames.data) {
    CHECK(x >= 0.0);
    CHECK(x <= 1.0);
  }
}

TEST_CASE("rectangle over the whole clip") {
  SyntheticScene s;
  s.frames = 5;
  s.height = 20;
  s.width = 24;
  s.noise = 0.0;
  s.rect = PlantedRect{2, 3, 6, 4, 1, 1, 0, 5, 0.9};
  const auto v = generate_synthetic(s);
  CHECK(v.frame_labels == std::vector<std::uint8_t>(5, 1));
  for (std::size_t t = 0; t < 5; ++t) {
    CHECK(mask_count(v.masks[t]) == 24);
    CHECK(v.masks[t](3 + t, 2 + t) == 1);
    CHECK(v.frames.at(t, 0, 3 + t, 2 + t) == doctest::Approx(0.9));
    CHECK(v.frames.at(t, 0, 0, 0) == doctest::Approx(s.background(0, 0)));
  }
}

TEST_CASE("partial window and patterns") {
  SyntheticScene s;
  s.frames = 6;
  s.height = 8;
  s.width = 8;
  s.noise = 0.0;
  s.rect = PlantedRect{0, 0, 2, 2, 0, 0, 2, 3, 0.95};
  const auto v = generate_synthetic(s);
  CHECK(v.frame_labels == std::vector<std::uint8_t>{0, 0, 1, 1, 1, 0});

  s.pattern = BackgroundPattern::kStripes;
  CHECK(s.background(0, 0) != s.background(0, 1));
  CHECK(s.background(0, 0) == s.background(1, 0));
  s.pattern = BackgroundPattern::kChecker;
  CHECK(s.background(0, 0) == s.background(1, 1));
  CHECK(s.background(0, 0) != s.background(0, 2));
  CHECK(parse_pattern(to_string(BackgroundPattern::kChecker)) == BackgroundPattern::kChecker);
  CHECK_THROWS_AS(parse_pattern("plaid"), DataError);
}

TEST_CASE("rectangle leaving the frame is rejected") {
  SyntheticScene s;
  s.frames = 4;
  s.height = 8;
  s.width = 8;
  s.rect = PlantedRect{5, 0, 2, 2, 1, 0, 0, 4, 0.9};
  CHECK_THROWS_AS(s.validate(), ContractViolation);
  CHECK_THROWS_AS(generate_synthetic(s), ContractViolation);
}

TEST_CASE("suite is deterministic and every fourth scene is clean") {
  const auto a = synthetic_suite(8, 16, 64, 64, 5);
  const auto b = synthetic_suite(8, 16, 64, 64, 5);
  REQUIRE(a.size() == 8);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].rect.has_value() == (i % 4 != 3));
    CHECK_NOTHROW(a[i].validate());
    CHECK(generate_synthetic(a[i]).frames.data == generate_synthetic(b[i]).frames.data);
  }
  CHECK(a[0].id == "scene_000");
}
