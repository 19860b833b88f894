// SPDX-FileCopyrightText: 2026 The countaug Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>

#include "countaug/density.hpp"
#include "countaug/error.hpp"
#include "countaug/image.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace countaug;

namespace {

// Brute-force single-kernel oracle: evaluates the truncated Gaussian over the
// whole grid and normalises by its in-image sum.
std::vector<double> oracle_kernel(Point p, std::uint32_t w, std::uint32_t h, double sigma) {
  std::vector<double> out(static_cast<std::size_t>(w) * h, 0.0);
  double total = 0.0;
  for (std::uint32_t y = 0; y < h; ++y) {
    for (std::uint32_t x = 0; x < w; ++x) {
      const double d2 = (x - p.x) * (x - p.x) + (y - p.y) * (y - p.y);
      if (std::sqrt(d2) > 4.0 * sigma) continue;
      out[static_cast<std::size_t>(y) * w + x] = std::exp(-d2 / (2 * sigma * sigma));
      total += out[static_cast<std::size_t>(y) * w + x];
    }
  }
  for (auto& v : out) v /= total;
  return out;
}

double tolerance(std::size_t count) { return 1e-6 * std::max<double>(1.0, static_cast<double>(count)); }

}  // namespace

TEST_CASE("render_density on an empty point set is all zero") {
  const auto map = render_density(std::vector<Point>{}, 64, 64, 2.0);
  CHECK(map.width == 64);
  CHECK(map.height == 64);
  CHECK(std::all_of(map.values.begin(), map.values.end(), [](float v) { return v == 0.0f; }));
  CHECK(density_count(map) == 0.0);
}

TEST_CASE("single centred kernel has unit mass and peaks at its centre") {
  const std::vector<Point> points{{32.0, 32.0}};
  const auto map = render_density(points, 64, 64, 2.0);
  CHECK(std::fabs(density_count(map) - 1.0) <= 1e-6);
  const auto argmax = std::max_element(map.values.begin(), map.values.end()) - map.values.begin();
  CHECK(argmax % 64 == 32);
  CHECK(argmax / 64 == 32);

  const auto oracle = oracle_kernel(points[0], 64, 64, 2.0);
  for (std::size_t i = 0; i < oracle.size(); ++i) {
    CHECK(std::fabs(map.values[i] - oracle[i]) <= 1e-7);
  }
}

TEST_CASE("border kernels match the brute-force renormalised oracle") {
  for (const Point p : {Point{0.0, 0.0}, Point{63.99, 10.5}, Point{5.25, 47.9}}) {
    const auto map = render_density(std::vector<Point>{p}, 64, 48, 2.0);
    const auto oracle = oracle_kernel(p, 64, 48, 2.0);
    for (std::size_t i = 0; i < oracle.size(); ++i) {
      REQUIRE(std::fabs(map.values[i] - oracle[i]) <= 1e-7);
    }
    CHECK(std::fabs(density_count(map) - 1.0) <= 1e-6);
  }
}

TEST_CASE("56 random points on 384x512 keep their mass") {
  std::mt19937_64 rng(56);
  const auto points = countaug::testing::random_points(rng, 56, 512, 384);
  const auto map = render_density(points, 512, 384, 2.0);
  CHECK(map.source_point_count == 56);
  CHECK(std::fabs(density_count(map) - 56.0) <= 5.6e-5);
}

TEST_CASE("density_count") {
  DensityMap zero(8, 8);
  CHECK(density_count(zero) == 0.0);

  std::mt19937_64 rng(7);
  const auto seven = render_density(countaug::testing::random_points(rng, 7, 100, 80), 100, 80);
  CHECK(std::fabs(density_count(seven) - 7.0) <= 7e-6);

  DensityMap single(8, 8);
  single.at(3, 5) = 3.5f;
  CHECK(density_count(single) == 3.5);
}

TEST_CASE("render_density argument errors") {
  const std::vector<Point> p{{1, 1}};
  CHECK_THROWS_AS(render_density(p, 8, 8, 0.0), ArgumentError);
  CHECK_THROWS_AS(render_density(p, 8, 8, -1.0), ArgumentError);
  CHECK_THROWS_AS(render_density(p, 0, 8, 2.0), ArgumentError);
  CHECK_THROWS_AS(render_density(std::vector<Point>{{8.0, 1.0}}, 8, 8, 2.0), ArgumentError);
}

TEST_CASE("tiny sigma still conserves mass") {
  const auto map = render_density(std::vector<Point>{{3.5, 3.5}, {0.0, 7.99}}, 8, 8, 1e-3);
  CHECK(std::fabs(density_count(map) - 2.0) <= 2e-6);
}

TEST_CASE("property: mass conservation including border-hugging points") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::uint32_t> dim(16, 200);
  std::uniform_int_distribution<std::size_t> size(0, 120);
  std::uniform_real_distribution<double> sigma(0.5, 6.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto w = dim(rng), h = dim(rng);
    const auto points = countaug::testing::random_points(rng, size(rng), w, h, true);
    const auto map = render_density(points, w, h, sigma(rng));
    REQUIRE(std::fabs(density_count(map) - static_cast<double>(points.size())) <=
            tolerance(points.size()));
    REQUIRE(std::all_of(map.values.begin(), map.values.end(), [](float v) { return v >= 0.0f; }));
  }
}

TEST_CASE("property: rendering is linear in the point set") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 30; ++trial) {
    auto a = countaug::testing::random_points(rng, 25, 96, 64, true);
    auto b = countaug::testing::random_points(rng, 40, 96, 64, true);
    const auto ma = render_density(a, 96, 64);
    const auto mb = render_density(b, 96, 64);
    a.insert(a.end(), b.begin(), b.end());
    const auto mab = render_density(a, 96, 64);
    for (std::size_t i = 0; i < mab.values.size(); ++i) {
      REQUIRE(std::fabs(mab.values[i] - (ma.values[i] + mb.values[i])) <= 1e-6);
    }
  }
}

TEST_CASE("rendering is deterministic") {
  std::mt19937_64 rng(5);
  const auto points = countaug::testing::random_points(rng, 300, 128, 128, true);
  CHECK(encode_dmap(render_density(points, 128, 128)) == encode_dmap(render_density(points, 128, 128)));
}

TEST_CASE("DMAPv1 layout") {
  DensityMap m(2, 2);
  m.values = {0.0f, 1.0f, 2.0f, 3.0f};
  const Bytes bytes = encode_dmap(m);
  REQUIRE(bytes.size() == 32);
  CHECK(std::equal(bytes.begin(), bytes.begin() + 8, "DMAPv1\0\0"));
  CHECK(bytes[8] == 2);
  CHECK(bytes[12] == 2);
  // 1.0f = 0x3f800000, little-endian at offset 20.
  CHECK(bytes[20] == 0x00);
  CHECK(bytes[23] == 0x3f);
  CHECK(bytes[22] == 0x80);
  const DensityMap back = decode_dmap(bytes);
  CHECK(back.width == 2);
  CHECK(back.height == 2);
  CHECK(back.values == m.values);
}

TEST_CASE("DMAPv1 decode errors") {
  const std::string junk = "XXXXXXXXXXXXXXXXXXXX";
  CHECK_THROWS_AS(decode_dmap(Bytes(junk.begin(), junk.end())), FormatError);
  CHECK_THROWS_AS(decode_dmap(Bytes{}), FormatError);

  DensityMap m(3, 3);
  Bytes bytes = encode_dmap(m);
  bytes.pop_back();
  CHECK_THROWS_AS(decode_dmap(bytes), FormatError);
  CHECK_THROWS_AS(decode_dmap(Bytes(bytes.begin(), bytes.begin() + 12)), FormatError);

  Bytes huge = encode_dmap(DensityMap(1, 1));
  std::fill(huge.begin() + 8, huge.begin() + 16, 0xff);
  CHECK_THROWS_AS(decode_dmap(huge), FormatError);
}

TEST_CASE("property: DMAPv1 decode(encode(m)) is bit-exact") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<float> value(0.0f, 10.0f);
  auto check_map = [](const DensityMap& m) {
    const DensityMap back = decode_dmap(encode_dmap(m));
    REQUIRE(back.width == m.width);
    REQUIRE(back.height == m.height);
    for (std::size_t i = 0; i < m.values.size(); ++i) {
      REQUIRE(std::bit_cast<std::uint32_t>(back.values[i]) == std::bit_cast<std::uint32_t>(m.values[i]));
    }
  };
  DensityMap big(512, 384);
  for (auto& v : big.values) v = value(rng);
  check_map(big);
  std::uniform_int_distribution<std::uint32_t> dim(1, 64);
  for (int trial = 0; trial < 20; ++trial) {
    DensityMap m(dim(rng), dim(rng));
    for (auto& v : m.values) v = value(rng);
    m.values[0] = 0.0f;
    m.values.back() = std::numeric_limits<float>::denorm_min();
    check_map(m);
  }
}

TEST_CASE("extract_peaks") {
  SUBCASE("flat map has no peaks") {
    CHECK(extract_peaks(DensityMap(16, 16), 0.01, 5).empty());
  }
  SUBCASE("three well separated points") {
    const std::vector<Point> points{{10.3, 12.7}, {40.0, 15.0}, {25.6, 44.2}};
    const auto peaks = extract_peaks(render_density(points, 64, 64, 2.0), 0.01, 5);
    REQUIRE(peaks.size() == 3);
    for (const auto& p : points) {
      const bool matched = std::any_of(peaks.begin(), peaks.end(), [&](const Point& q) {
        return std::fabs(p.x - q.x) <= 1.0 && std::fabs(p.y - q.y) <= 1.0;
      });
      CHECK(matched);
    }
  }
  SUBCASE("two points one pixel apart merge") {
    const std::vector<Point> points{{20.0, 20.0}, {21.0, 20.0}};
    CHECK(extract_peaks(render_density(points, 48, 48, 2.0), 0.01, 5).size() == 1);
  }
  SUBCASE("peaks come out in descending height") {
    DensityMap m(16, 16);
    m.at(2, 2) = 0.5f;
    m.at(12, 12) = 0.9f;
    m.at(7, 2) = 0.005f;  // below min_height
    const auto peaks = extract_peaks(m, 0.01, 3);
    REQUIRE(peaks.size() == 2);
    CHECK(peaks[0] == Point{12, 12});
    CHECK(peaks[1] == Point{2, 2});
  }
}

TEST_CASE("property: peak recovery at separation >= 6 sigma") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    const double sigma = trial % 2 == 0 ? 2.0 : 1.5;
    const auto points = countaug::testing::separated_points(rng, 1 + trial % 30, 160, 120, 6 * sigma);
    const auto peaks = extract_peaks(render_density(points, 160, 120, sigma), 0.01, 5);
    REQUIRE(peaks.size() == points.size());
  }
}

TEST_CASE("density PNG export") {
  countaug::testing::TempDir dir("density-png");
  const auto map = render_density(std::vector<Point>{{5, 5}}, 20, 10);
  export_density_png(map, dir / "d.png");
  const auto image = decode_png(read_file(dir / "d.png"));
  CHECK(image.width == 20);
  CHECK(image.height == 10);
  CHECK(image.at(5, 5)[0] == 255);
  CHECK(image.at(19, 9)[0] == 0);
}
