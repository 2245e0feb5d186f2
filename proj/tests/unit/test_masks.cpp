#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "freqrise/error.hpp"
#include "freqrise/masks.hpp"

using namespace freqrise;

TEST_SUITE("masks") {
  TEST_CASE("probability bounds are rejected") {
    CHECK_THROWS_AS(sample_binary_masks({1, 4}, 0.0, 1, 1), InvalidArgument);
    CHECK_THROWS_AS(sample_binary_masks({1, 4}, 1.0, 1, 1), InvalidArgument);
    CHECK_THROWS_AS(sample_binary_masks({1, 4}, 0.5, 0, 1), InvalidArgument);
  }

  TEST_CASE("binary masks are reproducible and binary") {
    const auto a = sample_binary_masks({1, 4}, 0.5, 1, 42);
    const auto b = sample_binary_masks({1, 4}, 0.5, 1, 42);
    CHECK(a.values == b.values);
    for (double v : a.values) CHECK((v == 0.0 || v == 1.0));
    const auto big1 = sample_binary_masks({1, 1281}, 0.5, 50, 7);
    const auto big2 = sample_binary_masks({1, 1281}, 0.5, 50, 7);
    const auto other = sample_binary_masks({1, 1281}, 0.5, 50, 8);
    CHECK(big1.values == big2.values);
    CHECK(big1.values != other.values);
  }

  TEST_CASE("all 16 masks over four elements occur with similar frequency") {
    const auto batch = sample_binary_masks({1, 4}, 0.5, 16000, 3);
    std::vector<int> counts(16, 0);
    for (std::size_t i = 0; i < batch.count; ++i) {
      const auto m = batch.mask(i);
      std::size_t code = 0;
      for (std::size_t e = 0; e < 4; ++e) code |= static_cast<std::size_t>(m[e]) << e;
      ++counts[code];
    }
    for (int c : counts) CHECK(std::abs(c - 1000) < 150);
  }

  TEST_CASE("element means concentrate around p") {
    const auto batch = sample_binary_masks({1, 1281}, 0.5, 3000, 11);
    const auto mean = expected_mask(batch);
    std::size_t inside = 0;
    for (double m : mean) inside += std::abs(m - 0.5) <= 0.05;
    CHECK(static_cast<double>(inside) >= 0.99 * 1281);
    for (double m : mean) CHECK((m >= 0.45 && m <= 0.55));
  }

  TEST_CASE("a single mask regenerates alone") {
    const MaskSpec spec{{216, 228}, 0.5, GridSpec{{25, 25}}, false, 99};
    const auto batch = sample_grid_masks(*spec.grid, spec.shape, spec.p, 5, spec.seed);
    std::vector<double> m(spec.shape.size());
    MaskSampler(spec).generate(3, m);
    const auto expected = batch.mask(3);
    CHECK(std::equal(m.begin(), m.end(), expected.begin()));
  }

  TEST_CASE("align-corners linear interpolation") {
    std::vector<double> out(4);
    upsample_grid(std::vector<double>{1, 0}, GridSpec{{2}}, {1, 4}, out);
    CHECK(out[0] == doctest::Approx(1.0));
    CHECK(out[1] == doctest::Approx(2.0 / 3.0));
    CHECK(out[2] == doctest::Approx(1.0 / 3.0));
    CHECK(out[3] == doctest::Approx(0.0));
  }

  TEST_CASE("interpolation preserves constants and stays between nodes") {
    std::vector<double> out(97);
    upsample_grid(std::vector<double>(7, 1.0), GridSpec{{7}}, {1, 97}, out);
    for (double v : out) CHECK(v == doctest::Approx(1.0));
    const std::vector<double> grid = {0, 1, 0.25, 0.75, 0};
    upsample_grid(grid, GridSpec{{5}}, {1, 97}, out);
    for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
      const auto lo = std::min(grid[j], grid[j + 1]), hi = std::max(grid[j], grid[j + 1]);
      for (std::size_t t = j * 24; t <= (j + 1) * 24; ++t) CHECK((out[t] >= lo - 1e-12 && out[t] <= hi + 1e-12));
    }
  }

  TEST_CASE("bilinear center of a 2x2 diagonal grid") {
    std::vector<double> out(9);
    upsample_grid(std::vector<double>{1, 0, 0, 1}, GridSpec{{2, 2}}, {3, 3}, out);
    CHECK(out[4] == doctest::Approx(0.5));
    CHECK(out[0] == doctest::Approx(1.0));
    CHECK(out[8] == doctest::Approx(1.0));
    CHECK(out[2] == doctest::Approx(0.0));
  }

  TEST_CASE("grid masks stay in [0, 1]") {
    for (bool shift : {false, true}) {
      const auto batch = sample_grid_masks(GridSpec{{200}}, {1, 4001}, 0.5, 20, 5, shift);
      for (double v : batch.values) CHECK((v >= 0.0 && v <= 1.0));
    }
  }

  TEST_CASE("grid validation") {
    CHECK_THROWS_AS(validate_grid(GridSpec{{1}}, {1, 10}), InvalidGrid);
    CHECK_THROWS_AS(validate_grid(GridSpec{{11}}, {1, 10}), InvalidGrid);
    CHECK_THROWS_AS(validate_grid(GridSpec{{5, 5}}, {1, 10}), InvalidGrid);
    CHECK_THROWS_AS(validate_grid(GridSpec{{25, 1}}, {216, 228}), InvalidGrid);
    CHECK_NOTHROW(validate_grid(GridSpec{{25, 25}}, {216, 228}));
    CHECK(to_string(parse_grid("25x25")) == "25x25");
    CHECK(parse_grid("200").dims == std::vector<std::size_t>{200});
    CHECK_THROWS(parse_grid("x3"));
  }

  TEST_CASE("expected mask") {
    MaskBatch b;
    b.shape = {1, 3};
    b.count = 2;
    b.values = {1, 1, 1, 0, 0, 0};
    for (double v : expected_mask(b)) CHECK(v == 0.5);
    b.values = {1, 1, 1, 1, 1, 1};
    for (double v : expected_mask(b)) CHECK(v == 1.0);
  }
}

TEST_SUITE("invariants") {
  TEST_CASE("mask determinism across seeds and indices") {
    for (std::uint64_t seed : {0ULL, 1ULL, 0xdeadbeefULL}) {
      const MaskSpec spec{{1, 257}, 0.3, std::nullopt, false, seed};
      const MaskSampler sampler(spec);
      const auto batch = sample_binary_masks(spec.shape, spec.p, 8, seed);
      std::vector<double> m(257);
      for (std::size_t i = 8; i-- > 0;) {
        sampler.generate(i, m);
        const auto ref = batch.mask(i);
        CHECK(std::equal(m.begin(), m.end(), ref.begin()));
      }
    }
  }
}
