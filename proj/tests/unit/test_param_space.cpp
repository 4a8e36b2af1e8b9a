#include <doctest.h>

#include <cmath>
#include <vector>

#include "uor/errors.hpp"
#include "uor/param_space.hpp"
#include "uor/rng.hpp"

using namespace uor;

namespace {
// Re-derivation of the grid arithmetic: cells per axis at edge delta/sqrt(d).
std::size_t expected_block_count(const ParameterSpace& space, double delta) {
  const double edge = delta / std::sqrt(static_cast<double>(space.dims()));
  std::size_t n = 1;
  for (int i = 0; i < space.dims(); ++i) {
    n *= static_cast<std::size_t>(std::ceil(space.extent(i) / edge));
  }
  return n;
}
}  // namespace

TEST_CASE("space validation") {
  CHECK_THROWS_AS(ParameterSpace({0.0}, {0.0}), ValidationError);
  CHECK_THROWS_AS(ParameterSpace({1.0}, {0.0}), ValidationError);
  CHECK_THROWS_AS(ParameterSpace({}, {}), ValidationError);
  const ParameterSpace s({0.0, 1.0}, {2.0, 4.0});
  CHECK(s.diameter() == doctest::Approx(std::sqrt(4.0 + 9.0)));
  CHECK(s.volume() == doctest::Approx(6.0));
}

TEST_CASE("set_division: 1-D examples") {
  const ParameterSpace space({0.0}, {2.0});
  const Division div = set_division(space, 0.5);
  CHECK(div.size() == 4);
  CHECK(div.size() == expected_block_count(space, 0.5));
  CHECK(div.cell_edge() == doctest::Approx(0.5));
  CHECK(div.blocks()[0].representative[0] == doctest::Approx(0.25));

  // delta beyond the diameter: a single block covering the space
  const Division one = set_division(ParameterSpace({0.0}, {1.0}), 2.0);
  CHECK(one.size() == 1);
  CHECK(one.blocks()[0].lower[0] == doctest::Approx(0.0));
  CHECK(one.blocks()[0].upper[0] == doctest::Approx(1.0));
}

TEST_CASE("set_division: 2-D example has 9 blocks of diameter <= delta") {
  const ParameterSpace space({0.0, 0.0}, {1.0, 1.0});
  const Division div = set_division(space, 0.5);
  CHECK(div.size() == 9);
  CHECK(div.size() == expected_block_count(space, 0.5));
  CHECK(div.cell_edge() == doctest::Approx(0.5 / std::sqrt(2.0)));
  // Unclipped cells have diameter exactly delta.
  CHECK(div.blocks()[0].diameter() == doctest::Approx(0.5));
  for (const Block& b : div.blocks()) CHECK(b.diameter() <= 0.5 + 1e-12);
}

TEST_CASE("set_division: invalid delta") {
  const ParameterSpace space({0.0}, {1.0});
  CHECK_THROWS_AS(set_division(space, 0.0), ValidationError);
  CHECK_THROWS_AS(set_division(space, -1.0), ValidationError);
  CHECK_THROWS_AS(set_division(space, std::nan("")), ValidationError);
  CHECK_THROWS_AS(set_division(space, std::numeric_limits<double>::infinity()),
                  ValidationError);
}

TEST_CASE("division properties over random spaces") {
  Rng rng(123);
  for (int trial = 0; trial < 30; ++trial) {
    const int d = 1 + static_cast<int>(rng.uniform() * 3.0);
    std::vector<double> lo(d), hi(d);
    for (int i = 0; i < d; ++i) {
      lo[i] = rng.uniform(-2.0, 2.0);
      hi[i] = lo[i] + rng.uniform(0.1, 3.0);
    }
    const ParameterSpace space(lo, hi);
    const double delta = rng.uniform(0.1, 1.5);
    const Division div = set_division(space, delta);

    double max_diam = 0.0;
    for (const Block& b : div.blocks()) {
      CHECK(b.diameter() <= delta * (1.0 + 1e-12));
      max_diam = std::max(max_diam, b.diameter());
      for (int i = 0; i < d; ++i) {
        CHECK(b.representative[i] >= b.lower[i]);
        CHECK(b.representative[i] <= b.upper[i]);
      }
    }
    // Blocks tile the space.
    CHECK(div.covered_volume() ==
          doctest::Approx(space.volume()).epsilon(1e-9));

    // Halving delta never increases the maximum block diameter.
    const Division fine = set_division(space, delta / 2.0);
    double fine_max = 0.0;
    for (const Block& b : fine.blocks()) fine_max = std::max(fine_max, b.diameter());
    CHECK(fine_max <= max_diam + 1e-12);
  }
}

TEST_CASE("locate: boundary points belong to the lower-index cell") {
  const ParameterSpace space({0.0}, {2.0});
  const Division div = set_division(space, 0.5);  // cells at 0, .5, 1, 1.5
  CHECK(div.locate(std::vector<double>{0.0}) == 0);
  CHECK(div.locate(std::vector<double>{0.5}) == 0);
  CHECK(div.locate(std::vector<double>{0.6}) == 1);
  CHECK(div.locate(std::vector<double>{1.0}) == 1);
  CHECK(div.locate(std::vector<double>{2.0}) == 3);
  CHECK_THROWS_AS(div.locate(std::vector<double>{2.5}), ValidationError);

  // 2-D: row-major with axis 0 fastest.
  const Division grid = set_division(ParameterSpace({0.0, 0.0}, {1.0, 1.0}), 0.5);
  CHECK(grid.locate(std::vector<double>{0.1, 0.1}) == 0);
  CHECK(grid.locate(std::vector<double>{0.99, 0.1}) == 2);
  CHECK(grid.locate(std::vector<double>{0.1, 0.99}) == 6);
}
