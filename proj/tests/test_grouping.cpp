#include <doctest.h>

#include "gsr/grouping.hpp"
#include "oracles.hpp"

#include <random>
#include <set>

using namespace gsr;

TEST_CASE("reference positions on an 8x8 image with d=4 stride 4") {
  const PatchSpec spec{4, 4, 8, 4};
  const auto pos = reference_positions(GrayImage(8, 8), spec);
  const std::vector<Position> expected{{0, 0}, {0, 4}, {4, 0}, {4, 4}};
  CHECK(pos == expected);
}

TEST_CASE("reference positions always include the last offset") {
  const PatchSpec spec{4, 4, 8, 4};
  const auto pos = reference_positions(GrayImage(9, 9), spec);
  std::set<int> rows;
  std::set<int> cols;
  for (const auto& p : pos) {
    rows.insert(p.row);
    cols.insert(p.col);
  }
  CHECK(rows == std::set<int>{0, 4, 5});
  CHECK(cols == std::set<int>{0, 4, 5});
  CHECK(pos.size() == 9);
}

TEST_CASE("patch size equal to the image gives one reference") {
  const PatchSpec spec{6, 3, 6, 4};
  CHECK(reference_positions(GrayImage(6, 6), spec).size() == 1);
}

TEST_CASE("image smaller than a patch is rejected") {
  const PatchSpec spec{7, 10, 20, 4};
  CHECK_THROWS_AS(reference_positions(GrayImage(6, 30), spec), std::invalid_argument);
  CHECK_THROWS_AS(block_match(GrayImage(30, 6), {0, 0}, spec), std::invalid_argument);
}

TEST_CASE("reference positions cover every pixel") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> dim(5, 40);
  for (int trial = 0; trial < 50; ++trial) {
    const int w = dim(rng);
    const int h = dim(rng);
    const int d = std::uniform_int_distribution<int>(1, std::min(w, h))(rng);
    const PatchSpec spec{d, 2, 64, std::uniform_int_distribution<int>(1, d)(rng)};
    const GrayImage img(w, h);
    std::vector<int> covered(static_cast<std::size_t>(w) * h, 0);
    for (const auto& p : reference_positions(img, spec)) {
      for (int r = 0; r < spec.patch_size; ++r)
        for (int c = 0; c < spec.patch_size; ++c) covered[static_cast<std::size_t>(p.row + r) * w + p.col + c] = 1;
    }
    CHECK(std::count(covered.begin(), covered.end(), 0) == 0);
  }
}

TEST_CASE("patches are vectorized row by row") {
  GrayImage img(3, 3, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  const Eigen::VectorXd v = extract_patch(img, {1, 1}, 2);
  CHECK(v(0) == 5);
  CHECK(v(1) == 6);
  CHECK(v(2) == 8);
  CHECK(v(3) == 9);
}

TEST_CASE("the reference patch is column 0 at distance 0") {
  std::mt19937_64 rng(5);
  const GrayImage img = testing::random_image(30, 30, rng);
  const PatchSpec spec{5, 12, 15, 4};
  const PatchGroup g = block_match(img, {10, 7}, spec);
  CHECK(g.positions[0] == Position{10, 7});
  CHECK(g.distances[0] == 0.0);
  CHECK(g.matrix.col(0) == extract_patch(img, {10, 7}, 5));
  CHECK(g.matrix.rows() == 25);
  CHECK(g.matrix.cols() == 12);
}

TEST_CASE("a constant image picks the raster-first candidates") {
  const GrayImage img(20, 20, 77.0);
  const PatchSpec spec{4, 5, 10, 4};
  const PatchGroup g = block_match(img, {0, 0}, spec);
  const std::vector<Position> expected{{0, 0}, {0, 1}, {0, 2}, {0, 3}, {0, 4}};
  CHECK(g.positions == expected);
  for (double d : g.distances) CHECK(d == 0.0);
}

TEST_CASE("block matching agrees with exhaustive search, ties included") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 60; ++trial) {
    // Few grey levels so exact distance ties are common.
    const GrayImage img = trial % 2 == 0 ? testing::random_integer_image(18, 14, rng, 3)
                                         : testing::random_image(18, 14, rng);
    const PatchSpec spec{3, 1 + trial % 20, 5 + trial % 9, 2};
    for (const Position ref : reference_positions(img, spec)) {
      const PatchGroup g = block_match(img, ref, spec);
      const auto oracle = testing::brute_force_match(img, ref, spec.patch_size, spec.window, spec.group_size);
      REQUIRE(g.positions == oracle.positions);
      for (std::size_t j = 0; j < oracle.distances.size(); ++j) CHECK(g.distances[j] == oracle.distances[j]);
    }
  }
}

TEST_CASE("matched distances are non-decreasing after the reference") {
  std::mt19937_64 rng(23);
  const GrayImage img = testing::random_image(40, 40, rng);
  const PatchSpec spec{6, 30, 20, 4};
  for (const Position ref : reference_positions(img, spec)) {
    const PatchGroup g = block_match(img, ref, spec);
    for (int j = 2; j < g.group_size(); ++j) CHECK(g.distances[j - 1] <= g.distances[j]);
    for (int j = 0; j < g.group_size(); ++j) {
      CHECK(std::abs(g.positions[j].row - ref.row) <= spec.window / 2);
      CHECK(std::abs(g.positions[j].col - ref.col) <= spec.window / 2);
    }
  }
}

TEST_CASE("too few candidates are reused cyclically") {
  const GrayImage img(5, 5, 1.0);
  const PatchSpec spec{4, 7, 10, 1};
  const PatchGroup g = block_match(img, {1, 1}, spec);
  // Window holds 4 positions: (1,1) itself then (0,0),(0,1),(1,0).
  const std::vector<Position> expected{{1, 1}, {0, 0}, {0, 1}, {1, 0}, {1, 1}, {0, 0}, {0, 1}};
  CHECK(g.positions == expected);
}

TEST_CASE("group mean subtraction") {
  SUBCASE("identical columns become zero") {
    PatchGroup g;
    g.patch_size = 2;
    g.matrix = Eigen::MatrixXd(4, 3);
    for (int j = 0; j < 3; ++j) g.matrix.col(j) << 1, 2, 3, 4;
    const PatchGroup c = subtract_group_mean(g);
    CHECK(c.matrix.isZero(0.0));
    CHECK(c.mean_patch == Eigen::Vector4d(1, 2, 3, 4));
  }
  SUBCASE("two columns split symmetrically around their mean") {
    PatchGroup g;
    g.patch_size = 1;
    g.matrix = Eigen::MatrixXd(1, 2);
    g.matrix << 3.0, 7.0;
    const PatchGroup c = subtract_group_mean(g);
    CHECK(c.matrix(0, 0) == -2.0);
    CHECK(c.matrix(0, 1) == 2.0);
    CHECK(c.mean_patch(0) == 5.0);
  }
  SUBCASE("second application removes nothing and restore inverts") {
    std::mt19937_64 rng(2);
    const GrayImage img = testing::random_image(20, 20, rng);
    const PatchGroup g = block_match(img, {3, 3}, PatchSpec{4, 9, 10, 4});
    const PatchGroup once = subtract_group_mean(g);
    const PatchGroup twice = subtract_group_mean(once);
    CHECK(twice.mean_patch.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(once.matrix.rowwise().sum().cwiseAbs().maxCoeff() < 1e-9);
    const PatchGroup back = restore_group_mean(once);
    CHECK((back.matrix - g.matrix).cwiseAbs().maxCoeff() < 1e-12);
  }
}

namespace {

PatchGroup single_patch(Position pos, int d, double value) {
  PatchGroup g;
  g.patch_size = d;
  g.matrix = Eigen::MatrixXd::Constant(d * d, 1, value);
  g.positions = {pos};
  g.distances = {0.0};
  g.mean_patch = Eigen::VectorXd::Zero(d * d);
  return g;
}

}  // namespace

TEST_CASE("aggregating one patch writes it in place") {
  const std::vector<PatchGroup> groups{single_patch({0, 0}, 2, 9.0)};
  const GrayImage out = aggregate(groups, 2, 2);
  CHECK(out == GrayImage(2, 2, 9.0));
}

TEST_CASE("overlapping contributions are averaged") {
  const std::vector<PatchGroup> groups{single_patch({0, 0}, 2, 10.0), single_patch({0, 0}, 2, 20.0)};
  CHECK(aggregate(groups, 2, 2) == GrayImage(2, 2, 15.0));
}

TEST_CASE("aggregating the clean groups of an image reproduces it") {
  std::mt19937_64 rng(31);
  const GrayImage img = testing::random_image(23, 17, rng);
  const PatchSpec spec{5, 6, 9, 3};
  std::vector<PatchGroup> groups;
  for (const Position ref : reference_positions(img, spec)) groups.push_back(block_match(img, ref, spec));
  const GrayImage out = aggregate(groups, img.width(), img.height());
  for (std::size_t k = 0; k < img.size(); ++k) CHECK(out.data()[k] == doctest::Approx(img.data()[k]).epsilon(1e-12));
}

TEST_CASE("aggregate errors and fallback") {
  CHECK_THROWS_AS(aggregate({}, 3, 3), std::invalid_argument);
  const GrayImage fallback(3, 3, 4.0);
  CHECK(aggregate({}, 3, 3, &fallback) == fallback);

  const std::vector<PatchGroup> partial{single_patch({0, 0}, 2, 1.0)};
  CHECK_THROWS_AS(aggregate(partial, 3, 3), std::invalid_argument);
  const GrayImage filled = aggregate(partial, 3, 3, &fallback);
  CHECK(filled(0, 0) == 1.0);
  CHECK(filled(2, 2) == 4.0);

  const std::vector<PatchGroup> outside{single_patch({2, 2}, 2, 1.0)};
  CHECK_THROWS_AS(aggregate(outside, 3, 3, &fallback), std::invalid_argument);
}
