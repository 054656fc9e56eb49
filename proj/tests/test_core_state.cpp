#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hvp/core_state.hpp"
#include "hvp/scenarios.hpp"
#include "oracles.hpp"

using namespace hvp;

namespace {

const double two_pi = 2.0 * std::numbers::pi;

} // namespace

TEST(CoreState, ZeroStateIsValidWithZeroNorm) {
  const auto grid = GridConfig::one_d(two_pi, 16, 8);
  const auto s = new_state(grid, {1.0, 1.0}, std::vector<double>(grid.size(), 0.0));
  EXPECT_EQ(s.coeffs().size(), 9u * 16u);
  EXPECT_EQ(discrete_l2_norm(s), 0.0);
  EXPECT_EQ(s.t(), 0.0);
}

TEST(CoreState, OddHermiteOrderRejected) {
  const auto grid = GridConfig::one_d(two_pi, 16, 7);
  try {
    new_state(grid, {1.0, 1.0}, std::vector<double>(8 * 16, 0.0));
    FAIL() << "odd order accepted";
  } catch (const config_error& e) {
    EXPECT_NE(std::string(e.what()).find("odd Hermite order"), std::string::npos);
  }
}

TEST(CoreState, InvalidConstructionRejected) {
  const auto grid = GridConfig::one_d(two_pi, 16, 8);
  EXPECT_THROW(new_state(grid, {1.0, 1.0}, std::vector<double>(10, 0.0)), config_error);
  EXPECT_THROW(new_state(grid, {0.0, 1.0}, std::vector<double>(grid.size(), 0.0)), config_error);
  EXPECT_THROW(new_state(grid, {-1.0, 1.0}, std::vector<double>(grid.size(), 0.0)), config_error);
  std::vector<double> bad(grid.size(), 0.0);
  bad[3] = std::nan("");
  EXPECT_THROW(new_state(grid, {1.0, 1.0}, bad), config_error);
  EXPECT_THROW(new_state(GridConfig::one_d(two_pi, 15, 8), {1.0, 1.0}, std::vector<double>(9 * 15)), config_error);
  EXPECT_THROW(new_state(GridConfig::one_d(-1.0, 16, 8), {1.0, 1.0}, std::vector<double>(grid.size())), config_error);
  EXPECT_THROW(new_state(GridConfig::one_d(two_pi, 16, 8, 0.0), {1.0, 1.0}, std::vector<double>(grid.size())),
               config_error);
}

TEST(CoreState, LayoutIsVelocityMajor) {
  const auto g1 = GridConfig::one_d(two_pi, 8, 4);
  const auto s1 = new_state(g1, {1.0, 1.0}, std::vector<double>(g1.size()));
  EXPECT_EQ(s1.index(2, 3), 2u * 8u + 3u);
  const auto g2 = GridConfig::two_d({two_pi, two_pi}, {4, 6}, {2, 4});
  const auto s2 = new_state(g2, {1.0, 1.0}, std::vector<double>(g2.size()));
  EXPECT_EQ(g2.size(), 3u * 5u * 4u * 6u);
  EXPECT_EQ(s2.index(1, 2, 3, 5), ((1u * 5u + 2u) * 4u + 3u) * 6u + 5u);
  EXPECT_EQ(s2.index(2, 4, 3, 5), g2.size() - 1);
}

TEST(CoreState, NormMatchesDirectSummation2d) {
  const auto spec = default_scenario(Scenario::landau_linear_2d);
  const auto grid = GridConfig::two_d({spec.default_length(), spec.default_length()}, {8, 8}, {16, 16});
  const auto build = build_initial_state(spec, grid, {1.0, 1.0});
  long double acc = 0.0L;
  for (double c : build.state.coeffs()) acc += static_cast<long double>(c) * c;
  const double expected = std::sqrt(static_cast<double>(acc) * grid.cell_volume());
  EXPECT_TRUE(std::isfinite(discrete_l2_norm(build.state)));
  EXPECT_NEAR(discrete_l2_norm(build.state), expected, 1e-13 * expected);
}

TEST(CoreState, SumSquaresMatchesExtendedPrecision) {
  std::mt19937_64 rng(7);
  const auto v = oracle::random_vector(1000, rng, 1e100);
  long double acc = 0.0L;
  for (double x : v) acc += static_cast<long double>(x) * x;
  EXPECT_NEAR(sum_squares(v) / static_cast<double>(acc), 1.0, 1e-13);
  EXPECT_EQ(sum_squares(std::vector<double>{}), 0.0);
}

TEST(CoreState, WithScalingKeepsTimeAndGrid) {
  const auto grid = GridConfig::one_d(two_pi, 8, 4);
  const auto s = SpectralState(grid, {1.0, 1.0}, std::vector<double>(grid.size(), 1.0), 2.5);
  const auto r = s.with_scaling({1.5, 1.0}, std::vector<double>(grid.size(), 2.0));
  EXPECT_EQ(r.t(), 2.5);
  EXPECT_EQ(r.beta(0), 1.5);
  EXPECT_EQ(r.grid(), grid);
  EXPECT_EQ(s.beta(0), 1.0);
}
