#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "locosel/common.hpp"
#include "locosel/terrain.hpp"

using namespace locosel;

namespace {

TerrainSpec stairs(double height, double depth = 0.3) {
  TerrainSpec s;
  s.kind = TerrainKind::StairsUp;
  s.step_height = height;
  s.step_depth = depth;
  return s;
}

}  // namespace

TEST(Terrain, FlatIsZeroEverywhere) {
  const TerrainField field(TerrainSpec{});
  for (double x = -4.0; x <= 6.0; x += 0.37)
    for (double y = -2.0; y <= 2.0; y += 0.29) EXPECT_EQ(field.elevation(x, y), 0.0);
  EXPECT_TRUE((field.sample_grid().array() == 0.0).all());
}

TEST(Terrain, StairsExampleAtPointNineFive) {
  const TerrainField field(stairs(0.15));
  EXPECT_NEAR(field.elevation(0.95, 0.0), 0.45, 1e-12);
}

TEST(Terrain, StairsMatchClosedFormAwayFromEdges) {
  const double h = 0.17, d = 0.3;
  const TerrainField field(stairs(h, d));
  for (double x = 0.0; x < 6.0; x += 0.01) {
    const double phase = std::fmod(x, d);
    if (phase < 1e-6 || d - phase < 1e-6) continue;
    const double oracle = h * std::floor(x / d);
    ASSERT_NEAR(field.elevation(x, 0.3), oracle, 1e-12) << "x=" << x;
  }
}

TEST(Terrain, StairGridPointsWithinHalfResolutionOfEdges) {
  const double h = 0.2, d = 0.3;
  const TerrainField field(stairs(h, d));
  const Eigen::MatrixXd grid = field.sample_grid();
  const double res = field.resolution();
  for (Eigen::Index r = 0; r < grid.rows(); ++r) {
    const double x = field.spec().x_min + res * static_cast<double>(r);
    if (x < 0.0) continue;
    const double lo = h * std::floor((x - 0.5 * res) / d);
    const double hi = h * std::floor((x + 0.5 * res) / d);
    EXPECT_GE(grid(r, 0), std::min(lo, hi) - 1e-12);
    EXPECT_LE(grid(r, 0), std::max(lo, hi) + 1e-12);
  }
}

TEST(Terrain, StairsDownAndStepCap) {
  TerrainSpec s = stairs(0.1);
  s.kind = TerrainKind::StairsDown;
  s.num_steps = 3;
  const TerrainField field(s);
  EXPECT_NEAR(field.elevation(0.65, 0.0), -0.2, 1e-12);
  EXPECT_NEAR(field.elevation(4.0, 0.0), -0.3, 1e-12);
  EXPECT_EQ(field.elevation(-1.0, 0.0), 0.0);
}

TEST(Terrain, GapAndWallProfiles) {
  TerrainSpec gap;
  gap.kind = TerrainKind::Gap;
  gap.feature_start = 1.0;
  gap.gap_width = 0.5;
  gap.gap_depth = 0.4;
  const TerrainField g(gap);
  EXPECT_EQ(g.elevation(0.99, 0.0), 0.0);
  EXPECT_NEAR(g.elevation(1.2, 0.0), -0.4, 1e-12);
  EXPECT_EQ(g.elevation(1.51, 0.0), 0.0);

  TerrainSpec wall;
  wall.kind = TerrainKind::Wall;
  wall.feature_start = 2.0;
  wall.wall_height = 0.35;
  wall.wall_thickness = 0.6;
  const TerrainField w(wall);
  EXPECT_NEAR(w.elevation(2.3, 1.0), 0.35, 1e-12);
  EXPECT_EQ(w.elevation(2.61, 0.0), 0.0);
}

TEST(Terrain, FeaturesSuperimpose) {
  TerrainField field(TerrainSpec{});
  TerrainSpec wall;
  wall.kind = TerrainKind::Wall;
  wall.feature_start = 1.0;
  TerrainSpec gap;
  gap.kind = TerrainKind::Gap;
  gap.feature_start = 3.0;
  field.add_feature(wall);
  field.add_feature(gap);
  EXPECT_NEAR(field.elevation(1.2, 0.0), wall.wall_height, 1e-12);
  EXPECT_NEAR(field.elevation(3.2, 0.0), -gap.gap_depth, 1e-12);
  EXPECT_EQ(field.elevation(2.5, 0.0), 0.0);
}

TEST(Terrain, RoughIsDeterministicPerSeed) {
  TerrainSpec s;
  s.kind = TerrainKind::Rough;
  s.roughness_amplitude = 0.05;
  s.seed = 42;
  const Eigen::MatrixXd a = generate_terrain(s).sample_grid();
  const Eigen::MatrixXd b = generate_terrain(s).sample_grid();
  EXPECT_EQ(0, std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())));
  s.seed = 43;
  EXPECT_FALSE(a.isApprox(generate_terrain(s).sample_grid()));
  EXPECT_LE(a.cwiseAbs().maxCoeff(), 0.05 + 1e-12);
}

TEST(Terrain, DiscreteBlocksStayWithinAmplitude) {
  TerrainSpec s;
  s.kind = TerrainKind::Discrete;
  s.roughness_amplitude = 0.08;
  s.seed = 9;
  const Eigen::MatrixXd grid = generate_terrain(s).sample_grid();
  EXPECT_GE(grid.minCoeff(), 0.0);
  EXPECT_LE(grid.maxCoeff(), 0.08);
  EXPECT_GT(grid.maxCoeff(), 0.0);
}

TEST(Terrain, OutsideExtentClampsToBoundary) {
  const TerrainField field(stairs(0.1));
  EXPECT_EQ(field.elevation(100.0, 0.0), field.elevation(field.x_max(), 0.0));
  EXPECT_EQ(field.elevation(-100.0, 7.0), field.elevation(field.spec().x_min, field.y_max()));
  EXPECT_TRUE(field.contains(0.0, 0.0));
  EXPECT_FALSE(field.contains(0.0, 2.5));
}

TEST(Terrain, InvalidSpecsThrow) {
  auto expect_invalid = [](TerrainSpec s) {
    try {
      generate_terrain(s);
      FAIL() << "expected invalid-spec";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::InvalidSpec);
    }
  };
  TerrainSpec s = stairs(0.1, 0.0);
  expect_invalid(s);
  s = stairs(-0.1);
  expect_invalid(s);
  s = TerrainSpec{};
  s.extent_x = 0.0;
  expect_invalid(s);
  EXPECT_THROW(parse_terrain_kind("ramp"), Error);
}

TEST(Terrain, SpecRoundTripsThroughConfig) {
  TerrainSpec s = stairs(0.125);
  s.kind = TerrainKind::StairsDown;
  s.num_steps = 6;
  s.feature_start = 0.75;
  s.seed = 123456789012345ULL;
  KeyValueConfig cfg;
  s.write(cfg, "t");
  const TerrainSpec back = TerrainSpec::read(KeyValueConfig::parse(cfg.to_text()), "t");
  EXPECT_EQ(back.kind, s.kind);
  EXPECT_EQ(back.step_height, s.step_height);
  EXPECT_EQ(back.num_steps, s.num_steps);
  EXPECT_EQ(back.feature_start, s.feature_start);
  EXPECT_EQ(back.seed, s.seed);
}

TEST(Terrain, GridCsvHasOneRowPerSample) {
  TerrainSpec s;
  s.extent_x = 1.0;
  s.extent_y = 0.5;
  const TerrainField field(s);
  const std::string csv = terrain_grid_csv(field);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), field.sample_grid().rows() + 1);
}
