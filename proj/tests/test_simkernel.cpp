#include <gtest/gtest.h>

#include <cmath>

#include "locosel/simkernel.hpp"
#include "oracles.hpp"

using namespace locosel;
using locosel::testing::naive_cot;

namespace {

SkillProfile make_skill(double ascend, double descend, double base_power = 150.0) {
  SkillProfile s;
  s.name = "test";
  s.max_ascend = ascend;
  s.max_descend = descend;
  s.base_power = base_power;
  s.power_per_ascend = 600.0;
  s.power_per_descend = 250.0;
  s.slip_sharpness = 60.0;
  s.swing_clearance = 0.03;
  return s;
}

TerrainField stairs_up(double height) {
  TerrainSpec s;
  s.kind = TerrainKind::StairsUp;
  s.step_height = height;
  s.step_depth = 0.3;
  return TerrainField(s);
}

Pose2p5D standing(const TerrainField& field, double x, double y = 0.0, double yaw = 0.0) {
  return {x, y, field.elevation(x, y) + RobotParams{}.nominal_height, yaw};
}

RolloutTrace constant_trace(double power, std::size_t steps, const RobotParams& p) {
  RolloutTrace t;
  for (std::size_t i = 0; i < steps; ++i) {
    t.powers.push_back(power);
    t.distances.push_back(p.command_speed * p.control_dt * static_cast<double>(i + 1));
    t.poses.emplace_back();
  }
  t.steps = steps;
  t.outcome = Outcome::ReachedTarget;
  return t;
}

double success_rate(const TerrainField& field, const SkillProfile& skill, const Pose2p5D& pose,
                    int n, std::uint64_t seed) {
  int ok = 0;
  for (int i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    ok += rollout(field, skill, pose, {}, rng).outcome == Outcome::ReachedTarget;
  }
  return static_cast<double>(ok) / n;
}

}  // namespace

TEST(SimKernel, FlatRolloutTakes125StepsAtBasePower) {
  const TerrainField field(TerrainSpec{});
  const SkillProfile skill = make_skill(0.1, 0.1, 173.0);
  Rng rng(1);
  const RolloutTrace t = rollout(field, skill, standing(field, 0.3, 0.2, 0.4), {}, rng);
  EXPECT_EQ(t.outcome, Outcome::ReachedTarget);
  EXPECT_EQ(t.steps, static_cast<std::size_t>(std::ceil(1.5 / 0.6 / 0.02 - 1e-9)));
  EXPECT_EQ(t.steps, 125u);
  for (double p : t.powers) EXPECT_EQ(p, 173.0);
  EXPECT_GE(t.distances.back(), 1.5);
}

TEST(SimKernel, WeakSkillOnTallStepsCollides) {
  const TerrainField field = stairs_up(0.30);
  SkillProfile walk = make_skill(0.05, 0.05);
  const double rate = success_rate(field, walk, standing(field, -0.5), 1000, 11);
  EXPECT_LT(rate, 0.01);
}

TEST(SimKernel, AscendSkillClearsModerateSteps) {
  const TerrainField field = stairs_up(0.10);
  SkillProfile ascend = make_skill(0.25, 0.08);
  const double rate = success_rate(field, ascend, standing(field, -0.5), 1000, 12);
  EXPECT_GT(rate, 0.99);
}

TEST(SimKernel, FailureLawIsLogistic) {
  const SkillProfile s = make_skill(0.1, 0.2);
  EXPECT_NEAR(failure_probability(s, 0.1), 0.5, 1e-15);
  EXPECT_NEAR(failure_probability(s, -0.2), 0.5, 1e-15);
  EXPECT_NEAR(failure_probability(s, 0.15), 1.0 / (1.0 + std::exp(-60.0 * 0.05)), 1e-15);
  EXPECT_LT(failure_probability(s, 0.0), 0.01);
}

TEST(SimKernel, BodyClearanceViolationAlwaysCollides) {
  TerrainSpec wall;
  wall.kind = TerrainKind::Wall;
  wall.feature_start = 0.5;
  wall.wall_height = 0.55;
  const TerrainField field(wall);
  SkillProfile strong = make_skill(5.0, 5.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    EXPECT_EQ(rollout(field, strong, standing(field, -0.5), {}, rng).outcome, Outcome::BaseCollision);
  }
}

TEST(SimKernel, GapReachBridgesNarrowTrenches) {
  TerrainSpec gap;
  gap.kind = TerrainKind::Gap;
  gap.feature_start = 0.5;
  gap.gap_width = 0.5;
  gap.gap_depth = 0.5;
  const TerrainField field(gap);
  SkillProfile jumper = make_skill(0.1, 0.1);
  jumper.max_gap = 0.7;
  EXPECT_EQ(support_height(field, jumper, 0.75, 0.0, 0.0), 0.0);
  SkillProfile walker = make_skill(0.1, 0.1);
  EXPECT_EQ(support_height(field, walker, 0.75, 0.0, 0.0), -0.5);
  EXPECT_GT(success_rate(field, jumper, standing(field, -0.3), 200, 3), 0.99);
  EXPECT_LT(success_rate(field, walker, standing(field, -0.3), 200, 3), 0.01);
}

TEST(SimKernel, BridgingSkillMaySpawnOverTrench) {
  TerrainSpec gap;
  gap.kind = TerrainKind::Gap;
  gap.feature_start = 0.5;
  gap.gap_width = 0.5;
  const TerrainField field(gap);
  SkillProfile jumper = make_skill(0.1, 0.1);
  jumper.max_gap = 0.7;
  const SkillProfile walker = make_skill(0.1, 0.1);
  // Base above the trench middle, standing on the bridged surface.
  const Pose2p5D over{0.75, 0.0, RobotParams{}.nominal_height, 0.0};
  EXPECT_TRUE(validate_spawn(field, over, {}, &jumper));
  EXPECT_FALSE(validate_spawn(field, over, {}, &walker));
  EXPECT_FALSE(validate_spawn(field, over));
  Rng rng(8);
  EXPECT_EQ(rollout(field, jumper, over, {}, rng).outcome, Outcome::ReachedTarget);
  EXPECT_THROW(rollout(field, walker, over, {}, rng), Error);
}

TEST(SimKernel, SpawnValidation) {
  const TerrainField flat(TerrainSpec{});
  Rng rng(4);
  for (int i = 0; i < 100; ++i)
    EXPECT_TRUE(validate_spawn(flat, standing(flat, rng.uniform(-3, 5), rng.uniform(-1, 1), rng.uniform(-3, 3))));
  // Floating or sunken base.
  Pose2p5D high = standing(flat, 0.0);
  high.z += 0.06;
  EXPECT_FALSE(validate_spawn(flat, high));

  // Straddling a 0.15 m edge: feet at 0 and 0.15, base sits on one level.
  const TerrainField stairs = stairs_up(0.15);
  EXPECT_FALSE(validate_spawn(stairs, standing(stairs, 0.3)));
  EXPECT_FALSE(validate_spawn(stairs, standing(stairs, 0.29)));
  EXPECT_TRUE(validate_spawn(stairs, standing(stairs, -0.6)));

  TerrainSpec wall;
  wall.kind = TerrainKind::Wall;
  wall.feature_start = 0.2;
  wall.wall_height = 0.6;
  wall.wall_thickness = 0.1;
  const TerrainField w(wall);
  EXPECT_FALSE(validate_spawn(w, standing(w, 0.0)));
  EXPECT_FALSE(validate_spawn(flat, standing(flat, 20.0)));
}

TEST(SimKernel, RolloutRejectsInvalidSpawn) {
  const TerrainField stairs = stairs_up(0.15);
  Rng rng(1);
  try {
    rollout(stairs, make_skill(0.1, 0.1), standing(stairs, 0.3), {}, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidSpawn);
  }
}

TEST(SimKernel, CotWorkedExample) {
  const RobotParams p;
  // 125 steps of 0.012 m; warmup skips 25 steps (0.3 m), leaving 1.2 m in 2.0 s.
  const RolloutTrace t = constant_trace(200.0, 125, p);
  EXPECT_NEAR(compute_cot(t, p, 0.5), 200.0 * 2.0 / (50.0 * 9.81 * 1.2), 1e-12);
  EXPECT_NEAR(compute_cot(t, p, 0.5), 0.6795, 1e-4);
  EXPECT_EQ(compute_cot(constant_trace(0.0, 125, p), p, 0.5), 0.0);
  EXPECT_NEAR(compute_cot(t, p, 0.0), compute_cot(t, p, 0.5), 1e-12);
}

TEST(SimKernel, CotClampsNegativePower) {
  const RobotParams p;
  RolloutTrace t = constant_trace(100.0, 125, p);
  for (std::size_t i = 0; i < t.steps; i += 2) t.powers[i] = -50.0;
  EXPECT_EQ(compute_cot(t, p, 0.5), naive_cot(t, p, 0.5));
}

TEST(SimKernel, CotMatchesNaiveOracleOnRollouts) {
  const RobotParams p;
  Rng rng(21);
  int checked = 0;
  for (int i = 0; i < 200; ++i) {
    const double h = rng.uniform(0.0, 0.2);
    const TerrainField field = stairs_up(h);
    SkillProfile skill = make_skill(0.25, 0.25, rng.uniform(100.0, 300.0));
    const RolloutTrace t = rollout(field, skill, standing(field, rng.uniform(-1.5, -0.4)), p, rng);
    if (t.outcome != Outcome::ReachedTarget) continue;
    for (double warmup : {0.0, 0.5, 0.73}) ASSERT_EQ(compute_cot(t, p, warmup), naive_cot(t, p, warmup));
    ++checked;
  }
  EXPECT_GT(checked, 150);
}

TEST(SimKernel, CotErrors) {
  const RobotParams p;
  RolloutTrace crashed = constant_trace(100.0, 50, p);
  crashed.outcome = Outcome::BaseCollision;
  try {
    compute_cot(crashed, p, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::CrashedTrace);
  }
  const RolloutTrace short_trace = constant_trace(100.0, 10, p);
  try {
    compute_cot(short_trace, p, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ZeroDistance);
  }
}

TEST(SimKernel, RolloutIsDeterministicAndWellFormed) {
  const TerrainField field = stairs_up(0.12);
  const SkillProfile skill = make_skill(0.15, 0.15);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng a(seed), b(seed);
    const RolloutTrace x = rollout(field, skill, standing(field, -0.7), {}, a);
    const RolloutTrace y = rollout(field, skill, standing(field, -0.7), {}, b);
    ASSERT_EQ(x.powers, y.powers);
    ASSERT_EQ(x.distances, y.distances);
    ASSERT_EQ(x.outcome, y.outcome);
    ASSERT_EQ(x.powers.size(), x.steps);
    ASSERT_EQ(x.poses.size(), x.steps);
    for (std::size_t i = 1; i < x.steps; ++i) ASSERT_GE(x.distances[i], x.distances[i - 1]);
    if (x.outcome == Outcome::ReachedTarget) ASSERT_GE(x.distances.back(), 1.5);
  }
}

TEST(SimKernel, TimesOutWhenHorizonExceedsTimeLimit) {
  const TerrainField field(TerrainSpec{});
  RobotParams p;
  p.horizon_distance = 3.0;
  Rng rng(2);
  const RolloutTrace t = rollout(field, make_skill(0.1, 0.1), standing(field, -2.0), p, rng);
  EXPECT_EQ(t.outcome, Outcome::TimedOut);
  EXPECT_EQ(t.steps, 200u);
}

TEST(SimKernelProperty, ViabilityFallsAndCotRisesWithStepHeight) {
  const SkillProfile ascend = make_skill(0.25, 0.08, 210.0);
  const RobotParams p;
  double prev_rate = 1.0;
  double prev_cot = 0.0;
  for (double h = 0.0; h <= 0.3 + 1e-9; h += 0.025) {
    const TerrainField field = stairs_up(h);
    int ok = 0;
    double cot = 0.0;
    for (int i = 0; i < 500; ++i) {
      Rng rng(derive_seed(99, static_cast<std::uint64_t>(i)));
      const RolloutTrace t = rollout(field, ascend, standing(field, -0.45), p, rng);
      if (t.outcome != Outcome::ReachedTarget) continue;
      ++ok;
      cot += compute_cot(t, p, 0.5);
    }
    const double rate = ok / 500.0;
    EXPECT_LE(rate, prev_rate) << "h=" << h;
    if (rate >= 0.9) {
      EXPECT_GE(cot / ok, prev_cot) << "h=" << h;
      prev_cot = cot / ok;
    }
    prev_rate = rate;
  }
  EXPECT_LT(prev_rate, 0.05);
}

TEST(SimKernel, ProfilesRoundTripThroughConfig) {
  SkillProfile s = make_skill(0.25, 0.08, 210.0);
  s.id = 3;
  s.name = "ascend";
  s.max_gap = 0.4;
  KeyValueConfig cfg;
  s.write(cfg);
  const SkillProfile back = SkillProfile::read(KeyValueConfig::parse(cfg.to_text()), "ascend");
  EXPECT_EQ(back.id, 3);
  EXPECT_EQ(back.max_ascend, 0.25);
  EXPECT_EQ(back.max_gap, 0.4);
  EXPECT_EQ(back.slip_sharpness, 60.0);

  SkillProfile other = s;
  other.name = "copy";
  other.write(cfg);
  try {
    read_skills(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ConfigInvalid);
  }
}

TEST(SimKernel, InvalidProfilesRejected) {
  SkillProfile s = make_skill(0.1, 0.1);
  s.base_power = 0.0;
  EXPECT_THROW(s.validate(), Error);
  s = make_skill(-0.1, 0.1);
  EXPECT_THROW(s.validate(), Error);
  s = make_skill(0.1, 0.1);
  s.slip_sharpness = 0.0;
  EXPECT_THROW(s.validate(), Error);
}
