#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>

#include "locosel/datagen.hpp"
#include "locosel/defaults.hpp"

using namespace locosel;

namespace {

SkillProfile skill_named(const std::string& name) { return find_skill(default_config(), name); }

DatasetConfig flat_only() {
  DatasetConfig cfg;
  TerrainFamily flat;
  flat.name = "flat";
  cfg.families.push_back(flat);
  return cfg;
}

TerrainField stairs(double h, TerrainKind kind = TerrainKind::StairsUp) {
  TerrainSpec s;
  s.kind = kind;
  s.step_height = h;
  return TerrainField(s);
}

Pose2p5D standing(const TerrainField& field, double x) {
  return {x, 0.0, field.elevation(x, 0.0) + RobotParams{}.nominal_height, 0.0};
}

template <typename F>
void expect_code(Errc code, F&& f) {
  try {
    f();
    ADD_FAILURE() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

}  // namespace

TEST(Datagen, SpawnOnFlatAcceptsFirstDraw) {
  const TerrainField field(TerrainSpec{});
  Rng a(5), b(5);
  const Pose2p5D pose = sample_spawn(field, a);
  // First draw: x, y, yaw from the region.
  const SpawnRegion region;
  EXPECT_EQ(pose.x, b.uniform(region.x_min, region.x_max));
  EXPECT_EQ(pose.y, b.uniform(region.y_min, region.y_max));
  EXPECT_EQ(pose.yaw, b.uniform(region.yaw_min, region.yaw_max));
  Rng c(5);
  EXPECT_EQ(sample_spawn(field, c), pose);
}

TEST(Datagen, SpawnExhaustsRetriesOnTiledRises) {
  // 0.4 m rises every 0.1 m: every foot probe straddles an edge.
  TerrainSpec s;
  s.kind = TerrainKind::StairsUp;
  s.step_height = 0.4;
  s.step_depth = 0.1;
  s.feature_start = -10.0;
  const TerrainField field(s);
  Rng rng(1);
  expect_code(Errc::RetriesExhausted, [&] { sample_spawn(field, rng); });
}

TEST(Datagen, ViabilityOnFlatIsOne) {
  const TerrainField field(TerrainSpec{});
  for (const auto& skill : default_skills()) {
    Rng rng(3);
    const ViabilitySample s = collect_viability_sample(field, skill, standing(field, 0.0), 10, {}, rng);
    EXPECT_EQ(s.label, 1.0);
    EXPECT_EQ(s.heightfield(kHfCenterRow, kHfCenterCol), 0.0);
    EXPECT_EQ(s.skill_id, skill.id);
  }
}

TEST(Datagen, ViabilityLabelCountsSuccesses) {
  // Independent replay of the protocol: observe once, then N rollouts.
  const TerrainField field = stairs(0.06);
  const SkillProfile walk = skill_named("walk");
  const Pose2p5D pose = standing(field, -0.4);
  bool saw_eight = false;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const ViabilitySample s = collect_viability_sample(field, walk, pose, 10, {}, rng);
    Rng replay(seed);
    const HeightGrid hf = observe(field, pose, replay).values;
    int ok = 0;
    for (int i = 0; i < 10; ++i) ok += rollout(field, walk, pose, {}, replay).outcome == Outcome::ReachedTarget;
    ASSERT_EQ(s.heightfield, hf);
    ASSERT_EQ(s.label, ok / 10.0);
    saw_eight |= ok == 8;
  }
  EXPECT_TRUE(saw_eight);
}

TEST(Datagen, WalkOnTallStairsIsNotViable) {
  const TerrainField field = stairs(0.30);
  SkillProfile walk = skill_named("walk");
  walk.max_ascend = 0.05;
  Rng rng(8);
  EXPECT_LT(collect_viability_sample(field, walk, standing(field, -0.4), 20, {}, rng).label, 0.05);
}

TEST(Datagen, ViabilityRejectsInvalidSpawn) {
  const TerrainField field = stairs(0.15);
  Rng rng(1);
  expect_code(Errc::InvalidSpawn,
              [&] { collect_viability_sample(field, skill_named("walk"), standing(field, 0.3), 10, {}, rng); });
}

TEST(Datagen, CotOnFlatMatchesEquation) {
  const TerrainField field(TerrainSpec{});
  const SkillProfile walk = skill_named("walk");
  Rng rng(2);
  const auto s = collect_cot_sample(field, walk, standing(field, 0.0), {}, rng);
  ASSERT_TRUE(s.has_value());
  // 100 post-warmup steps of 0.012 m at base power.
  const double expected = walk.base_power * 100 * 0.02 / (50.0 * 9.81 * (1.5 - 0.3));
  EXPECT_NEAR(s->label, expected, 1e-12);
  Rng again(2);
  EXPECT_EQ(*collect_cot_sample(field, walk, standing(field, 0.0), {}, again), *s);
}

TEST(Datagen, CotExcludesCrashes) {
  const TerrainField field = stairs(0.3);
  const SkillProfile walk = skill_named("walk");
  int absent = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    absent += !collect_cot_sample(field, walk, standing(field, -0.4), {}, rng).has_value();
  }
  EXPECT_EQ(absent, 20);
}

TEST(Datagen, StratifiedCountsWithinOne) {
  const std::vector<double> weights{0.1, 0.1, 0.1, 0.3, 0.3, 0.05, 0.05};
  for (std::size_t size : {1u, 7u, 100u, 999u, 100000u}) {
    const auto counts = stratify_counts(weights, size);
    std::size_t total = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      EXPECT_LE(std::abs(static_cast<double>(counts[i]) - static_cast<double>(size) * weights[i]), 1.0);
      total += counts[i];
    }
    EXPECT_EQ(total, size);
  }
}

TEST(Datagen, FlatOnlyDatasetIsAllOnes) {
  const Dataset ds = build_dataset(flat_only(), DatasetKind::Viability, skill_named("ascend"), 100, 17);
  ASSERT_EQ(ds.samples.size(), 100u);
  for (const auto& s : ds.samples) EXPECT_EQ(s.label, 1.0);
  EXPECT_EQ(ds.train.size(), 90u);
  EXPECT_EQ(ds.test.size(), 10u);
}

TEST(Datagen, DefaultMixFamilyCountsAndLabelRanges) {
  const KeyValueConfig cfg = default_config();
  const SkillProfile walk = skill_named("walk");
  const DatasetConfig data = dataset_config_for(cfg, walk);
  const std::size_t size = 1500;
  const Dataset ds = build_dataset(data, DatasetKind::Viability, walk, size, 4);
  std::map<TerrainKind, std::size_t> counts;
  for (const auto& s : ds.samples) {
    ++counts[s.meta.kind];
    ASSERT_GE(s.label, 0.0);
    ASSERT_LE(s.label, 1.0);
    ASSERT_EQ(s.heightfield(kHfCenterRow, kHfCenterCol), 0.0);
  }
  double total = 0.0;
  for (const auto& f : data.families) total += f.weight;
  for (const auto& f : data.families)
    EXPECT_LE(std::abs(static_cast<double>(counts[f.base.kind]) - size * f.weight / total), 1.0) << f.name;
}

TEST(Datagen, SplitIsDisjointAndExhaustive) {
  const Dataset ds = build_dataset(flat_only(), DatasetKind::Cot, skill_named("walk"), 37, 9);
  std::vector<std::size_t> all = ds.train;
  all.insert(all.end(), ds.test.begin(), ds.test.end());
  std::sort(all.begin(), all.end());
  ASSERT_EQ(all.size(), 37u);
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], i);
  EXPECT_EQ(ds.train.size(), 34u);
}

TEST(Datagen, RegenerationIsByteIdentical) {
  const KeyValueConfig cfg = default_config();
  const SkillProfile descend = skill_named("descend");
  const DatasetConfig data = dataset_config_for(cfg, descend);
  const std::string a = serialize_dataset(build_dataset(data, DatasetKind::Cot, descend, 120, 31));
  const std::string b = serialize_dataset(build_dataset(data, DatasetKind::Cot, descend, 120, 31));
  EXPECT_EQ(a, b);
  EXPECT_NE(a, serialize_dataset(build_dataset(data, DatasetKind::Cot, descend, 120, 32)));
}

TEST(Datagen, CotLabelsFiniteAndNonnegative) {
  const KeyValueConfig cfg = default_config();
  const SkillProfile ascend = skill_named("ascend");
  const Dataset ds = build_dataset(dataset_config_for(cfg, ascend), DatasetKind::Cot, ascend, 200, 2);
  for (const auto& s : ds.samples) {
    EXPECT_TRUE(std::isfinite(s.label));
    EXPECT_GE(s.label, 0.0);
  }
}

TEST(Datagen, FileRoundTrip) {
  const KeyValueConfig cfg = default_config();
  const SkillProfile walk = skill_named("walk");
  const Dataset ds = build_dataset(dataset_config_for(cfg, walk), DatasetKind::Viability, walk, 50, 77);
  const auto path = std::filesystem::temp_directory_path() / "locosel_dataset_roundtrip.csv";
  write_dataset(ds, path.string());
  const Dataset back = read_dataset(path.string());
  EXPECT_EQ(back, ds);
  std::filesystem::remove(path);
}

TEST(Datagen, MalformedFiles) {
  const Dataset ds = build_dataset(flat_only(), DatasetKind::Viability, skill_named("walk"), 5, 1);
  const std::string text = serialize_dataset(ds);

  expect_code(Errc::MalformedFile, [&] { parse_dataset(text.substr(0, text.size() / 2)); });
  expect_code(Errc::MalformedFile, [&] { parse_dataset(""); });

  std::string bumped = text;
  bumped.replace(bumped.find("format_version=1"), 16, "format_version=7");
  try {
    parse_dataset(bumped);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MalformedFile);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("expected 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("found 7"), std::string::npos) << msg;
  }

  std::string bad_value = text;
  const auto second_line = bad_value.find('\n') + 1;
  bad_value.replace(second_line, 1, "x");
  try {
    parse_dataset(bad_value);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }

  expect_code(Errc::FileNotFound, [] { read_dataset("/nonexistent/locosel.csv"); });
}

TEST(Datagen, ConfigValidation) {
  DatasetConfig cfg = flat_only();
  cfg.families[0].weight = -1.0;
  expect_code(Errc::ConfigInvalid, [&] { cfg.validate(); });
  cfg = flat_only();
  cfg.viability_rollouts = 0;
  expect_code(Errc::ConfigInvalid, [&] { cfg.validate(); });
  expect_code(Errc::ConfigInvalid, [] { DatasetConfig{}.validate(); });
  expect_code(Errc::ConfigInvalid,
              [] { build_dataset(flat_only(), DatasetKind::Viability, default_skills()[0], 0, 1); });
}

TEST(Datagen, ConfigRoundTripsWithPrefix) {
  const DatasetConfig data = DatasetConfig::read(default_config(), "data_gap");
  KeyValueConfig out;
  data.write(out, "mix");
  const DatasetConfig back = DatasetConfig::read(out, "mix");
  ASSERT_EQ(back.families.size(), data.families.size());
  for (std::size_t i = 0; i < data.families.size(); ++i) {
    EXPECT_EQ(back.families[i].name, data.families[i].name);
    EXPECT_EQ(back.families[i].weight, data.families[i].weight);
    EXPECT_EQ(back.families[i].difficulty_max, data.families[i].difficulty_max);
  }
}

TEST(DatagenProperty, BucketedLabelsFollowStepHeight) {
  // Under the kernel: viability falls, CoT rises while viable.
  const SkillProfile ascend = skill_named("ascend");
  double prev_v = 1.0, prev_c = 0.0;
  for (double h = 0.0; h <= 0.3 + 1e-9; h += 0.05) {
    const TerrainField field = stairs(h);
    double v = 0.0, c = 0.0;
    int nc = 0;
    for (std::uint64_t i = 0; i < 60; ++i) {
      const Pose2p5D pose = standing(field, -0.45);
      Rng rng(derive_seed(5, i));
      v += collect_viability_sample(field, ascend, pose, 10, {}, rng).label;
      Rng crng(derive_seed(6, i));
      if (const auto s = collect_cot_sample(field, ascend, pose, {}, crng)) {
        c += s->label;
        ++nc;
      }
    }
    v /= 60.0;
    EXPECT_LE(v, prev_v + 1e-12) << h;
    if (v >= 0.9) {
      EXPECT_GE(c / nc, prev_c) << h;
      prev_c = c / nc;
    }
    prev_v = v;
  }
}
