#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "locosel/config.hpp"
#include "locosel/heightfield.hpp"
#include "locosel/simkernel.hpp"
#include "locosel/terrain.hpp"

namespace locosel {

enum class DatasetKind { Viability, Cot };
const char* to_string(DatasetKind kind);
DatasetKind parse_dataset_kind(const std::string& text);

inline constexpr int kDatasetFormatVersion = 1;
inline constexpr int kSpawnRetryCap = 100;

struct SpawnRegion {
  double x_min = -2.0;
  double x_max = 3.0;
  double y_min = -0.5;
  double y_max = 0.5;
  double yaw_min = -0.3;
  double yaw_max = 0.3;
};

/// Draws uniform poses until one passes validate_spawn (on `skill`'s support
/// surface when given). Throws Errc::RetriesExhausted after `max_retries`
/// rejected draws.
Pose2p5D sample_spawn(const TerrainField& field, Rng& rng, const RobotParams& params = {},
                      const SpawnRegion& region = {}, int max_retries = kSpawnRetryCap,
                      const SkillProfile* skill = nullptr);

struct TerrainMeta {
  TerrainKind kind = TerrainKind::Flat;
  double difficulty = 0.0;
  std::uint64_t seed = 0;

  friend bool operator==(const TerrainMeta&, const TerrainMeta&) = default;
};

/// One labeled heightfield. For viability the label is a success rate in
/// [0, 1]; for CoT it is the cost of transport of one successful rollout.
struct Sample {
  HeightGrid heightfield = HeightGrid::Zero();
  double label = 0.0;
  int skill_id = 0;
  TerrainMeta meta;

  friend bool operator==(const Sample&, const Sample&) = default;
};

using ViabilitySample = Sample;
using CotSample = Sample;

/// Heightfield is observed once (noise -> fill -> normalize), then `rollouts`
/// rollouts run from the same pose. TimedOut and BaseCollision both fail.
ViabilitySample collect_viability_sample(const TerrainField& field, const SkillProfile& skill,
                                         const Pose2p5D& pose, int rollouts,
                                         const RobotParams& params, Rng& rng,
                                         double noise_half_width = 0.1);

/// Single rollout; empty unless it reached the target.
std::optional<CotSample> collect_cot_sample(const TerrainField& field, const SkillProfile& skill,
                                            const Pose2p5D& pose, const RobotParams& params,
                                            Rng& rng, double noise_half_width = 0.1,
                                            double warmup = 0.5);

/// One terrain family of the collection mix. `difficulty` drives step
/// height (stairs), roughness amplitude (rough/discrete), gap width or wall
/// height; `base` supplies every other generator parameter.
struct TerrainFamily {
  std::string name;
  double weight = 1.0;
  double difficulty_min = 0.0;
  double difficulty_max = 0.0;
  TerrainSpec base;

  TerrainSpec terrain(double difficulty, std::uint64_t seed) const;
};

struct DatasetConfig {
  std::vector<TerrainFamily> families;
  SpawnRegion spawn;
  RobotParams robot;
  int viability_rollouts = 10;
  double noise_half_width = 0.1;
  double cot_warmup = 0.5;
  int max_attempts = 200;
  double train_fraction = 0.9;

  void validate() const;
  /// Keys under `<prefix>.`; robot parameters under `robot.`.
  static DatasetConfig read(const KeyValueConfig& cfg, const std::string& prefix = "data");
  void write(KeyValueConfig& cfg, const std::string& prefix = "data") const;
};

/// Per-family sample counts by largest remainder; each within 1 of
/// size * weight / total_weight.
std::vector<std::size_t> stratify_counts(const std::vector<double>& weights, std::size_t size);

struct Dataset {
  DatasetKind kind = DatasetKind::Viability;
  int skill_id = 0;
  std::uint64_t master_seed = 0;
  std::vector<Sample> samples;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Seeded shuffle of [0, count) split into train/test.
void assign_split(Dataset& ds, double train_fraction = 0.9);

/// Collects exactly `size` retained samples. Sample i derives every random
/// stream from (master_seed, i, attempt), so output is order-independent.
Dataset build_dataset(const DatasetConfig& cfg, DatasetKind kind, const SkillProfile& skill,
                      std::size_t size, std::uint64_t master_seed);

std::string serialize_dataset(const Dataset& ds);
Dataset parse_dataset(std::string_view text, double train_fraction = 0.9);
void write_dataset(const Dataset& ds, const std::string& path);
Dataset read_dataset(const std::string& path);

}  // namespace locosel
