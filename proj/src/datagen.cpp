#include "locosel/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace locosel {

const char* to_string(DatasetKind kind) {
  return kind == DatasetKind::Viability ? "viability" : "cot";
}

DatasetKind parse_dataset_kind(const std::string& text) {
  if (text == "viability") return DatasetKind::Viability;
  if (text == "cot") return DatasetKind::Cot;
  throw Error(Errc::ConfigInvalid, "unknown dataset kind '" + text + "'");
}

Pose2p5D sample_spawn(const TerrainField& field, Rng& rng, const RobotParams& params,
                      const SpawnRegion& region, int max_retries, const SkillProfile* skill) {
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    Pose2p5D pose;
    pose.x = rng.uniform(region.x_min, region.x_max);
    pose.y = rng.uniform(region.y_min, region.y_max);
    pose.yaw = normalize_angle(rng.uniform(region.yaw_min, region.yaw_max));
    const double ground =
        skill ? support_height(field, *skill, pose.x, pose.y, pose.yaw) : field.elevation(pose.x, pose.y);
    pose.z = ground + params.nominal_height;
    if (validate_spawn(field, pose, params, skill)) return pose;
  }
  throw Error(Errc::RetriesExhausted,
              "no valid spawn after " + std::to_string(max_retries) + " draws on " +
                  to_string(field.spec().kind) + " terrain (difficulty " +
                  format_number(field.spec().difficulty()) + ")");
}

namespace {

TerrainMeta meta_of(const TerrainField& field) {
  return {field.spec().kind, field.spec().difficulty(), field.spec().seed};
}

}  // namespace

ViabilitySample collect_viability_sample(const TerrainField& field, const SkillProfile& skill,
                                         const Pose2p5D& pose, int rollouts,
                                         const RobotParams& params, Rng& rng,
                                         double noise_half_width) {
  if (rollouts < 1) throw Error(Errc::ConfigInvalid, "viability needs at least one rollout");
  if (!validate_spawn(field, pose, params, &skill))
    throw Error(Errc::InvalidSpawn, "viability sample requested at an invalid spawn");
  ViabilitySample sample;
  sample.heightfield = observe(field, pose, rng, noise_half_width).values;
  sample.skill_id = skill.id;
  sample.meta = meta_of(field);
  int successes = 0;
  for (int i = 0; i < rollouts; ++i)
    if (rollout(field, skill, pose, params, rng).outcome == Outcome::ReachedTarget) ++successes;
  sample.label = static_cast<double>(successes) / static_cast<double>(rollouts);
  return sample;
}

std::optional<CotSample> collect_cot_sample(const TerrainField& field, const SkillProfile& skill,
                                            const Pose2p5D& pose, const RobotParams& params,
                                            Rng& rng, double noise_half_width, double warmup) {
  if (!validate_spawn(field, pose, params, &skill))
    throw Error(Errc::InvalidSpawn, "CoT sample requested at an invalid spawn");
  CotSample sample;
  sample.heightfield = observe(field, pose, rng, noise_half_width).values;
  sample.skill_id = skill.id;
  sample.meta = meta_of(field);
  const RolloutTrace trace = rollout(field, skill, pose, params, rng);
  if (trace.outcome != Outcome::ReachedTarget) return std::nullopt;
  sample.label = compute_cot(trace, params, warmup);
  return sample;
}

TerrainSpec TerrainFamily::terrain(double difficulty, std::uint64_t seed) const {
  TerrainSpec spec = base;
  spec.seed = seed;
  switch (spec.kind) {
    case TerrainKind::StairsUp:
    case TerrainKind::StairsDown: spec.step_height = difficulty; break;
    case TerrainKind::Rough:
    case TerrainKind::Discrete: spec.roughness_amplitude = difficulty; break;
    case TerrainKind::Gap: spec.gap_width = difficulty; break;
    case TerrainKind::Wall: spec.wall_height = difficulty; break;
    case TerrainKind::Flat: break;
  }
  return spec;
}

void DatasetConfig::validate() const {
  if (families.empty()) throw Error(Errc::ConfigInvalid, "dataset config has no terrain families");
  double total = 0.0;
  for (const auto& f : families) {
    if (!(f.weight >= 0.0)) throw Error(Errc::ConfigInvalid, "family '" + f.name + "': negative weight");
    if (f.difficulty_max < f.difficulty_min)
      throw Error(Errc::ConfigInvalid, "family '" + f.name + "': difficulty_max < difficulty_min");
    try {
      f.terrain(f.difficulty_max, 0).validate();
    } catch (const Error& e) {
      throw Error(Errc::ConfigInvalid, "family '" + f.name + "': " + e.what());
    }
    total += f.weight;
  }
  if (!(total > 0.0)) throw Error(Errc::ConfigInvalid, "family weights sum to zero");
  if (viability_rollouts < 1) throw Error(Errc::ConfigInvalid, "data.rollouts must be >= 1");
  if (!(noise_half_width >= 0.0)) throw Error(Errc::ConfigInvalid, "data.noise must be >= 0");
  if (!(train_fraction > 0.0 && train_fraction <= 1.0))
    throw Error(Errc::ConfigInvalid, "data.train_fraction must be in (0, 1]");
  if (max_attempts < 1) throw Error(Errc::ConfigInvalid, "data.max_attempts must be >= 1");
  if (spawn.x_max < spawn.x_min || spawn.y_max < spawn.y_min || spawn.yaw_max < spawn.yaw_min)
    throw Error(Errc::ConfigInvalid, "spawn region bounds are inverted");
  robot.validate();
}

DatasetConfig DatasetConfig::read(const KeyValueConfig& cfg, const std::string& prefix) {
  DatasetConfig out;
  for (const auto& name : cfg.sections(prefix + ".family")) {
    const std::string p = prefix + ".family." + name;
    TerrainFamily f;
    f.name = name;
    f.base = TerrainSpec::read(cfg, p);
    f.weight = cfg.get_double(p + ".weight", 1.0);
    f.difficulty_min = cfg.get_double(p + ".difficulty_min", 0.0);
    f.difficulty_max = cfg.get_double(p + ".difficulty_max", f.difficulty_min);
    out.families.push_back(f);
  }
  out.spawn.x_min = cfg.get_double(prefix + ".spawn.x_min", out.spawn.x_min);
  out.spawn.x_max = cfg.get_double(prefix + ".spawn.x_max", out.spawn.x_max);
  out.spawn.y_min = cfg.get_double(prefix + ".spawn.y_min", out.spawn.y_min);
  out.spawn.y_max = cfg.get_double(prefix + ".spawn.y_max", out.spawn.y_max);
  out.spawn.yaw_min = cfg.get_double(prefix + ".spawn.yaw_min", out.spawn.yaw_min);
  out.spawn.yaw_max = cfg.get_double(prefix + ".spawn.yaw_max", out.spawn.yaw_max);
  out.viability_rollouts = static_cast<int>(cfg.get_int(prefix + ".rollouts", out.viability_rollouts));
  out.noise_half_width = cfg.get_double(prefix + ".noise", out.noise_half_width);
  out.cot_warmup = cfg.get_double(prefix + ".cot_warmup", out.cot_warmup);
  out.max_attempts = static_cast<int>(cfg.get_int(prefix + ".max_attempts", out.max_attempts));
  out.train_fraction = cfg.get_double(prefix + ".train_fraction", out.train_fraction);
  out.robot = RobotParams::read(cfg);
  out.validate();
  return out;
}

void DatasetConfig::write(KeyValueConfig& cfg, const std::string& prefix) const {
  for (const auto& f : families) {
    const std::string p = prefix + ".family." + f.name;
    f.base.write(cfg, p);
    cfg.set(p + ".weight", format_number(f.weight));
    cfg.set(p + ".difficulty_min", format_number(f.difficulty_min));
    cfg.set(p + ".difficulty_max", format_number(f.difficulty_max));
  }
  cfg.set(prefix + ".spawn.x_min", format_number(spawn.x_min));
  cfg.set(prefix + ".spawn.x_max", format_number(spawn.x_max));
  cfg.set(prefix + ".spawn.y_min", format_number(spawn.y_min));
  cfg.set(prefix + ".spawn.y_max", format_number(spawn.y_max));
  cfg.set(prefix + ".spawn.yaw_min", format_number(spawn.yaw_min));
  cfg.set(prefix + ".spawn.yaw_max", format_number(spawn.yaw_max));
  cfg.set(prefix + ".rollouts", std::to_string(viability_rollouts));
  cfg.set(prefix + ".noise", format_number(noise_half_width));
  cfg.set(prefix + ".cot_warmup", format_number(cot_warmup));
  cfg.set(prefix + ".max_attempts", std::to_string(max_attempts));
  cfg.set(prefix + ".train_fraction", format_number(train_fraction));
  robot.write(cfg);
}

std::vector<std::size_t> stratify_counts(const std::vector<double>& weights, std::size_t size) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::size_t> counts(weights.size(), 0);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = static_cast<double>(size) * weights[i] / total;
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < size; ++k, ++assigned) ++counts[remainders[k].second];
  return counts;
}

void assign_split(Dataset& ds, double train_fraction) {
  const std::size_t n = ds.samples.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(ds.master_seed, 0x5b117));
  rng.shuffle(order);
  const auto n_train = static_cast<std::size_t>(std::ceil(train_fraction * static_cast<double>(n) - 1e-9));
  ds.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  ds.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(ds.train.begin(), ds.train.end());
  std::sort(ds.test.begin(), ds.test.end());
}

Dataset build_dataset(const DatasetConfig& cfg, DatasetKind kind, const SkillProfile& skill,
                      std::size_t size, std::uint64_t master_seed) {
  cfg.validate();
  skill.validate();
  if (size < 1) throw Error(Errc::ConfigInvalid, "dataset size must be >= 1");

  std::vector<double> weights;
  for (const auto& f : cfg.families) weights.push_back(f.weight);
  const auto counts = stratify_counts(weights, size);

  Dataset ds;
  ds.kind = kind;
  ds.skill_id = skill.id;
  ds.master_seed = master_seed;
  ds.samples.reserve(size);

  std::size_t index = 0;
  for (std::size_t fi = 0; fi < cfg.families.size(); ++fi) {
    const TerrainFamily& family = cfg.families[fi];
    for (std::size_t j = 0; j < counts[fi]; ++j, ++index) {
      Rng jitter(derive_seed(master_seed, index, 0));
      const double span = family.difficulty_max - family.difficulty_min;
      const double difficulty = family.difficulty_min +
                                span * (static_cast<double>(j) + jitter.uniform()) /
                                    static_cast<double>(counts[fi]);
      std::optional<Sample> sample;
      for (int attempt = 1; attempt <= cfg.max_attempts && !sample; ++attempt) {
        const std::uint64_t seed = derive_seed(master_seed, index, static_cast<std::uint64_t>(attempt));
        const TerrainField field(family.terrain(difficulty, derive_seed(seed, 1)));
        Rng spawn_rng(derive_seed(seed, 2));
        Pose2p5D pose;
        try {
          pose = sample_spawn(field, spawn_rng, cfg.robot, cfg.spawn, kSpawnRetryCap, &skill);
        } catch (const Error& e) {
          if (e.code() != Errc::RetriesExhausted) throw;
          continue;
        }
        Rng rng(derive_seed(seed, 3));
        if (kind == DatasetKind::Viability)
          sample = collect_viability_sample(field, skill, pose, cfg.viability_rollouts, cfg.robot,
                                            rng, cfg.noise_half_width);
        else
          sample = collect_cot_sample(field, skill, pose, cfg.robot, rng, cfg.noise_half_width,
                                      cfg.cot_warmup);
      }
      if (!sample)
        throw Error(Errc::RetriesExhausted,
                    "sample " + std::to_string(index) + " of family '" + family.name +
                        "' (difficulty " + format_number(difficulty) + ") not collected after " +
                        std::to_string(cfg.max_attempts) + " attempts");
      ds.samples.push_back(*sample);
    }
  }
  assign_split(ds, cfg.train_fraction);
  return ds;
}

std::string serialize_dataset(const Dataset& ds) {
  std::string out;
  out.reserve(ds.samples.size() * 3000 + 128);
  out += "# format_version=" + std::to_string(kDatasetFormatVersion) +
         ",kind=" + to_string(ds.kind) + ",skill_id=" + std::to_string(ds.skill_id) +
         ",rows=" + std::to_string(kHfRows) + ",cols=" + std::to_string(kHfCols) +
         ",count=" + std::to_string(ds.samples.size()) +
         ",master_seed=" + std::to_string(ds.master_seed) + "\n";
  for (const auto& s : ds.samples) {
    for (int r = 0; r < kHfRows; ++r)
      for (int c = 0; c < kHfCols; ++c) {
        out += format_number(s.heightfield(r, c));
        out += ',';
      }
    out += format_number(s.label);
    out += ',';
    out += to_string(s.meta.kind);
    out += ',';
    out += format_number(s.meta.difficulty);
    out += ',';
    out += std::to_string(s.meta.seed);
    out += '\n';
  }
  return out;
}

Dataset parse_dataset(std::string_view text, double train_fraction) {
  auto lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty() || lines[0].substr(0, 1) != "#")
    throw Error(Errc::MalformedFile, "line 1: missing '#' header record");

  KeyValueConfig header;
  for (auto field : split(trim(lines[0].substr(1)), ',')) {
    const auto eq = field.find('=');
    if (eq == std::string_view::npos)
      throw Error(Errc::MalformedFile, "line 1: header field '" + std::string(field) + "' lacks '='");
    header.set(std::string(trim(field.substr(0, eq))), std::string(trim(field.substr(eq + 1))));
  }
  Dataset ds;
  std::size_t count = 0;
  try {
    const long long version = header.get_int("format_version");
    if (version != kDatasetFormatVersion)
      throw Error(Errc::MalformedFile, "format_version mismatch: expected " +
                                           std::to_string(kDatasetFormatVersion) + ", found " +
                                           std::to_string(version));
    ds.kind = parse_dataset_kind(header.get_string("kind"));
    ds.skill_id = static_cast<int>(header.get_int("skill_id"));
    if (header.get_int("rows") != kHfRows || header.get_int("cols") != kHfCols)
      throw Error(Errc::MalformedFile, "heightfield shape must be 31x11");
    count = static_cast<std::size_t>(header.get_int("count"));
    ds.master_seed = static_cast<std::uint64_t>(std::stoull(header.get_string("master_seed")));
  } catch (const Error& e) {
    if (e.code() == Errc::MalformedFile) throw;
    throw Error(Errc::MalformedFile, std::string("line 1: ") + e.what());
  } catch (const std::exception& e) {
    throw Error(Errc::MalformedFile, std::string("line 1: bad header value: ") + e.what());
  }

  if (lines.size() - 1 != count)
    throw Error(Errc::MalformedFile, "header declares " + std::to_string(count) +
                                         " records, found " + std::to_string(lines.size() - 1));
  constexpr std::size_t kFields = kHfCells + 4;
  ds.samples.reserve(count);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto fields = split(lines[li], ',');
    const std::string where = "line " + std::to_string(li + 1) + " (record " + std::to_string(li - 1) + ")";
    if (fields.size() != kFields)
      throw Error(Errc::MalformedFile, where + ": expected " + std::to_string(kFields) +
                                           " fields, found " + std::to_string(fields.size()));
    Sample s;
    s.skill_id = ds.skill_id;
    try {
      for (int k = 0; k < kHfCells; ++k)
        s.heightfield(k / kHfCols, k % kHfCols) = parse_double(fields[static_cast<std::size_t>(k)]);
      s.label = parse_double(fields[kHfCells]);
      s.meta.kind = parse_terrain_kind(std::string(trim(fields[kHfCells + 1])));
      s.meta.difficulty = parse_double(fields[kHfCells + 2]);
      s.meta.seed = std::stoull(std::string(trim(fields[kHfCells + 3])));
    } catch (const std::exception& e) {
      throw Error(Errc::MalformedFile, where + ": " + e.what());
    }
    ds.samples.push_back(s);
  }
  assign_split(ds, train_fraction);
  return ds;
}

void write_dataset(const Dataset& ds, const std::string& path) {
  write_file(path, serialize_dataset(ds));
}

Dataset read_dataset(const std::string& path) { return parse_dataset(read_file(path)); }

}  // namespace locosel
