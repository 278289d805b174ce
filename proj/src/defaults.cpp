#include "locosel/defaults.hpp"

#include <algorithm>

namespace locosel {

namespace {

constexpr const char* kDefaults = R"(# skills
skill.walk.id = 0
skill.walk.max_ascend = 0.10
skill.walk.max_descend = 0.10
skill.walk.base_power = 150
skill.walk.power_per_ascend = 700
skill.walk.power_per_descend = 250
skill.walk.slip_sharpness = 40
skill.walk.swing_clearance = 0.02
skill.walk.threshold = 0.95

skill.ascend.id = 1
skill.ascend.max_ascend = 0.25
skill.ascend.max_descend = 0.15
skill.ascend.base_power = 210
skill.ascend.power_per_ascend = 600
skill.ascend.power_per_descend = 300
skill.ascend.slip_sharpness = 40
skill.ascend.swing_clearance = 0.03
skill.ascend.threshold = 0.925

skill.descend.id = 2
skill.descend.max_ascend = 0.15
skill.descend.max_descend = 0.25
skill.descend.base_power = 200
skill.descend.power_per_ascend = 800
skill.descend.power_per_descend = 200
skill.descend.slip_sharpness = 40
skill.descend.swing_clearance = 0.03
skill.descend.threshold = 0.925

skill.climb.id = 3
skill.climb.max_ascend = 0.5
skill.climb.max_descend = 0.5
skill.climb.base_power = 320
skill.climb.power_per_ascend = 600
skill.climb.power_per_descend = 300
skill.climb.slip_sharpness = 40
skill.climb.swing_clearance = 0.03
skill.climb.threshold = 0.925
skill.climb.data = data_climb

skill.gap.id = 4
skill.gap.max_ascend = 0.10
skill.gap.max_descend = 0.10
skill.gap.base_power = 280
skill.gap.power_per_ascend = 700
skill.gap.power_per_descend = 250
skill.gap.slip_sharpness = 40
skill.gap.swing_clearance = 0.03
skill.gap.max_gap = 0.7
skill.gap.threshold = 0.925
skill.gap.data = data_gap

robot.mass = 50
robot.gravity = 9.81
robot.command_speed = 0.6
robot.control_dt = 0.02
robot.time_limit = 4
robot.horizon_distance = 1.5
robot.nominal_height = 0.5
robot.body_clearance = 0.5

selector.window = 10

# collection mix of walk, ascend and descend
data.rollouts = 10
data.noise = 0.1
data.cot_warmup = 0.5
data.max_attempts = 200
data.train_fraction = 0.9
data.family.flat.kind = flat
data.family.flat.weight = 0.1
data.family.rough.kind = rough
data.family.rough.weight = 0.1
data.family.rough.difficulty_min = 0.02
data.family.rough.difficulty_max = 0.05
data.family.rough.obstacle_size = 0.3
data.family.discrete.kind = discrete
data.family.discrete.weight = 0.1
data.family.discrete.difficulty_min = 0
data.family.discrete.difficulty_max = 0.08
data.family.discrete.obstacle_size = 0.5
data.family.stairs_up.kind = stairs_up
data.family.stairs_up.weight = 0.3
data.family.stairs_up.difficulty_min = 0
data.family.stairs_up.difficulty_max = 0.32
data.family.stairs_up.step_depth = 0.3
data.family.stairs_up.num_steps = 8
data.family.stairs_down.kind = stairs_down
data.family.stairs_down.weight = 0.3
data.family.stairs_down.difficulty_min = 0
data.family.stairs_down.difficulty_max = 0.32
data.family.stairs_down.step_depth = 0.3
data.family.stairs_down.num_steps = 8
data.family.wall.kind = wall
data.family.wall.weight = 0.05
data.family.wall.difficulty_min = 0.1
data.family.wall.difficulty_max = 0.5
data.family.gap.kind = gap
data.family.gap.weight = 0.05
data.family.gap.difficulty_min = 0.2
data.family.gap.difficulty_max = 0.9

# collection mix of climb
data_climb.rollouts = 10
data_climb.noise = 0.1
data_climb.cot_warmup = 0.5
data_climb.max_attempts = 200
data_climb.train_fraction = 0.9
data_climb.family.flat.kind = flat
data_climb.family.flat.weight = 0.15
data_climb.family.stairs_up.kind = stairs_up
data_climb.family.stairs_up.weight = 0.15
data_climb.family.stairs_up.difficulty_max = 0.32
data_climb.family.stairs_up.num_steps = 8
data_climb.family.stairs_down.kind = stairs_down
data_climb.family.stairs_down.weight = 0.15
data_climb.family.stairs_down.difficulty_max = 0.32
data_climb.family.stairs_down.num_steps = 8
data_climb.family.wall.kind = wall
data_climb.family.wall.weight = 0.4
data_climb.family.wall.difficulty_min = 0.1
data_climb.family.wall.difficulty_max = 0.6
data_climb.family.gap.kind = gap
data_climb.family.gap.weight = 0.15
data_climb.family.gap.difficulty_min = 0.2
data_climb.family.gap.difficulty_max = 0.9

# collection mix of gap
data_gap.rollouts = 10
data_gap.noise = 0.1
data_gap.cot_warmup = 0.5
data_gap.max_attempts = 200
data_gap.train_fraction = 0.9
data_gap.family.flat.kind = flat
data_gap.family.flat.weight = 0.15
data_gap.family.stairs_up.kind = stairs_up
data_gap.family.stairs_up.weight = 0.15
data_gap.family.stairs_up.difficulty_max = 0.32
data_gap.family.stairs_up.num_steps = 8
data_gap.family.stairs_down.kind = stairs_down
data_gap.family.stairs_down.weight = 0.15
data_gap.family.stairs_down.difficulty_max = 0.32
data_gap.family.stairs_down.num_steps = 8
data_gap.family.wall.kind = wall
data_gap.family.wall.weight = 0.15
data_gap.family.wall.difficulty_min = 0.1
data_gap.family.wall.difficulty_max = 0.5
data_gap.family.gap.kind = gap
data_gap.family.gap.weight = 0.4
data_gap.family.gap.difficulty_min = 0.2
data_gap.family.gap.difficulty_max = 0.9

collect.viability_size = 11112
collect.cot_size = 11112

train.learning_rate = 0.005
train.momentum = 0.9
train.batch_size = 64
train.epochs = 60

eval.base_skills = walk,ascend,descend
eval.baseline = walk
eval.cot_cutoff = 0.9
eval.sweep.height_min = 0
eval.sweep.height_max = 0.3
eval.sweep.increment = 0.025
eval.sweep.samples = 500
eval.sweep.rollouts = 10
eval.sweep.max_attempts = 50
eval.sweep.seed = 7001
# Every draw crosses a stair edge within the horizon, and the first edge is
# close enough that the treads below a 0.3 m drop are not in shadow.
eval.sweep.spawn.x_min = -0.6
eval.sweep.spawn.x_max = 2.0
eval.course.heights = 0.05,0.10,0.15,0.20,0.25,0.30
eval.course.trials = 100
eval.course.seed = 7002
eval.course.stairs_start = 2.5
eval.course.num_steps = 6
eval.course.step_depth = 0.3
eval.course.landing = 1.5
eval.course.lateral_jitter = 0.2
eval.course.yaw_jitter = 0.1
eval.course.stop_patience = 2
eval.course.extra_time = 5
eval.obstacle.wall_start = 2
eval.obstacle.wall_height = 0.4
eval.obstacle.wall_thickness = 0.6
eval.obstacle.gap_start = 5
eval.obstacle.gap_width = 0.5
eval.obstacle.gap_depth = 0.5
eval.obstacle.goal_x = 8
eval.obstacle.seed = 7003
eval.obstacle.stop_patience = 2
eval.obstacle.extra_time = 5
)";

std::vector<std::string> list(const std::string& text) {
  std::vector<std::string> out;
  for (auto part : split(text, ',')) {
    part = trim(part);
    if (!part.empty()) out.emplace_back(part);
  }
  return out;
}

std::size_t positive_size(const KeyValueConfig& cfg, const std::string& key, long long fallback) {
  const long long v = cfg.get_int(key, fallback);
  if (v < 1) throw Error(Errc::ConfigInvalid, key + " must be >= 1");
  return static_cast<std::size_t>(v);
}

}  // namespace

std::string default_config_text() { return kDefaults; }

KeyValueConfig default_config() { return KeyValueConfig::parse(kDefaults, "<defaults>"); }

KeyValueConfig load_config(const std::string& path) {
  KeyValueConfig cfg = default_config();
  if (!path.empty()) cfg.merge(KeyValueConfig::load(path));
  return cfg;
}

std::vector<SkillProfile> default_skills() { return read_skills(default_config()); }

SkillProfile find_skill(const KeyValueConfig& cfg, const std::string& name) {
  const auto names = cfg.sections("skill");
  if (std::find(names.begin(), names.end(), name) == names.end())
    throw Error(Errc::ConfigInvalid, "unknown skill '" + name + "'");
  return SkillProfile::read(cfg, name);
}

DatasetConfig dataset_config_for(const KeyValueConfig& cfg, const SkillProfile& skill) {
  return DatasetConfig::read(cfg, cfg.get_string("skill." + skill.name + ".data", "data"));
}

std::size_t dataset_size(const KeyValueConfig& cfg, DatasetKind kind) {
  return positive_size(cfg, kind == DatasetKind::Viability ? "collect.viability_size" : "collect.cot_size",
                       10000);
}

double skill_threshold(const KeyValueConfig& cfg, const SkillProfile& skill) {
  const double t = cfg.get_double("skill." + skill.name + ".threshold", 0.925);
  if (!(t >= 0.0 && t <= 1.0))
    throw Error(Errc::ConfigInvalid, "threshold of skill '" + skill.name + "' must lie in [0, 1]");
  return t;
}

std::size_t window_length(const KeyValueConfig& cfg) { return positive_size(cfg, "selector.window", 10); }

TrainConfig read_train_config(const KeyValueConfig& cfg) {
  TrainConfig t;
  t.learning_rate = cfg.get_double("train.learning_rate", t.learning_rate);
  t.momentum = cfg.get_double("train.momentum", t.momentum);
  t.batch_size = positive_size(cfg, "train.batch_size", static_cast<long long>(t.batch_size));
  t.epochs = positive_size(cfg, "train.epochs", static_cast<long long>(t.epochs));
  t.seed = static_cast<std::uint64_t>(cfg.get_int("train.seed", 0));
  t.validate();
  return t;
}

std::vector<std::string> base_skill_names(const KeyValueConfig& cfg) {
  return list(cfg.get_string("eval.base_skills", "walk,ascend,descend"));
}

std::string baseline_skill_name(const KeyValueConfig& cfg) {
  return cfg.get_string("eval.baseline", "walk");
}

SweepConfig read_sweep_config(const KeyValueConfig& cfg, const std::string& family) {
  const DatasetConfig data = DatasetConfig::read(cfg, "data");
  const auto it = std::find_if(data.families.begin(), data.families.end(),
                               [&](const TerrainFamily& f) { return f.name == family; });
  if (it == data.families.end())
    throw Error(Errc::ConfigInvalid, "sweep family '" + family + "' is not in the data mix");
  SweepConfig s;
  s.family = *it;
  s.height_min = cfg.get_double("eval.sweep.height_min", s.height_min);
  s.height_max = cfg.get_double("eval.sweep.height_max", s.height_max);
  s.increment = cfg.get_double("eval.sweep.increment", s.increment);
  s.samples_per_height = positive_size(cfg, "eval.sweep.samples", 500);
  s.seed = static_cast<std::uint64_t>(cfg.get_int("eval.sweep.seed", 0));
  s.spawn = data.spawn;
  s.spawn.x_min = cfg.get_double("eval.sweep.spawn.x_min", s.spawn.x_min);
  s.spawn.x_max = cfg.get_double("eval.sweep.spawn.x_max", s.spawn.x_max);
  s.robot = data.robot;
  s.rollouts = static_cast<int>(cfg.get_int("eval.sweep.rollouts", s.rollouts));
  s.noise_half_width = data.noise_half_width;
  s.cot_warmup = data.cot_warmup;
  s.max_attempts = static_cast<int>(cfg.get_int("eval.sweep.max_attempts", s.max_attempts));
  s.validate();
  return s;
}

double cot_cutoff(const KeyValueConfig& cfg) { return cfg.get_double("eval.cot_cutoff", 0.9); }

CourseConfig read_course_config(const KeyValueConfig& cfg, TerrainKind direction) {
  CourseConfig c;
  c.direction = direction;
  if (const auto h = cfg.find("eval.course.heights")) {
    c.heights.clear();
    for (const auto& v : list(*h)) c.heights.push_back(parse_double(v));
  }
  c.trials = positive_size(cfg, "eval.course.trials", 100);
  c.seed = static_cast<std::uint64_t>(cfg.get_int("eval.course.seed", 0));
  c.stairs_start = cfg.get_double("eval.course.stairs_start", c.stairs_start);
  c.num_steps = static_cast<int>(cfg.get_int("eval.course.num_steps", c.num_steps));
  c.step_depth = cfg.get_double("eval.course.step_depth", c.step_depth);
  c.landing = cfg.get_double("eval.course.landing", c.landing);
  c.lateral_jitter = cfg.get_double("eval.course.lateral_jitter", c.lateral_jitter);
  c.yaw_jitter = cfg.get_double("eval.course.yaw_jitter", c.yaw_jitter);
  c.noise_half_width = cfg.get_double("data.noise", c.noise_half_width);
  c.stop_patience = cfg.get_double("eval.course.stop_patience", c.stop_patience);
  c.extra_time = cfg.get_double("eval.course.extra_time", c.extra_time);
  c.window_length = window_length(cfg);
  c.robot = RobotParams::read(cfg);
  c.validate();
  return c;
}

ObstacleCourseConfig read_obstacle_config(const KeyValueConfig& cfg) {
  ObstacleCourseConfig o;
  o.wall_start = cfg.get_double("eval.obstacle.wall_start", o.wall_start);
  o.wall_height = cfg.get_double("eval.obstacle.wall_height", o.wall_height);
  o.wall_thickness = cfg.get_double("eval.obstacle.wall_thickness", o.wall_thickness);
  o.gap_start = cfg.get_double("eval.obstacle.gap_start", o.gap_start);
  o.gap_width = cfg.get_double("eval.obstacle.gap_width", o.gap_width);
  o.gap_depth = cfg.get_double("eval.obstacle.gap_depth", o.gap_depth);
  o.goal_x = cfg.get_double("eval.obstacle.goal_x", o.goal_x);
  o.seed = static_cast<std::uint64_t>(cfg.get_int("eval.obstacle.seed", 0));
  o.noise_half_width = cfg.get_double("data.noise", o.noise_half_width);
  o.stop_patience = cfg.get_double("eval.obstacle.stop_patience", o.stop_patience);
  o.extra_time = cfg.get_double("eval.obstacle.extra_time", o.extra_time);
  o.window_length = window_length(cfg);
  o.robot = RobotParams::read(cfg);
  return o;
}

}  // namespace locosel
