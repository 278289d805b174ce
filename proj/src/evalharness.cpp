#include "locosel/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace locosel {

namespace {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& v) {
  if (v.empty()) return {};
  double sum = 0.0;
  for (double x : v) sum += x;
  const double mean = sum / static_cast<double>(v.size());
  double sq = 0.0;
  for (double x : v) sq += (x - mean) * (x - mean);
  return {mean, std::sqrt(sq / static_cast<double>(v.size()))};
}

struct SweepDraw {
  TerrainField field;
  Pose2p5D pose;
  std::uint64_t stream = 0;
};

SweepDraw draw_sample(const SweepConfig& sweep, double height, std::size_t j) {
  for (int attempt = 1; attempt <= sweep.max_attempts; ++attempt) {
    const std::uint64_t seed = derive_seed(sweep.seed, j, static_cast<std::uint64_t>(attempt));
    SweepDraw draw{TerrainField(sweep.family.terrain(height, derive_seed(seed, 1))), {}, derive_seed(seed, 3)};
    Rng spawn_rng(derive_seed(seed, 2));
    try {
      draw.pose = sample_spawn(draw.field, spawn_rng, sweep.robot, sweep.spawn);
      return draw;
    } catch (const Error& e) {
      if (e.code() != Errc::RetriesExhausted) throw;
    }
  }
  throw Error(Errc::RetriesExhausted, "sweep sample " + std::to_string(j) + " at height " +
                                          format_number(height) + " found no valid spawn");
}

std::vector<double> predict_all(const Model& model, const std::vector<HeightGrid>& grids) {
  std::vector<double> out;
  out.reserve(grids.size());
  std::vector<const HeightGrid*> ptrs;
  constexpr std::size_t kBatch = 256;
  for (std::size_t start = 0; start < grids.size(); start += kBatch) {
    ptrs.clear();
    for (std::size_t k = start; k < std::min(grids.size(), start + kBatch); ++k) ptrs.push_back(&grids[k]);
    for (double v : predict_raw(model, std::span<const HeightGrid* const>(ptrs)))
      out.push_back(model.head_kind == HeadKind::Linear ? std::max(v, 0.0) : v);
  }
  return out;
}

}  // namespace

void SweepConfig::validate() const {
  if (!(increment > 0.0)) throw Error(Errc::ConfigInvalid, "sweep increment must be > 0");
  if (height_max < height_min) throw Error(Errc::ConfigInvalid, "sweep range is inverted");
  if (samples_per_height < 1) throw Error(Errc::ConfigInvalid, "samples_per_height must be >= 1");
  if (rollouts < 1) throw Error(Errc::ConfigInvalid, "sweep rollouts must be >= 1");
  try {
    family.terrain(height_max, 0).validate();
  } catch (const Error& e) {
    throw Error(Errc::ConfigInvalid, std::string("sweep family: ") + e.what());
  }
  robot.validate();
}

std::vector<double> SweepConfig::heights() const {
  std::vector<double> out;
  const auto n = static_cast<std::size_t>(std::floor((height_max - height_min) / increment + 1e-9));
  // Rounded to nanometers so that 0.075 prints as 0.075.
  for (std::size_t i = 0; i <= n; ++i)
    out.push_back(std::round((height_min + increment * static_cast<double>(i)) * 1e9) / 1e9);
  return out;
}

CurveResult run_viability_calibration(const SweepConfig& sweep, const SkillProfile& skill,
                                      const Model& viability_model) {
  sweep.validate();
  if (viability_model.head_kind != HeadKind::Sigmoid)
    throw Error(Errc::HeadKindMismatch, "calibration needs a viability (sigmoid) model");
  CurveResult result{skill.name, sweep.family.name, {}};
  for (double height : sweep.heights()) {
    std::vector<HeightGrid> grids;
    std::vector<double> labels;
    std::size_t reached = 0, collided = 0, total = 0;
    for (std::size_t j = 0; j < sweep.samples_per_height; ++j) {
      const SweepDraw draw = draw_sample(sweep, height, j);
      Rng rng(draw.stream);
      grids.push_back(observe(draw.field, draw.pose, rng, sweep.noise_half_width).values);
      int successes = 0;
      for (int r = 0; r < sweep.rollouts; ++r) {
        const Outcome o = rollout(draw.field, skill, draw.pose, sweep.robot, rng).outcome;
        successes += o == Outcome::ReachedTarget;
        collided += o == Outcome::BaseCollision;
        ++total;
      }
      reached += static_cast<std::size_t>(successes);
      labels.push_back(static_cast<double>(successes) / sweep.rollouts);
    }
    const auto emp = mean_std(labels);
    const auto pred = mean_std(predict_all(viability_model, grids));
    CurveBucket b;
    b.height = height;
    b.count = sweep.samples_per_height;
    b.measured = labels.size();
    b.empirical_mean = emp.mean;
    b.empirical_std = emp.std;
    b.predicted_mean = pred.mean;
    b.predicted_std = pred.std;
    b.success_rate = static_cast<double>(reached) / static_cast<double>(total);
    b.crash_fraction = static_cast<double>(collided) / static_cast<double>(total);
    result.buckets.push_back(b);
  }
  return result;
}

CurveResult run_cot_curve(const SweepConfig& sweep, const SkillProfile& skill, const Model& cot_model,
                          double viability_cutoff) {
  sweep.validate();
  if (cot_model.head_kind != HeadKind::Linear)
    throw Error(Errc::HeadKindMismatch, "CoT curve needs a linear-head model");
  CurveResult result{skill.name, sweep.family.name, {}};
  for (double height : sweep.heights()) {
    std::vector<HeightGrid> grids;
    std::vector<double> cots;
    std::size_t collided = 0;
    for (std::size_t j = 0; j < sweep.samples_per_height; ++j) {
      const SweepDraw draw = draw_sample(sweep, height, j);
      Rng rng(draw.stream);
      const HeightGrid hf = observe(draw.field, draw.pose, rng, sweep.noise_half_width).values;
      const RolloutTrace trace = rollout(draw.field, skill, draw.pose, sweep.robot, rng);
      collided += trace.outcome == Outcome::BaseCollision;
      if (trace.outcome != Outcome::ReachedTarget) continue;
      grids.push_back(hf);
      cots.push_back(compute_cot(trace, sweep.robot, sweep.cot_warmup));
    }
    CurveBucket b;
    b.height = height;
    b.count = sweep.samples_per_height;
    b.measured = cots.size();
    b.success_rate = static_cast<double>(cots.size()) / static_cast<double>(b.count);
    b.crash_fraction = static_cast<double>(collided) / static_cast<double>(b.count);
    b.omitted = b.success_rate < viability_cutoff;
    const auto emp = mean_std(cots);
    const auto pred = mean_std(predict_all(cot_model, grids));
    b.empirical_mean = emp.mean;
    b.empirical_std = emp.std;
    b.predicted_mean = pred.mean;
    b.predicted_std = pred.std;
    result.buckets.push_back(b);
  }
  return result;
}

std::string curve_csv(const CurveResult& curve) {
  std::string out =
      "skill,family,height,count,measured,empirical_mean,empirical_std,predicted_mean,"
      "predicted_std,success_rate,crash_fraction,omitted\n";
  for (const auto& b : curve.buckets)
    out += curve.skill + "," + curve.family + "," + format_number(b.height) + "," +
           std::to_string(b.count) + "," + std::to_string(b.measured) + "," +
           format_number(b.empirical_mean) + "," + format_number(b.empirical_std) + "," +
           format_number(b.predicted_mean) + "," + format_number(b.predicted_std) + "," +
           format_number(b.success_rate) + "," + format_number(b.crash_fraction) + "," +
           (b.omitted ? "1" : "0") + "\n";
  return out;
}

const char* to_string(EpisodeOutcome outcome) {
  switch (outcome) {
    case EpisodeOutcome::Success: return "success";
    case EpisodeOutcome::StopActivated: return "stop_activated";
    case EpisodeOutcome::Crash: return "crash";
  }
  return "unknown";
}

void CourseConfig::validate() const {
  if (direction != TerrainKind::StairsUp && direction != TerrainKind::StairsDown)
    throw Error(Errc::ConfigInvalid, "transition course direction must be stairs_up or stairs_down");
  if (heights.empty() || trials < 1) throw Error(Errc::ConfigInvalid, "course needs heights and trials");
  if (num_steps < 1 || !(step_depth > 0.0)) throw Error(Errc::ConfigInvalid, "course stairs invalid");
  if (window_length < 1) throw Error(Errc::ConfigInvalid, "window_length must be >= 1");
  robot.validate();
}

double CourseConfig::goal_x() const {
  return stairs_start + step_depth * static_cast<double>(num_steps) + landing;
}

namespace {

std::size_t budget_ticks(double seconds, const RobotParams& robot) {
  return static_cast<std::size_t>(std::ceil(seconds / robot.control_dt - 1e-9));
}

}  // namespace

EpisodeResult run_selector_episode(const TerrainField& field, const Pose2p5D& start,
                                   const SkillRegistry& registry, const EpisodeSettings& settings,
                                   std::uint64_t seed, bool keep_log) {
  const SelectorConfig cfg = registry.selector_config(settings.window_length,
                                                      1.0 / settings.robot.control_dt);
  Rng obs_rng(derive_seed(seed, 1));
  Rng kin_rng(derive_seed(seed, 2));
  KernelStepper stepper(field, start, settings.robot);
  SelectorState state;
  EpisodeResult result;
  const std::size_t max_ticks = budget_ticks(settings.time_budget, settings.robot);
  const std::size_t patience = budget_ticks(settings.stop_patience, settings.robot);
  std::size_t standing = 0;
  result.outcome = EpisodeOutcome::StopActivated;
  for (std::size_t t = 0; t < max_ticks; ++t) {
    const HeightGrid hf = observe(field, stepper.pose(), obs_rng, settings.noise_half_width).values;
    TickRecord record = tick(state, hf, registry, cfg);
    record.tick = t;
    const Decision committed = record.committed;
    if (keep_log) result.log.push_back(std::move(record));
    if (committed.is_stop()) {
      if (++standing >= patience) break;
      continue;
    }
    standing = 0;
    const auto step = stepper.advance(registry.at(committed.skill_id).profile, kin_rng);
    if (step.collided) {
      result.outcome = EpisodeOutcome::Crash;
      break;
    }
    if (stepper.pose().x >= settings.goal_x) {
      result.outcome = EpisodeOutcome::Success;
      break;
    }
  }
  result.final_pose = stepper.pose();
  return result;
}

EpisodeResult run_baseline_episode(const TerrainField& field, const Pose2p5D& start,
                                   const SkillProfile& skill, const EpisodeSettings& settings,
                                   std::uint64_t seed) {
  Rng kin_rng(derive_seed(seed, 2));
  KernelStepper stepper(field, start, settings.robot);
  EpisodeResult result;
  result.outcome = EpisodeOutcome::StopActivated;
  const std::size_t max_ticks = budget_ticks(settings.time_budget, settings.robot);
  for (std::size_t t = 0; t < max_ticks; ++t) {
    if (stepper.advance(skill, kin_rng).collided) {
      result.outcome = EpisodeOutcome::Crash;
      break;
    }
    if (stepper.pose().x >= settings.goal_x) {
      result.outcome = EpisodeOutcome::Success;
      break;
    }
  }
  result.final_pose = stepper.pose();
  return result;
}

TerrainField transition_course_terrain(const CourseConfig& course, double height) {
  TerrainSpec spec;
  spec.kind = course.direction;
  spec.step_height = height;
  spec.step_depth = course.step_depth;
  spec.num_steps = course.num_steps;
  spec.feature_start = course.stairs_start;
  spec.x_min = -2.0;
  spec.extent_x = course.goal_x() + 3.0 - spec.x_min;
  spec.extent_y = 4.0;
  return TerrainField(spec);
}

namespace {

CourseRow tally(double height, const char* condition, const std::vector<EpisodeOutcome>& outcomes) {
  CourseRow row;
  row.height = height;
  row.condition = condition;
  row.trials = outcomes.size();
  for (auto o : outcomes) {
    row.successes += o == EpisodeOutcome::Success;
    row.stops += o == EpisodeOutcome::StopActivated;
    row.crashes += o == EpisodeOutcome::Crash;
  }
  const double n = static_cast<double>(row.trials);
  row.success_rate = static_cast<double>(row.successes) / n;
  row.stop_activated_rate = static_cast<double>(row.stops) / n;
  row.crash_rate = static_cast<double>(row.crashes) / n;
  return row;
}

}  // namespace

CourseResult run_transition_course(const CourseConfig& course, const SkillRegistry& registry,
                                   const SkillProfile& baseline) {
  course.validate();
  CourseResult result;
  EpisodeSettings settings;
  settings.goal_x = course.goal_x();
  settings.time_budget = settings.goal_x / course.robot.command_speed + course.extra_time;
  settings.noise_half_width = course.noise_half_width;
  settings.stop_patience = course.stop_patience;
  settings.window_length = course.window_length;
  settings.robot = course.robot;

  for (std::size_t hi = 0; hi < course.heights.size(); ++hi) {
    const double height = course.heights[hi];
    const TerrainField field = transition_course_terrain(course, height);
    std::vector<EpisodeOutcome> selector, base;
    for (std::size_t trial = 0; trial < course.trials; ++trial) {
      const std::uint64_t seed = derive_seed(course.seed, hi, trial);
      Rng start_rng(derive_seed(seed, 0));
      Pose2p5D start;
      start.y = start_rng.uniform(-course.lateral_jitter, course.lateral_jitter);
      start.yaw = start_rng.uniform(-course.yaw_jitter, course.yaw_jitter);
      start.z = field.elevation(start.x, start.y) + course.robot.nominal_height;
      selector.push_back(run_selector_episode(field, start, registry, settings, seed).outcome);
      base.push_back(run_baseline_episode(field, start, baseline, settings, seed).outcome);
    }
    result.rows.push_back(tally(height, "selector", selector));
    result.rows.push_back(tally(height, "baseline", base));
  }
  return result;
}

std::string course_csv(const CourseResult& result) {
  std::string out = "height,condition,trials,success_rate,stop_activated_rate,crash_rate\n";
  for (const auto& r : result.rows)
    out += format_number(r.height) + "," + r.condition + "," + std::to_string(r.trials) + "," +
           format_number(r.success_rate) + "," + format_number(r.stop_activated_rate) + "," +
           format_number(r.crash_rate) + "\n";
  return out;
}

TerrainField obstacle_course_terrain(const ObstacleCourseConfig& course) {
  TerrainSpec base;
  base.kind = TerrainKind::Flat;
  base.x_min = -2.0;
  base.extent_x = course.goal_x + 3.0 - base.x_min;
  base.extent_y = 4.0;
  TerrainField field(base);

  TerrainSpec wall = base;
  wall.kind = TerrainKind::Wall;
  wall.feature_start = course.wall_start;
  wall.wall_height = course.wall_height;
  wall.wall_thickness = course.wall_thickness;
  field.add_feature(wall);

  TerrainSpec gap = base;
  gap.kind = TerrainKind::Gap;
  gap.feature_start = course.gap_start;
  gap.gap_width = course.gap_width;
  gap.gap_depth = course.gap_depth;
  field.add_feature(gap);
  return field;
}

ObstacleCourseResult run_obstacle_course(const ObstacleCourseConfig& course,
                                         const SkillRegistry& registry) {
  course.robot.validate();
  const TerrainField field = obstacle_course_terrain(course);
  EpisodeSettings settings;
  settings.goal_x = course.goal_x;
  settings.time_budget = course.goal_x / course.robot.command_speed + course.extra_time;
  settings.noise_half_width = course.noise_half_width;
  settings.stop_patience = course.stop_patience;
  settings.window_length = course.window_length;
  settings.robot = course.robot;
  Pose2p5D start;
  start.z = field.elevation(0.0, 0.0) + course.robot.nominal_height;

  EpisodeResult episode = run_selector_episode(field, start, registry, settings, course.seed, true);
  ObstacleCourseResult result;
  result.outcome = episode.outcome;
  result.completed = episode.outcome == EpisodeOutcome::Success;
  for (const auto& rec : episode.log)
    if (!rec.committed.is_stop() &&
        std::find(result.committed_sequence.begin(), result.committed_sequence.end(),
                  rec.committed.skill_id) == result.committed_sequence.end())
      result.committed_sequence.push_back(rec.committed.skill_id);
  result.log = std::move(episode.log);
  return result;
}

std::string tick_log_csv(const std::vector<TickRecord>& log, const SkillRegistry& registry) {
  std::string out = tick_log_header(registry);
  for (const auto& rec : log) out += tick_log_row(rec, registry);
  return out;
}

}  // namespace locosel
