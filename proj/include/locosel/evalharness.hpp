#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "locosel/datagen.hpp"
#include "locosel/nnet.hpp"
#include "locosel/selector.hpp"

namespace locosel {

/// Step-height sweep over one terrain family. Sample j of every height
/// bucket reuses the seeds of index j, so buckets share random streams.
struct SweepConfig {
  TerrainFamily family;
  double height_min = 0.0;
  double height_max = 0.30;
  double increment = 0.025;
  std::size_t samples_per_height = 500;
  std::uint64_t seed = 0;
  SpawnRegion spawn;
  RobotParams robot;
  int rollouts = 10;
  double noise_half_width = 0.1;
  double cot_warmup = 0.5;
  int max_attempts = 50;

  void validate() const;
  std::vector<double> heights() const;
};

struct CurveBucket {
  double height = 0.0;
  std::size_t count = 0;        // samples drawn
  std::size_t measured = 0;     // samples contributing to the means
  double empirical_mean = 0.0;
  double empirical_std = 0.0;
  double predicted_mean = 0.0;
  double predicted_std = 0.0;
  double success_rate = 0.0;    // fraction of rollouts reaching the target
  double crash_fraction = 0.0;  // fraction of rollouts ending in a base collision
  bool omitted = false;
};

struct CurveResult {
  std::string skill;
  std::string family;
  std::vector<CurveBucket> buckets;
};

/// Fresh empirical success rates and model predictions on the same heightfields.
CurveResult run_viability_calibration(const SweepConfig& sweep, const SkillProfile& skill,
                                      const Model& viability_model);

/// One rollout per sample. Buckets whose success rate is below
/// `viability_cutoff` are omitted; the rest compare empirical and predicted CoT
/// over the successful rollouts.
CurveResult run_cot_curve(const SweepConfig& sweep, const SkillProfile& skill,
                          const Model& cot_model, double viability_cutoff = 0.9);

std::string curve_csv(const CurveResult& curve);

enum class EpisodeOutcome { Success, StopActivated, Crash };
const char* to_string(EpisodeOutcome outcome);

/// Flat -> stairs (up or down) -> flat course with the goal on the far landing.
struct CourseConfig {
  TerrainKind direction = TerrainKind::StairsUp;
  std::vector<double> heights{0.05, 0.10, 0.15, 0.20, 0.25, 0.30};
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  double stairs_start = 2.5;
  int num_steps = 6;
  double step_depth = 0.3;
  double landing = 1.5;      // flat run from the last step to the goal
  double lateral_jitter = 0.2;
  double yaw_jitter = 0.1;
  double noise_half_width = 0.1;
  double stop_patience = 2.0;  // s of committed Stop that ends an episode
  double extra_time = 5.0;     // s added to course_length / speed
  std::size_t window_length = 10;
  RobotParams robot;

  void validate() const;
  double goal_x() const;
};

struct CourseRow {
  double height = 0.0;
  std::string condition;  // "selector" or "baseline"
  std::size_t trials = 0;
  std::size_t successes = 0;
  std::size_t stops = 0;
  std::size_t crashes = 0;
  double success_rate = 0.0;
  double stop_activated_rate = 0.0;
  double crash_rate = 0.0;
};

struct CourseResult {
  std::vector<CourseRow> rows;
};

struct EpisodeSettings {
  double goal_x = 0.0;
  double time_budget = 0.0;
  double noise_half_width = 0.1;
  double stop_patience = 2.0;
  std::size_t window_length = 10;
  RobotParams robot;
};

struct EpisodeResult {
  EpisodeOutcome outcome = EpisodeOutcome::StopActivated;
  std::vector<TickRecord> log;
  Pose2p5D final_pose;
};

/// Closed loop at the control rate: observe, tick the selector, and advance
/// the kernel under the committed skill (standing still on Stop).
EpisodeResult run_selector_episode(const TerrainField& field, const Pose2p5D& start,
                                   const SkillRegistry& registry, const EpisodeSettings& settings,
                                   std::uint64_t seed, bool keep_log = false);

/// Open loop: one skill tracks the command until goal, crash or time budget.
EpisodeResult run_baseline_episode(const TerrainField& field, const Pose2p5D& start,
                                   const SkillProfile& skill, const EpisodeSettings& settings,
                                   std::uint64_t seed);

TerrainField transition_course_terrain(const CourseConfig& course, double height);

CourseResult run_transition_course(const CourseConfig& course, const SkillRegistry& registry,
                                   const SkillProfile& baseline);

std::string course_csv(const CourseResult& result);

/// Flat -> wall -> flat -> gap -> flat.
struct ObstacleCourseConfig {
  double wall_start = 2.0;
  double wall_height = 0.4;
  double wall_thickness = 0.6;
  double gap_start = 5.0;
  double gap_width = 0.5;
  double gap_depth = 0.5;
  double goal_x = 8.0;
  std::uint64_t seed = 0;
  double noise_half_width = 0.1;
  double stop_patience = 2.0;
  double extra_time = 5.0;
  std::size_t window_length = 10;
  RobotParams robot;
};

TerrainField obstacle_course_terrain(const ObstacleCourseConfig& course);

struct ObstacleCourseResult {
  EpisodeOutcome outcome = EpisodeOutcome::StopActivated;
  bool completed = false;
  std::vector<TickRecord> log;
  /// Committed skills in order of first commitment.
  std::vector<int> committed_sequence;
};

ObstacleCourseResult run_obstacle_course(const ObstacleCourseConfig& course,
                                         const SkillRegistry& registry);

std::string tick_log_csv(const std::vector<TickRecord>& log, const SkillRegistry& registry);

}  // namespace locosel
