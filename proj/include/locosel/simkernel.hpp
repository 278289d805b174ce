#pragma once

#include <string>
#include <vector>

#include "locosel/common.hpp"
#include "locosel/config.hpp"
#include "locosel/heightfield.hpp"
#include "locosel/terrain.hpp"

namespace locosel {

/// Parametric stand-in for one low-level locomotion policy.
struct SkillProfile {
  int id = 0;
  std::string name;
  double max_ascend = 0.0;         // m, 50% failure point for rises
  double max_descend = 0.0;        // m, 50% failure point for drops
  double base_power = 1.0;         // W on flat ground at command speed
  double power_per_ascend = 0.0;   // J per meter of rise
  double power_per_descend = 0.0;  // J per meter of drop
  double slip_sharpness = 1.0;     // 1/m, logistic slope of the failure law
  double swing_clearance = 0.02;   // m, smaller elevation changes are stepped over
  double max_gap = 0.0;            // m, trenches up to this width are bridged

  void validate() const;
  void write(KeyValueConfig& cfg) const;
  static SkillProfile read(const KeyValueConfig& cfg, const std::string& name);
};

/// Reads every `skill.<name>.*` section, ordered by id.
std::vector<SkillProfile> read_skills(const KeyValueConfig& cfg);

struct RobotParams {
  double mass = 50.0;
  double gravity = 9.81;
  double command_speed = 0.6;
  double control_dt = 0.02;
  double time_limit = 4.0;
  double horizon_distance = 1.5;
  double nominal_height = 0.5;  // base height above the support surface
  double body_clearance = 0.5;  // rise under the body / single-step jump that collides

  void validate() const;
  void write(KeyValueConfig& cfg) const;
  static RobotParams read(const KeyValueConfig& cfg);
};

enum class Outcome { ReachedTarget, BaseCollision, TimedOut };
const char* to_string(Outcome outcome);

struct RolloutTrace {
  std::vector<double> powers;     // W per control step
  std::vector<double> distances;  // cumulative m after each step
  std::vector<Pose2p5D> poses;
  Outcome outcome = Outcome::TimedOut;
  std::size_t steps = 0;
};

/// Synthetic settling check for a spawn pose. Given a skill, the feet stand on
/// that skill's support surface, so a skill that bridges trenches may start
/// straddling one.
bool validate_spawn(const TerrainField& field, const Pose2p5D& pose,
                    const RobotParams& params = {}, const SkillProfile* skill = nullptr);

/// Height the base follows under `skill`: the terrain with trenches no wider
/// than the skill's gap reach bridged (a morphological closing along the heading).
double support_height(const TerrainField& field, const SkillProfile& skill, double x, double y,
                      double yaw);

/// Logistic failure probability for one elevation change.
double failure_probability(const SkillProfile& skill, double dh);

/// One kinematic control step of the kernel, shared by rollouts and the
/// closed-loop course runner.
class KernelStepper {
 public:
  KernelStepper(const TerrainField& field, const Pose2p5D& start, const RobotParams& params);

  struct Step {
    double power = 0.0;
    double dh = 0.0;
    bool collided = false;
  };

  /// Advances one control step along the current heading under `skill`.
  Step advance(const SkillProfile& skill, Rng& rng);

  const Pose2p5D& pose() const { return pose_; }
  double distance() const { return distance_; }
  std::size_t steps() const { return steps_; }

 private:
  const TerrainField* field_;
  RobotParams params_;
  Pose2p5D pose_;
  double distance_ = 0.0;
  std::size_t steps_ = 0;
};

/// Throws Errc::InvalidSpawn when the pose fails validate_spawn.
RolloutTrace rollout(const TerrainField& field, const SkillProfile& skill, const Pose2p5D& pose,
                     const RobotParams& params, Rng& rng);

/// Cost of transport over the steps after `warmup` seconds. Negative power
/// is clamped to zero. Throws Errc::CrashedTrace / Errc::ZeroDistance.
double compute_cot(const RolloutTrace& trace, const RobotParams& params, double warmup = 0.5);

std::string trace_csv(const RolloutTrace& trace);

}  // namespace locosel
