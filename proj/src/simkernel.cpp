#include "locosel/simkernel.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace locosel {

namespace {

constexpr double kFootForward = 0.3;
constexpr double kFootLateral = 0.2;
constexpr double kBodyHalfLength = 0.4;
constexpr double kBodyHalfWidth = 0.15;
constexpr double kSlopeProbe = 0.05;
constexpr double kSlopeLimit = 1.0;
constexpr double kSettleTolerance = 0.05;
constexpr double kBridgeSample = 0.01;

}  // namespace

void SkillProfile::validate() const {
  if (!(max_ascend >= 0.0) || !(max_descend >= 0.0))
    throw Error(Errc::ConfigInvalid, "skill '" + name + "': capabilities must be >= 0");
  if (!(base_power > 0.0))
    throw Error(Errc::ConfigInvalid, "skill '" + name + "': base_power must be > 0");
  if (!(slip_sharpness > 0.0))
    throw Error(Errc::ConfigInvalid, "skill '" + name + "': slip_sharpness must be > 0");
  if (!(swing_clearance >= 0.0) || !(max_gap >= 0.0))
    throw Error(Errc::ConfigInvalid, "skill '" + name + "': clearances must be >= 0");
}

void SkillProfile::write(KeyValueConfig& cfg) const {
  const std::string p = "skill." + name + ".";
  cfg.set(p + "id", std::to_string(id));
  cfg.set(p + "max_ascend", format_number(max_ascend));
  cfg.set(p + "max_descend", format_number(max_descend));
  cfg.set(p + "base_power", format_number(base_power));
  cfg.set(p + "power_per_ascend", format_number(power_per_ascend));
  cfg.set(p + "power_per_descend", format_number(power_per_descend));
  cfg.set(p + "slip_sharpness", format_number(slip_sharpness));
  cfg.set(p + "swing_clearance", format_number(swing_clearance));
  cfg.set(p + "max_gap", format_number(max_gap));
}

SkillProfile SkillProfile::read(const KeyValueConfig& cfg, const std::string& name) {
  const std::string p = "skill." + name + ".";
  SkillProfile s;
  s.name = name;
  s.id = static_cast<int>(cfg.get_int(p + "id"));
  s.max_ascend = cfg.get_double(p + "max_ascend");
  s.max_descend = cfg.get_double(p + "max_descend");
  s.base_power = cfg.get_double(p + "base_power");
  s.power_per_ascend = cfg.get_double(p + "power_per_ascend", 0.0);
  s.power_per_descend = cfg.get_double(p + "power_per_descend", 0.0);
  s.slip_sharpness = cfg.get_double(p + "slip_sharpness");
  s.swing_clearance = cfg.get_double(p + "swing_clearance", s.swing_clearance);
  s.max_gap = cfg.get_double(p + "max_gap", 0.0);
  s.validate();
  return s;
}

std::vector<SkillProfile> read_skills(const KeyValueConfig& cfg) {
  std::vector<SkillProfile> skills;
  for (const auto& name : cfg.sections("skill")) skills.push_back(SkillProfile::read(cfg, name));
  std::sort(skills.begin(), skills.end(),
            [](const SkillProfile& a, const SkillProfile& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < skills.size(); ++i)
    if (skills[i].id == skills[i - 1].id)
      throw Error(Errc::ConfigInvalid, "duplicate skill id " + std::to_string(skills[i].id));
  return skills;
}

void RobotParams::validate() const {
  if (!(mass > 0.0) || !(gravity > 0.0) || !(control_dt > 0.0) || !(command_speed > 0.0) ||
      !(time_limit > 0.0) || !(horizon_distance > 0.0))
    throw Error(Errc::ConfigInvalid, "robot parameters must be strictly positive");
}

void RobotParams::write(KeyValueConfig& cfg) const {
  cfg.set("robot.mass", format_number(mass));
  cfg.set("robot.gravity", format_number(gravity));
  cfg.set("robot.command_speed", format_number(command_speed));
  cfg.set("robot.control_dt", format_number(control_dt));
  cfg.set("robot.time_limit", format_number(time_limit));
  cfg.set("robot.horizon_distance", format_number(horizon_distance));
  cfg.set("robot.nominal_height", format_number(nominal_height));
  cfg.set("robot.body_clearance", format_number(body_clearance));
}

RobotParams RobotParams::read(const KeyValueConfig& cfg) {
  RobotParams p;
  p.mass = cfg.get_double("robot.mass", p.mass);
  p.gravity = cfg.get_double("robot.gravity", p.gravity);
  p.command_speed = cfg.get_double("robot.command_speed", p.command_speed);
  p.control_dt = cfg.get_double("robot.control_dt", p.control_dt);
  p.time_limit = cfg.get_double("robot.time_limit", p.time_limit);
  p.horizon_distance = cfg.get_double("robot.horizon_distance", p.horizon_distance);
  p.nominal_height = cfg.get_double("robot.nominal_height", p.nominal_height);
  p.body_clearance = cfg.get_double("robot.body_clearance", p.body_clearance);
  p.validate();
  return p;
}

const char* to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::ReachedTarget: return "reached_target";
    case Outcome::BaseCollision: return "base_collision";
    case Outcome::TimedOut: return "timed_out";
  }
  return "unknown";
}

bool validate_spawn(const TerrainField& field, const Pose2p5D& pose, const RobotParams& params,
                    const SkillProfile* skill) {
  if (!field.contains(pose.x, pose.y)) return false;
  const double c = std::cos(pose.yaw);
  const double s = std::sin(pose.yaw);
  auto world = [&](double fwd, double lat) {
    return std::array<double, 2>{pose.x + fwd * c - lat * s, pose.y + fwd * s + lat * c};
  };
  auto ground_at = [&](double x, double y) {
    return skill ? support_height(field, *skill, x, y, pose.yaw) : field.elevation(x, y);
  };

  double foot_sum = 0.0;
  for (double fwd : {kFootForward, -kFootForward}) {
    for (double lat : {kFootLateral, -kFootLateral}) {
      const auto [fx, fy] = world(fwd, lat);
      const double gx = ground_at(fx + kSlopeProbe, fy) - ground_at(fx - kSlopeProbe, fy);
      const double gy = ground_at(fx, fy + kSlopeProbe) - ground_at(fx, fy - kSlopeProbe);
      if (std::max(std::abs(gx), std::abs(gy)) / (2.0 * kSlopeProbe) > kSlopeLimit) return false;
      foot_sum += ground_at(fx, fy);
    }
  }

  // The settled base rests at the mean foot height plus the standing height.
  const double settled_z = 0.25 * foot_sum + params.nominal_height;
  if (std::abs(settled_z - pose.z) > kSettleTolerance) return false;

  // Yaw is not perturbed by the kinematic settle, so the heading check holds.
  const double ground = pose.z - params.nominal_height;
  for (double fwd = -kBodyHalfLength; fwd <= kBodyHalfLength + 1e-9; fwd += 0.05)
    for (double lat = -kBodyHalfWidth; lat <= kBodyHalfWidth + 1e-9; lat += 0.05) {
      const auto [bx, by] = world(fwd, lat);
      if (field.elevation(bx, by) - ground > params.body_clearance) return false;
    }
  return true;
}

double support_height(const TerrainField& field, const SkillProfile& skill, double x, double y,
                      double yaw) {
  const double h = field.elevation(x, y);
  if (skill.max_gap <= 0.0) return h;
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  const int n = static_cast<int>(std::ceil(skill.max_gap / kBridgeSample));
  double behind = h;
  double ahead = h;
  for (int i = 1; i <= n; ++i) {
    const double d = skill.max_gap * static_cast<double>(i) / n;
    behind = std::max(behind, field.elevation(x - d * c, y - d * s));
    ahead = std::max(ahead, field.elevation(x + d * c, y + d * s));
  }
  return std::max(h, std::min(behind, ahead));
}

double failure_probability(const SkillProfile& skill, double dh) {
  const double capability = dh >= 0.0 ? skill.max_ascend : skill.max_descend;
  return 1.0 / (1.0 + std::exp(-skill.slip_sharpness * (std::abs(dh) - capability)));
}

KernelStepper::KernelStepper(const TerrainField& field, const Pose2p5D& start,
                             const RobotParams& params)
    : field_(&field), params_(params), pose_(start) {}

KernelStepper::Step KernelStepper::advance(const SkillProfile& skill, Rng& rng) {
  const double ds = params_.command_speed * params_.control_dt;
  const double c = std::cos(pose_.yaw);
  const double s = std::sin(pose_.yaw);
  const double before = support_height(*field_, skill, pose_.x, pose_.y, pose_.yaw);
  pose_.x += ds * c;
  pose_.y += ds * s;
  const double after = support_height(*field_, skill, pose_.x, pose_.y, pose_.yaw);
  pose_.z = after + params_.nominal_height;
  ++steps_;
  distance_ = ds * static_cast<double>(steps_);

  Step step;
  step.dh = after - before;
  step.power = skill.base_power + skill.power_per_ascend * std::max(step.dh, 0.0) / params_.control_dt +
               skill.power_per_descend * std::max(-step.dh, 0.0) / params_.control_dt;
  if (std::abs(step.dh) > params_.body_clearance) {
    step.collided = true;
  } else if (std::abs(step.dh) > skill.swing_clearance) {
    step.collided = rng.uniform() < failure_probability(skill, step.dh);
  }
  return step;
}

RolloutTrace rollout(const TerrainField& field, const SkillProfile& skill, const Pose2p5D& pose,
                     const RobotParams& params, Rng& rng) {
  if (!validate_spawn(field, pose, params, &skill))
    throw Error(Errc::InvalidSpawn, "rollout requested from a pose that fails the settling check");

  const auto max_steps =
      static_cast<std::size_t>(std::floor(params.time_limit / params.control_dt + 1e-9));
  RolloutTrace trace;
  trace.powers.reserve(max_steps);
  trace.distances.reserve(max_steps);
  trace.poses.reserve(max_steps);

  KernelStepper stepper(field, pose, params);
  trace.outcome = Outcome::TimedOut;
  while (stepper.steps() < max_steps) {
    const auto step = stepper.advance(skill, rng);
    double distance = stepper.distance();
    const bool reached = distance >= params.horizon_distance * (1.0 - 1e-12);
    if (reached) distance = std::max(distance, params.horizon_distance);
    trace.powers.push_back(step.power);
    trace.distances.push_back(distance);
    trace.poses.push_back(stepper.pose());
    if (step.collided) {
      trace.outcome = Outcome::BaseCollision;
      break;
    }
    if (reached) {
      trace.outcome = Outcome::ReachedTarget;
      break;
    }
  }
  trace.steps = trace.powers.size();
  return trace;
}

double compute_cot(const RolloutTrace& trace, const RobotParams& params, double warmup) {
  if (trace.outcome != Outcome::ReachedTarget)
    throw Error(Errc::CrashedTrace, std::string("CoT undefined for outcome ") + to_string(trace.outcome));
  // Step i (0-based) covers ((i) dt, (i + 1) dt]; skip those starting before warmup.
  const auto skip = static_cast<std::size_t>(std::ceil(warmup / params.control_dt - 1e-9));
  if (skip >= trace.steps) throw Error(Errc::ZeroDistance, "warmup covers the whole trace");
  double energy = 0.0;
  for (std::size_t i = skip; i < trace.steps; ++i)
    energy += std::max(trace.powers[i], 0.0) * params.control_dt;
  const double start = skip == 0 ? 0.0 : trace.distances[skip - 1];
  const double distance = trace.distances[trace.steps - 1] - start;
  if (!(distance > 0.0)) throw Error(Errc::ZeroDistance, "no distance travelled after warmup");
  return energy / (params.mass * params.gravity * distance);
}

std::string trace_csv(const RolloutTrace& trace) {
  std::string out = "step,power,distance,x,y,z,yaw\n";
  for (std::size_t i = 0; i < trace.steps; ++i) {
    const auto& p = trace.poses[i];
    out += std::to_string(i) + "," + format_number(trace.powers[i]) + "," +
           format_number(trace.distances[i]) + "," + format_number(p.x) + "," +
           format_number(p.y) + "," + format_number(p.z) + "," + format_number(p.yaw) + "\n";
  }
  out += std::string("# outcome=") + to_string(trace.outcome) + "\n";
  return out;
}

}  // namespace locosel
