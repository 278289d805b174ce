#pragma once

#include <deque>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "locosel/heightfield.hpp"
#include "locosel/nnet.hpp"
#include "locosel/simkernel.hpp"

namespace locosel {

struct Decision {
  enum class Kind { Skill, Stop };
  Kind kind = Kind::Stop;
  int skill_id = -1;

  static Decision stop() { return {}; }
  static Decision skill(int id) { return {Kind::Skill, id}; }
  bool is_stop() const { return kind == Kind::Stop; }

  friend bool operator==(const Decision&, const Decision&) = default;
};

std::string to_string(const Decision& d);

/// Per-skill predictions keyed by skill id.
using PredictionMap = std::map<int, double>;

struct SelectorConfig {
  std::map<int, double> thresholds;  // viability threshold per skill id
  std::size_t window_length = 10;
  double tick_rate = 50.0;

  void validate() const;
};

/// Drops skills whose viability is below threshold, then picks the lowest
/// CoT among the rest (ties to the lowest id); Stop when none survive.
/// Throws Errc::SkillSetMismatch when the three maps disagree on skill ids.
Decision raw_decision(const PredictionMap& viabilities, const PredictionMap& cots,
                      const SelectorConfig& cfg);

/// A registered skill: its kernel profile plus immutable predictor heads.
struct RegisteredSkill {
  SkillProfile profile;
  std::shared_ptr<const Model> viability;
  std::shared_ptr<const Model> cot;
  double threshold = 0.95;
};

/// Value-semantic registry; registering copies the entry list and shares
/// the (immutable) models of existing skills.
class SkillRegistry {
 public:
  const std::vector<RegisteredSkill>& skills() const { return skills_; }
  bool empty() const { return skills_.empty(); }
  const RegisteredSkill& at(int id) const;
  bool contains(int id) const;

  /// Selector settings carrying the threshold of every registered skill.
  SelectorConfig selector_config(std::size_t window_length = 10, double tick_rate = 50.0) const;

  friend SkillRegistry register_skill(SkillRegistry registry, const SkillProfile& profile,
                                      std::shared_ptr<const Model> viability,
                                      std::shared_ptr<const Model> cot, double threshold);

 private:
  std::vector<RegisteredSkill> skills_;
};

/// Throws Errc::DuplicateId or Errc::HeadKindMismatch.
SkillRegistry register_skill(SkillRegistry registry, const SkillProfile& profile,
                             std::shared_ptr<const Model> viability,
                             std::shared_ptr<const Model> cot, double threshold);

struct SelectorState {
  std::deque<Decision> window;
  Decision committed = Decision::stop();
};

struct TickRecord {
  std::size_t tick = 0;
  PredictionMap viabilities;
  PredictionMap cots;
  Decision raw;
  Decision committed;
};

/// Pushes a raw decision into the window and commits it when the full
/// window is unanimous. Returns the committed decision.
Decision push_decision(SelectorState& state, const Decision& raw, std::size_t window_length);

/// Runs all 2K predictors on `hf`, forms the raw decision and updates the window.
TickRecord tick(SelectorState& state, const HeightGrid& hf, const SkillRegistry& registry,
                const SelectorConfig& cfg);

std::string tick_log_header(const SkillRegistry& registry);
std::string tick_log_row(const TickRecord& record, const SkillRegistry& registry);

}  // namespace locosel
