#include "locosel/selector.hpp"

#include <algorithm>

namespace locosel {

std::string to_string(const Decision& d) {
  return d.is_stop() ? std::string("stop") : "skill:" + std::to_string(d.skill_id);
}

void SelectorConfig::validate() const {
  if (window_length < 1) throw Error(Errc::ConfigInvalid, "window_length must be >= 1");
  if (!(tick_rate > 0.0)) throw Error(Errc::ConfigInvalid, "tick_rate must be > 0");
  for (const auto& [id, eps] : thresholds)
    if (!(eps > 0.0 && eps < 1.0))
      throw Error(Errc::ConfigInvalid, "threshold of skill " + std::to_string(id) + " must lie in (0, 1)");
}

Decision raw_decision(const PredictionMap& viabilities, const PredictionMap& cots,
                      const SelectorConfig& cfg) {
  if (viabilities.size() != cots.size() || viabilities.size() != cfg.thresholds.size())
    throw Error(Errc::SkillSetMismatch, "viability, CoT and threshold sets differ in size");
  Decision best = Decision::stop();
  double best_cot = 0.0;
  auto cot_it = cots.begin();
  auto eps_it = cfg.thresholds.begin();
  for (const auto& [id, viability] : viabilities) {
    if (cot_it->first != id || eps_it->first != id)
      throw Error(Errc::SkillSetMismatch, "skill " + std::to_string(id) + " missing from a prediction set");
    const double cot = cot_it->second;
    const double eps = eps_it->second;
    ++cot_it;
    ++eps_it;
    if (viability < eps) continue;
    // Iteration is in ascending id, so strict < keeps the lowest id on ties.
    if (best.is_stop() || cot < best_cot) {
      best = Decision::skill(id);
      best_cot = cot;
    }
  }
  return best;
}

const RegisteredSkill& SkillRegistry::at(int id) const {
  for (const auto& s : skills_)
    if (s.profile.id == id) return s;
  throw Error(Errc::SkillSetMismatch, "skill " + std::to_string(id) + " is not registered");
}

bool SkillRegistry::contains(int id) const {
  return std::any_of(skills_.begin(), skills_.end(),
                     [id](const RegisteredSkill& s) { return s.profile.id == id; });
}

SelectorConfig SkillRegistry::selector_config(std::size_t window_length, double tick_rate) const {
  SelectorConfig cfg;
  cfg.window_length = window_length;
  cfg.tick_rate = tick_rate;
  for (const auto& s : skills_) cfg.thresholds[s.profile.id] = s.threshold;
  return cfg;
}

SkillRegistry register_skill(SkillRegistry registry, const SkillProfile& profile,
                             std::shared_ptr<const Model> viability,
                             std::shared_ptr<const Model> cot, double threshold) {
  profile.validate();
  if (registry.contains(profile.id))
    throw Error(Errc::DuplicateId, "skill id " + std::to_string(profile.id) + " already registered");
  if (!viability || !cot) throw Error(Errc::MissingModel, "skill '" + profile.name + "' lacks a model");
  if (viability->head_kind != HeadKind::Sigmoid)
    throw Error(Errc::HeadKindMismatch, "viability model of '" + profile.name + "' is not sigmoid");
  if (cot->head_kind != HeadKind::Linear)
    throw Error(Errc::HeadKindMismatch, "CoT model of '" + profile.name + "' is not linear");
  if (!(threshold > 0.0 && threshold < 1.0))
    throw Error(Errc::ConfigInvalid, "threshold must lie in (0, 1)");
  RegisteredSkill entry{profile, std::move(viability), std::move(cot), threshold};
  auto pos = std::upper_bound(registry.skills_.begin(), registry.skills_.end(), profile.id,
                              [](int id, const RegisteredSkill& s) { return id < s.profile.id; });
  registry.skills_.insert(pos, std::move(entry));
  return registry;
}

Decision push_decision(SelectorState& state, const Decision& raw, std::size_t window_length) {
  state.window.push_back(raw);
  while (state.window.size() > window_length) state.window.pop_front();
  if (state.window.size() == window_length &&
      std::all_of(state.window.begin(), state.window.end(),
                  [&](const Decision& d) { return d == raw; }))
    state.committed = raw;
  return state.committed;
}

TickRecord tick(SelectorState& state, const HeightGrid& hf, const SkillRegistry& registry,
                const SelectorConfig& cfg) {
  TickRecord record;
  for (const auto& s : registry.skills()) {
    record.viabilities[s.profile.id] = forward(*s.viability, hf, s.profile.id).value;
    record.cots[s.profile.id] = forward(*s.cot, hf, s.profile.id).value;
  }
  record.raw = raw_decision(record.viabilities, record.cots, cfg);
  record.committed = push_decision(state, record.raw, cfg.window_length);
  return record;
}

std::string tick_log_header(const SkillRegistry& registry) {
  std::string out = "tick";
  for (const auto& s : registry.skills()) out += ",V_" + s.profile.name;
  for (const auto& s : registry.skills()) out += ",C_" + s.profile.name;
  return out + ",raw,committed\n";
}

std::string tick_log_row(const TickRecord& record, const SkillRegistry& registry) {
  auto name = [&](const Decision& d) {
    return d.is_stop() ? std::string("stop") : registry.at(d.skill_id).profile.name;
  };
  std::string out = std::to_string(record.tick);
  for (const auto& s : registry.skills()) out += "," + format_number(record.viabilities.at(s.profile.id));
  for (const auto& s : registry.skills()) out += "," + format_number(record.cots.at(s.profile.id));
  return out + "," + name(record.raw) + "," + name(record.committed) + "\n";
}

}  // namespace locosel
