#pragma once

#include <string>
#include <vector>

#include "locosel/config.hpp"
#include "locosel/datagen.hpp"
#include "locosel/evalharness.hpp"
#include "locosel/nnet.hpp"
#include "locosel/simkernel.hpp"

namespace locosel {

/// Built-in configuration: five skills, robot constants, the collection mixes
/// (`data`, `data_climb`, `data_gap`), training and evaluation settings.
std::string default_config_text();
KeyValueConfig default_config();

/// Defaults overlaid with the file at `path` (skipped when empty).
KeyValueConfig load_config(const std::string& path);

std::vector<SkillProfile> default_skills();
SkillProfile find_skill(const KeyValueConfig& cfg, const std::string& name);

/// Collection mix named by `skill.<name>.data` (default `data`).
DatasetConfig dataset_config_for(const KeyValueConfig& cfg, const SkillProfile& skill);
std::size_t dataset_size(const KeyValueConfig& cfg, DatasetKind kind);

double skill_threshold(const KeyValueConfig& cfg, const SkillProfile& skill);
std::size_t window_length(const KeyValueConfig& cfg);
TrainConfig read_train_config(const KeyValueConfig& cfg);

/// Skills of the stairs experiments and the open-loop baseline.
std::vector<std::string> base_skill_names(const KeyValueConfig& cfg);
std::string baseline_skill_name(const KeyValueConfig& cfg);

/// Sweep over the stairs family `family` of the `data` mix.
SweepConfig read_sweep_config(const KeyValueConfig& cfg, const std::string& family);
double cot_cutoff(const KeyValueConfig& cfg);
CourseConfig read_course_config(const KeyValueConfig& cfg, TerrainKind direction);
ObstacleCourseConfig read_obstacle_config(const KeyValueConfig& cfg);

}  // namespace locosel
