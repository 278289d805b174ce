#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <memory>
#include <optional>

#include "locosel/defaults.hpp"
#include "locosel/evalharness.hpp"
#include "locosel/selector.hpp"

namespace locosel {

namespace {

namespace fs = std::filesystem;

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "key=value config layered over the defaults");
  cmd->add_option("--set", c.overrides, "override one config key (key=value)");
  cmd->add_option("--out", c.out_dir, "output directory")->required();
}

KeyValueConfig resolve_config(const Common& c) {
  KeyValueConfig cfg = load_config(c.config_path);
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw Error(Errc::Usage, "--set expects key=value, got '" + kv + "'");
    cfg.set(std::string(trim(kv.substr(0, eq))), std::string(trim(kv.substr(eq + 1))));
  }
  return cfg;
}

fs::path prepare_out(const Common& c) {
  fs::path dir(c.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::FileNotFound, "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

/// Manifest lines in insertion order followed by the resolved configuration.
class Manifest {
 public:
  Manifest(const std::string& command, const KeyValueConfig& cfg) : cfg_(cfg) {
    add("command", command);
    add("config_hash", hex64(fnv1a64(cfg.to_text())));
    add("dataset_format_version", std::to_string(kDatasetFormatVersion));
    add("model_format_version", std::to_string(kModelFormatVersion));
  }
  void add(const std::string& key, const std::string& value) { lines_ += key + "=" + value + "\n"; }
  void add_file(const std::string& key, const fs::path& path) {
    add(key, hex64(fnv1a64(read_file(path.string()))));
  }
  void write(const fs::path& dir) const {
    write_file((dir / "manifest.txt").string(), lines_ + "# config\n" + cfg_.to_text());
  }

 private:
  KeyValueConfig cfg_;
  std::string lines_;
};

std::vector<std::string> name_list(const std::string& text) {
  std::vector<std::string> out;
  for (auto part : split(text, ',')) {
    part = trim(part);
    if (!part.empty()) out.emplace_back(part);
  }
  return out;
}

fs::path model_path(const fs::path& models, const std::string& skill, DatasetKind kind) {
  return models / (skill + "_" + to_string(kind)) / "model.txt";
}

std::shared_ptr<const Model> load_head(const fs::path& models, const std::string& skill, DatasetKind kind) {
  const fs::path path = model_path(models, skill, kind);
  if (!fs::exists(path))
    throw Error(Errc::MissingModel, std::string("no ") + to_string(kind) + " model for skill '" + skill +
                                        "' at " + path.string());
  return std::make_shared<const Model>(load_model<float>(path.string()));
}

SkillRegistry load_registry(const KeyValueConfig& cfg, const fs::path& models,
                            const std::vector<std::string>& names, Manifest& manifest) {
  SkillRegistry registry;
  for (const auto& name : names) {
    const SkillProfile profile = find_skill(cfg, name);
    auto v = load_head(models, name, DatasetKind::Viability);
    auto c = load_head(models, name, DatasetKind::Cot);
    manifest.add_file("model." + name + "_viability", model_path(models, name, DatasetKind::Viability));
    manifest.add_file("model." + name + "_cot", model_path(models, name, DatasetKind::Cot));
    registry = register_skill(std::move(registry), profile, std::move(v), std::move(c),
                              skill_threshold(cfg, profile));
  }
  return registry;
}

// ---- terrain

struct TerrainArgs {
  Common common;
  std::optional<std::string> kind;
  std::optional<double> difficulty;
  std::optional<std::uint64_t> seed;
  double x = 0.0, y = 0.0, yaw = 0.0;
  double noise = 0.0;
  std::uint64_t noise_seed = 0;
};

void cmd_terrain(const TerrainArgs& a, std::ostream& out) {
  KeyValueConfig cfg = resolve_config(a.common);
  if (a.kind) cfg.set("terrain.kind", *a.kind);
  if (a.seed) cfg.set("terrain.seed", std::to_string(*a.seed));
  TerrainSpec spec = TerrainSpec::read(cfg, "terrain");
  if (a.difficulty) {
    TerrainFamily family{"cli", 1.0, *a.difficulty, *a.difficulty, spec};
    spec = family.terrain(*a.difficulty, spec.seed);
  }
  spec.write(cfg, "terrain");
  const TerrainField field = generate_terrain(spec);
  const RobotParams robot = RobotParams::read(cfg);
  Pose2p5D pose{a.x, a.y, field.elevation(a.x, a.y) + robot.nominal_height, a.yaw};
  Rng rng(a.noise_seed);
  const Heightfield hf = observe(field, pose, rng, a.noise);

  const fs::path dir = prepare_out(a.common);
  write_file((dir / "terrain.csv").string(), terrain_grid_csv(field));
  write_file((dir / "heightfield.csv").string(), heightfield_csv(hf.values));
  Manifest m("terrain", cfg);
  m.add("seed.terrain", std::to_string(spec.seed));
  m.add("seed.noise", std::to_string(a.noise_seed));
  m.add("pose", format_number(pose.x) + "," + format_number(pose.y) + "," + format_number(pose.z) +
                    "," + format_number(pose.yaw));
  m.write(dir);
  out << "terrain " << to_string(spec.kind) << " written to " << dir.string() << "\n";
}

// ---- collect

struct CollectArgs {
  Common common;
  std::string skill;
  std::string kind = "viability";
  std::optional<long long> size;
  std::uint64_t seed = 0;
  std::string family;
};

void cmd_collect(const CollectArgs& a, std::ostream& out) {
  KeyValueConfig cfg = resolve_config(a.common);
  const SkillProfile skill = find_skill(cfg, a.skill);
  const DatasetKind kind = parse_dataset_kind(a.kind);
  if (a.size && *a.size < 1) throw Error(Errc::Usage, "--size must be >= 1");
  const std::size_t size = a.size ? static_cast<std::size_t>(*a.size) : dataset_size(cfg, kind);
  DatasetConfig data = dataset_config_for(cfg, skill);
  if (!a.family.empty()) {
    std::erase_if(data.families, [&](const TerrainFamily& f) { return f.name != a.family; });
    if (data.families.empty()) throw Error(Errc::Usage, "family '" + a.family + "' is not in the mix");
  }
  const Dataset ds = build_dataset(data, kind, skill, size, a.seed);

  const fs::path dir = prepare_out(a.common);
  write_dataset(ds, (dir / "dataset.csv").string());
  Manifest m("collect", cfg);
  m.add("skill", skill.name);
  m.add("kind", to_string(kind));
  m.add("size", std::to_string(size));
  m.add("family", a.family.empty() ? "all" : a.family);
  m.add("seed.master", std::to_string(a.seed));
  m.add_file("output.dataset", dir / "dataset.csv");
  m.write(dir);
  out << "collected " << ds.samples.size() << " " << to_string(kind) << " samples for " << skill.name
      << " (" << ds.train.size() << " train / " << ds.test.size() << " test)\n";
}

// ---- train

struct TrainArgs {
  Common common;
  std::string data;
  std::string head;
  std::optional<std::uint64_t> seed;
  std::optional<double> learning_rate, momentum;
  std::optional<std::size_t> epochs, batch_size;
};

void cmd_train(const TrainArgs& a, std::ostream& out) {
  KeyValueConfig cfg = resolve_config(a.common);
  if (a.seed) cfg.set("train.seed", std::to_string(*a.seed));
  if (a.learning_rate) cfg.set("train.learning_rate", format_number(*a.learning_rate));
  if (a.momentum) cfg.set("train.momentum", format_number(*a.momentum));
  if (a.epochs) cfg.set("train.epochs", std::to_string(*a.epochs));
  if (a.batch_size) cfg.set("train.batch_size", std::to_string(*a.batch_size));
  const TrainConfig tc = read_train_config(cfg);

  const std::string text = read_file(a.data);
  const Dataset ds = parse_dataset(text, cfg.get_double("data.train_fraction", 0.9));
  const HeadKind head = a.head.empty() ? head_kind_for(ds.kind) : parse_head_kind(a.head);
  const auto result = train(init_model<float>(head, derive_seed(tc.seed, 0x1417)), ds, tc);

  const fs::path dir = prepare_out(a.common);
  save_model(result.model, (dir / "model.txt").string());
  write_file((dir / "history.csv").string(), history_csv(result.history));
  Manifest m("train", cfg);
  m.add("head_kind", to_string(head));
  m.add("seed.train", std::to_string(tc.seed));
  m.add("input.dataset", hex64(fnv1a64(text)));
  m.add_file("output.model", dir / "model.txt");
  m.write(dir);
  const auto& last = result.history.back();
  out << "trained " << to_string(head) << " model: train_mse=" << format_number(last.train_mse)
      << " test_mse=" << format_number(last.test_mse) << "\n";
}

// ---- eval

struct EvalArgs {
  Common common;
  std::string experiment;
  std::string models;
  std::string skills;
  std::string families = "stairs_up,stairs_down";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples, trials;
};

const std::vector<std::string> kExperiments{"calibration", "cot-curve", "transition-up",
                                            "transition-down", "obstacle"};

void cmd_eval(const EvalArgs& a, std::ostream& out) {
  if (std::find(kExperiments.begin(), kExperiments.end(), a.experiment) == kExperiments.end())
    throw Error(Errc::Usage, "unknown experiment '" + a.experiment + "'");
  KeyValueConfig cfg = resolve_config(a.common);
  const bool curve = a.experiment == "calibration" || a.experiment == "cot-curve";
  const bool course = a.experiment.rfind("transition", 0) == 0;
  const std::string seed_key = curve ? "eval.sweep.seed" : course ? "eval.course.seed" : "eval.obstacle.seed";
  if (a.seed) cfg.set(seed_key, std::to_string(*a.seed));
  if (a.samples) cfg.set("eval.sweep.samples", std::to_string(*a.samples));
  if (a.trials) cfg.set("eval.course.trials", std::to_string(*a.trials));
  const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int(seed_key, 0));

  std::vector<std::string> names = a.skills.empty() ? base_skill_names(cfg) : name_list(a.skills);
  if (a.experiment == "obstacle" && a.skills.empty()) names = cfg.sections("skill");
  const fs::path models(a.models);
  Manifest m("eval", cfg);
  m.add("experiment", a.experiment);
  m.add("seed", std::to_string(seed));
  std::string csv;

  if (curve) {
    const bool calibration = a.experiment == "calibration";
    const DatasetKind kind = calibration ? DatasetKind::Viability : DatasetKind::Cot;
    for (const auto& name : names) {
      const SkillProfile skill = find_skill(cfg, name);
      const auto model = load_head(models, name, kind);
      m.add_file("model." + name + "_" + to_string(kind), model_path(models, name, kind));
      for (const auto& family : name_list(a.families)) {
        const SweepConfig sweep = read_sweep_config(cfg, family);
        const CurveResult r = calibration ? run_viability_calibration(sweep, skill, *model)
                                          : run_cot_curve(sweep, skill, *model, cot_cutoff(cfg));
        std::string part = curve_csv(r);
        csv += csv.empty() ? part : part.substr(part.find('\n') + 1);
      }
    }
  } else if (course) {
    const SkillRegistry registry = load_registry(cfg, models, names, m);
    const SkillProfile baseline = find_skill(cfg, baseline_skill_name(cfg));
    m.add("baseline", baseline.name + " (a single fixed skill stands in for the rough-terrain baseline policy)");
    const TerrainKind dir = a.experiment == "transition-up" ? TerrainKind::StairsUp : TerrainKind::StairsDown;
    csv = course_csv(run_transition_course(read_course_config(cfg, dir), registry, baseline));
  } else {
    const SkillRegistry registry = load_registry(cfg, models, names, m);
    const ObstacleCourseResult r = run_obstacle_course(read_obstacle_config(cfg), registry);
    csv = "outcome,completed,committed_sequence\n" + std::string(to_string(r.outcome)) + "," +
          (r.completed ? "1" : "0") + ",";
    for (std::size_t i = 0; i < r.committed_sequence.size(); ++i)
      csv += (i ? ";" : "") + registry.at(r.committed_sequence[i]).profile.name;
    csv += "\n";
    const fs::path dir = prepare_out(a.common);
    write_file((dir / ("obstacle_seed" + std::to_string(seed) + "_ticks.csv")).string(),
               tick_log_csv(r.log, registry));
  }

  const fs::path dir = prepare_out(a.common);
  const std::string file = a.experiment + "_seed" + std::to_string(seed) + ".csv";
  write_file((dir / file).string(), csv);
  m.add_file("output." + file, dir / file);
  m.write(dir);
  out << a.experiment << " results written to " << (dir / file).string() << "\n";
}

// ---- demo

struct DemoArgs {
  Common common;
  std::string course = "stairs-up";
  std::string models;
  std::optional<std::string> skills;
  double height = 0.15;
  std::uint64_t seed = 0;
};

void cmd_demo(const DemoArgs& a, std::ostream& out) {
  KeyValueConfig cfg = resolve_config(a.common);
  Manifest m("demo", cfg);
  m.add("course", a.course);
  m.add("seed", std::to_string(a.seed));

  std::vector<std::string> names;
  if (!a.skills) names = a.course == "obstacle" ? cfg.sections("skill") : base_skill_names(cfg);
  else if (*a.skills != "none") names = name_list(*a.skills);
  if (!names.empty() && a.models.empty()) throw Error(Errc::Usage, "--models is required unless --skills none");
  const SkillRegistry registry = load_registry(cfg, fs::path(a.models), names, m);

  std::vector<TickRecord> log;
  EpisodeOutcome outcome;
  if (a.course == "obstacle") {
    ObstacleCourseConfig oc = read_obstacle_config(cfg);
    oc.seed = a.seed;
    ObstacleCourseResult r = run_obstacle_course(oc, registry);
    outcome = r.outcome;
    log = std::move(r.log);
  } else {
    const bool down = a.course == "stairs-down";
    CourseConfig cc = read_course_config(cfg, down ? TerrainKind::StairsDown : TerrainKind::StairsUp);
    const double height = a.course == "flat" ? 0.0 : a.height;
    m.add("height", format_number(height));
    const TerrainField field = transition_course_terrain(cc, height);
    EpisodeSettings s;
    s.goal_x = cc.goal_x();
    s.time_budget = s.goal_x / cc.robot.command_speed + cc.extra_time;
    s.noise_half_width = cc.noise_half_width;
    s.stop_patience = cc.stop_patience;
    s.window_length = cc.window_length;
    s.robot = cc.robot;
    Pose2p5D start;
    start.z = field.elevation(0.0, 0.0) + cc.robot.nominal_height;
    EpisodeResult r = run_selector_episode(field, start, registry, s, a.seed, true);
    outcome = r.outcome;
    log = std::move(r.log);
  }

  const fs::path dir = prepare_out(a.common);
  write_file((dir / "ticks.csv").string(), tick_log_csv(log, registry));
  m.add("outcome", to_string(outcome));
  m.add_file("output.ticks", dir / "ticks.csv");
  m.write(dir);
  out << "demo " << a.course << ": " << to_string(outcome) << " after " << log.size() << " ticks\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Terrain-aware locomotion skill selection: data, training and evaluation"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  TerrainArgs ta;
  auto* terrain = app.add_subcommand("terrain", "generate a terrain and its robot-frame heightfield");
  add_common(terrain, ta.common);
  terrain->add_option("--kind", ta.kind)->check(CLI::IsMember(
      {"flat", "rough", "discrete", "stairs_up", "stairs_down", "gap", "wall"}));
  terrain->add_option("--difficulty", ta.difficulty, "step height, amplitude, gap width or wall height");
  terrain->add_option("--seed", ta.seed);
  terrain->add_option("--x", ta.x);
  terrain->add_option("--y", ta.y);
  terrain->add_option("--yaw", ta.yaw);
  terrain->add_option("--noise", ta.noise, "noise half-width of the heightfield")->check(CLI::NonNegativeNumber);
  terrain->add_option("--noise-seed", ta.noise_seed);

  CollectArgs ca;
  auto* collect = app.add_subcommand("collect", "collect a labeled dataset for one skill");
  add_common(collect, ca.common);
  collect->add_option("--skill", ca.skill)->required();
  collect->add_option("--kind", ca.kind)->check(CLI::IsMember({"viability", "cot"}));
  collect->add_option("--size", ca.size);
  collect->add_option("--seed", ca.seed)->required();
  collect->add_option("--family", ca.family, "restrict the mix to one terrain family");

  TrainArgs tra;
  auto* trainc = app.add_subcommand("train", "train a predictor on a dataset");
  add_common(trainc, tra.common);
  trainc->add_option("--data", tra.data)->required();
  trainc->add_option("--head", tra.head)->check(CLI::IsMember({"sigmoid", "linear", "viability", "cot"}));
  trainc->add_option("--seed", tra.seed);
  trainc->add_option("--lr", tra.learning_rate);
  trainc->add_option("--momentum", tra.momentum);
  trainc->add_option("--epochs", tra.epochs);
  trainc->add_option("--batch", tra.batch_size);

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "run an evaluation experiment");
  add_common(eval, ea.common);
  eval->add_option("--experiment", ea.experiment, "calibration | cot-curve | transition-up | transition-down | obstacle")
      ->required();
  eval->add_option("--models", ea.models, "directory holding <skill>_<kind>/model.txt")->required();
  eval->add_option("--skills", ea.skills, "comma-separated skill names");
  eval->add_option("--families", ea.families, "comma-separated sweep families");
  eval->add_option("--seed", ea.seed);
  eval->add_option("--samples", ea.samples);
  eval->add_option("--trials", ea.trials);

  DemoArgs da;
  auto* demo = app.add_subcommand("demo", "run one selector episode and write its tick log");
  add_common(demo, da.common);
  demo->add_option("--course", da.course)->check(CLI::IsMember({"flat", "stairs-up", "stairs-down", "obstacle"}));
  demo->add_option("--models", da.models);
  demo->add_option("--skills", da.skills, "comma-separated skill names, or none");
  demo->add_option("--height", da.height);
  demo->add_option("--seed", da.seed);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*terrain) cmd_terrain(ta, out);
    else if (*collect) cmd_collect(ca, out);
    else if (*trainc) cmd_train(tra, out);
    else if (*eval) cmd_eval(ea, out);
    else if (*demo) cmd_demo(da, out);
  } catch (const Error& e) {
    err << (e.code() == Errc::Usage ? "" : "error: ") << e.what() << "\n";
    return e.code() == Errc::Usage ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace locosel
