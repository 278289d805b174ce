#include "locosel/terrain.hpp"

#include <algorithm>
#include <cmath>

#include "locosel/common.hpp"

namespace locosel {

namespace {

struct KindName {
  TerrainKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {TerrainKind::Flat, "flat"},           {TerrainKind::Rough, "rough"},
    {TerrainKind::Discrete, "discrete"},   {TerrainKind::StairsUp, "stairs_up"},
    {TerrainKind::StairsDown, "stairs_down"}, {TerrainKind::Gap, "gap"},
    {TerrainKind::Wall, "wall"},
};

bool is_structured(TerrainKind kind) {
  return kind == TerrainKind::StairsUp || kind == TerrainKind::StairsDown ||
         kind == TerrainKind::Gap || kind == TerrainKind::Wall || kind == TerrainKind::Flat;
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

}  // namespace

const char* to_string(TerrainKind kind) {
  for (const auto& kn : kKindNames)
    if (kn.kind == kind) return kn.name;
  return "unknown";
}

TerrainKind parse_terrain_kind(const std::string& text) {
  for (const auto& kn : kKindNames)
    if (text == kn.name) return kn.kind;
  throw Error(Errc::InvalidSpec, "unknown terrain kind '" + text + "'");
}

void TerrainSpec::validate() const {
  auto fail = [](const std::string& what) { throw Error(Errc::InvalidSpec, what); };
  if (!(extent_x > 0.0) || !(extent_y > 0.0)) fail("extent must be strictly positive");
  if (!(step_height >= 0.0)) fail("step_height must be >= 0");
  if (!(step_depth > 0.0)) fail("step_depth must be > 0");
  if (num_steps < 0) fail("num_steps must be >= 0");
  if (!(roughness_amplitude >= 0.0)) fail("roughness_amplitude must be >= 0");
  if (!(obstacle_size > 0.0)) fail("obstacle_size must be > 0");
  if (!(gap_width >= 0.0) || !(gap_depth >= 0.0)) fail("gap dimensions must be >= 0");
  if (!(wall_height >= 0.0) || !(wall_thickness > 0.0)) fail("wall dimensions invalid");
}

double TerrainSpec::difficulty() const {
  switch (kind) {
    case TerrainKind::Flat: return 0.0;
    case TerrainKind::Rough:
    case TerrainKind::Discrete: return roughness_amplitude;
    case TerrainKind::StairsUp:
    case TerrainKind::StairsDown: return step_height;
    case TerrainKind::Gap: return gap_width;
    case TerrainKind::Wall: return wall_height;
  }
  return 0.0;
}

void TerrainSpec::write(KeyValueConfig& cfg, const std::string& prefix) const {
  auto put = [&](const char* key, double v) { cfg.set(prefix + "." + key, format_number(v)); };
  cfg.set(prefix + ".kind", to_string(kind));
  put("step_height", step_height);
  put("step_depth", step_depth);
  cfg.set(prefix + ".num_steps", std::to_string(num_steps));
  put("roughness_amplitude", roughness_amplitude);
  put("obstacle_size", obstacle_size);
  put("gap_width", gap_width);
  put("gap_depth", gap_depth);
  put("wall_height", wall_height);
  put("wall_thickness", wall_thickness);
  put("feature_start", feature_start);
  put("x_min", x_min);
  put("extent_x", extent_x);
  put("extent_y", extent_y);
  cfg.set(prefix + ".seed", std::to_string(seed));
}

TerrainSpec TerrainSpec::read(const KeyValueConfig& cfg, const std::string& prefix) {
  TerrainSpec s;
  auto get = [&](const char* key, double fallback) {
    return cfg.get_double(prefix + "." + key, fallback);
  };
  s.kind = parse_terrain_kind(cfg.get_string(prefix + ".kind", "flat"));
  s.step_height = get("step_height", s.step_height);
  s.step_depth = get("step_depth", s.step_depth);
  s.num_steps = static_cast<int>(cfg.get_int(prefix + ".num_steps", s.num_steps));
  s.roughness_amplitude = get("roughness_amplitude", s.roughness_amplitude);
  s.obstacle_size = get("obstacle_size", s.obstacle_size);
  s.gap_width = get("gap_width", s.gap_width);
  s.gap_depth = get("gap_depth", s.gap_depth);
  s.wall_height = get("wall_height", s.wall_height);
  s.wall_thickness = get("wall_thickness", s.wall_thickness);
  s.feature_start = get("feature_start", s.feature_start);
  s.x_min = get("x_min", s.x_min);
  s.extent_x = get("extent_x", s.extent_x);
  s.extent_y = get("extent_y", s.extent_y);
  s.seed = static_cast<std::uint64_t>(cfg.get_int(prefix + ".seed", 0));
  return s;
}

double feature_profile(const TerrainSpec& f, double x) {
  const double local = x - f.feature_start;
  switch (f.kind) {
    case TerrainKind::StairsUp:
    case TerrainKind::StairsDown: {
      if (local < 0.0) return 0.0;
      double k = std::floor(local / f.step_depth);
      if (f.num_steps > 0) k = std::min(k, static_cast<double>(f.num_steps));
      const double h = f.step_height * k;
      return f.kind == TerrainKind::StairsUp ? h : -h;
    }
    case TerrainKind::Gap:
      return (local >= 0.0 && local < f.gap_width) ? -f.gap_depth : 0.0;
    case TerrainKind::Wall:
      return (local >= 0.0 && local < f.wall_thickness) ? f.wall_height : 0.0;
    default:
      return 0.0;
  }
}

TerrainField::TerrainField(const TerrainSpec& spec) : spec_(spec) {
  spec_.validate();
  if (spec_.kind == TerrainKind::Rough || spec_.kind == TerrainKind::Discrete) {
    lattice_spacing_ = spec_.obstacle_size;
    const auto nx = static_cast<Eigen::Index>(std::ceil(spec_.extent_x / lattice_spacing_)) + 2;
    const auto ny = static_cast<Eigen::Index>(std::ceil(spec_.extent_y / lattice_spacing_)) + 2;
    lattice_.resize(nx, ny);
    Rng rng(derive_seed(spec_.seed, 0x7e77a1));
    const double amp = spec_.roughness_amplitude;
    for (Eigen::Index i = 0; i < nx; ++i)
      for (Eigen::Index j = 0; j < ny; ++j)
        lattice_(i, j) = spec_.kind == TerrainKind::Rough ? rng.uniform(-amp, amp)
                                                          : rng.uniform(0.0, amp);
  }
}

bool TerrainField::contains(double x, double y, double tol) const {
  return x >= spec_.x_min - tol && x <= x_max() + tol && y >= y_min() - tol &&
         y <= y_max() + tol;
}

double TerrainField::base_elevation(double x, double y) const {
  switch (spec_.kind) {
    case TerrainKind::Rough: {
      const double gx = (x - spec_.x_min) / lattice_spacing_;
      const double gy = (y - y_min()) / lattice_spacing_;
      const auto i = static_cast<Eigen::Index>(std::floor(gx));
      const auto j = static_cast<Eigen::Index>(std::floor(gy));
      const double tx = smoothstep(gx - static_cast<double>(i));
      const double ty = smoothstep(gy - static_cast<double>(j));
      const double a = lattice_(i, j) + (lattice_(i + 1, j) - lattice_(i, j)) * tx;
      const double b = lattice_(i, j + 1) + (lattice_(i + 1, j + 1) - lattice_(i, j + 1)) * tx;
      return a + (b - a) * ty;
    }
    case TerrainKind::Discrete: {
      const auto i = static_cast<Eigen::Index>(std::floor((x - spec_.x_min) / lattice_spacing_));
      const auto j = static_cast<Eigen::Index>(std::floor((y - y_min()) / lattice_spacing_));
      return lattice_(i, j);
    }
    default:
      return is_structured(spec_.kind) ? feature_profile(spec_, x) : 0.0;
  }
}

double TerrainField::elevation(double x, double y) const {
  x = std::clamp(x, spec_.x_min, x_max());
  y = std::clamp(y, y_min(), y_max());
  double h = base_elevation(x, y);
  for (const auto& f : features_) h += feature_profile(f, x);
  return h;
}

void TerrainField::add_feature(const TerrainSpec& feature) {
  feature.validate();
  if (feature.kind != TerrainKind::StairsUp && feature.kind != TerrainKind::StairsDown &&
      feature.kind != TerrainKind::Gap && feature.kind != TerrainKind::Wall)
    throw Error(Errc::InvalidSpec, "only stairs, gap and wall can be added as features");
  features_.push_back(feature);
}

Eigen::MatrixXd TerrainField::sample_grid() const {
  const auto nx = static_cast<Eigen::Index>(std::floor(spec_.extent_x / resolution_ + 1e-9)) + 1;
  const auto ny = static_cast<Eigen::Index>(std::floor(spec_.extent_y / resolution_ + 1e-9)) + 1;
  Eigen::MatrixXd grid(nx, ny);
  for (Eigen::Index i = 0; i < nx; ++i)
    for (Eigen::Index j = 0; j < ny; ++j)
      grid(i, j) = elevation(spec_.x_min + resolution_ * static_cast<double>(i),
                             y_min() + resolution_ * static_cast<double>(j));
  return grid;
}

TerrainField generate_terrain(const TerrainSpec& spec) { return TerrainField(spec); }

std::string terrain_grid_csv(const TerrainField& field) {
  const Eigen::MatrixXd grid = field.sample_grid();
  std::string out = "x";
  for (Eigen::Index j = 0; j < grid.cols(); ++j)
    out += "," + format_number(field.y_min() + field.resolution() * static_cast<double>(j));
  out += "\n";
  for (Eigen::Index i = 0; i < grid.rows(); ++i) {
    out += format_number(field.spec().x_min + field.resolution() * static_cast<double>(i));
    for (Eigen::Index j = 0; j < grid.cols(); ++j) out += "," + format_number(grid(i, j));
    out += "\n";
  }
  return out;
}

}  // namespace locosel
