#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "locosel/config.hpp"

namespace locosel {

enum class TerrainKind { Flat, Rough, Discrete, StairsUp, StairsDown, Gap, Wall };

const char* to_string(TerrainKind kind);
TerrainKind parse_terrain_kind(const std::string& text);

/// Generator parameters. Structured features (stairs, gap, wall) run along +x
/// starting at `feature_start`; the extent spans
/// [x_min, x_min + extent_x] x [-extent_y / 2, extent_y / 2].
struct TerrainSpec {
  TerrainKind kind = TerrainKind::Flat;
  double step_height = 0.0;
  double step_depth = 0.3;
  int num_steps = 0;  // 0: stairs continue to the end of the extent
  double roughness_amplitude = 0.0;
  double obstacle_size = 0.5;
  double gap_width = 0.5;
  double gap_depth = 0.5;
  double wall_height = 0.4;
  double wall_thickness = 0.6;
  double feature_start = 0.0;
  double x_min = -4.0;
  double extent_x = 10.0;
  double extent_y = 4.0;
  std::uint64_t seed = 0;

  /// Throws Errc::InvalidSpec.
  void validate() const;

  /// Height of the dominant feature: step/wall height, gap depth or roughness.
  double difficulty() const;

  void write(KeyValueConfig& cfg, const std::string& prefix = "terrain") const;
  static TerrainSpec read(const KeyValueConfig& cfg, const std::string& prefix = "terrain");
};

/// Continuous world elevation. Structured kinds are evaluated in closed form;
/// rough and discrete kinds interpolate a seeded lattice.
class TerrainField {
 public:
  TerrainField() = default;
  explicit TerrainField(const TerrainSpec& spec);

  const TerrainSpec& spec() const { return spec_; }
  /// Cell size of the export grid and of the rough/discrete lattices.
  double resolution() const { return resolution_; }

  /// Total: points outside the extent are clamped to the boundary.
  double elevation(double x, double y) const;

  bool contains(double x, double y, double tol = 1e-9) const;
  double x_max() const { return spec_.x_min + spec_.extent_x; }
  double y_min() const { return -0.5 * spec_.extent_y; }
  double y_max() const { return 0.5 * spec_.extent_y; }

  /// Superimposes another structured feature (stairs, gap or wall). Used to
  /// assemble obstacle courses.
  void add_feature(const TerrainSpec& feature);
  const std::vector<TerrainSpec>& features() const { return features_; }

  /// Elevation sampled on the resolution grid (rows along x).
  Eigen::MatrixXd sample_grid() const;

 private:
  double base_elevation(double x, double y) const;

  TerrainSpec spec_;
  double resolution_ = 0.05;
  Eigen::MatrixXd lattice_;
  double lattice_spacing_ = 0.5;
  std::vector<TerrainSpec> features_;
};

TerrainField generate_terrain(const TerrainSpec& spec);

/// Closed-form elevation profile of a structured feature at coordinate x.
double feature_profile(const TerrainSpec& feature, double x);

std::string terrain_grid_csv(const TerrainField& field);

}  // namespace locosel
