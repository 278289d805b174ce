#pragma once

#include <string>

#include <Eigen/Core>

#include "locosel/common.hpp"
#include "locosel/terrain.hpp"

namespace locosel {

/// Robot-frame grid layout. Row 0 is 2 m ahead of the base, row 20 sits under
/// the base and row 30 is 1 m behind; column 0 is the leftmost (+y) column.
inline constexpr int kHfRows = 31;
inline constexpr int kHfCols = 11;
inline constexpr int kHfCenterRow = 20;
inline constexpr int kHfCenterCol = 5;
inline constexpr int kHfCells = kHfRows * kHfCols;
inline constexpr double kHfSpacing = 0.1;

using HeightGrid = Eigen::Matrix<double, kHfRows, kHfCols, Eigen::RowMajor>;
using OcclusionMask = Eigen::Matrix<bool, kHfRows, kHfCols, Eigen::RowMajor>;

/// Base pose; z is the base height, yaw is kept in (-pi, pi].
struct Pose2p5D {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double yaw = 0.0;

  friend bool operator==(const Pose2p5D&, const Pose2p5D&) = default;
};

double normalize_angle(double angle);

struct Heightfield {
  HeightGrid values = HeightGrid::Zero();
  OcclusionMask mask = OcclusionMask::Constant(false);  // true = occluded

  bool any_occluded() const { return mask.any(); }
  double center() const { return values(kHfCenterRow, kHfCenterCol); }
};

/// Forward/lateral offsets (meters) of a cell relative to the base.
inline double cell_forward(int row) { return kHfSpacing * static_cast<double>(kHfCenterRow - row); }
inline double cell_lateral(int col) { return kHfSpacing * static_cast<double>(kHfCenterCol - col); }

struct ExtractionOptions {
  double sensor_height = 0.5;  // above the base
  double ray_step = 0.01;      // horizontal sampling of the occlusion ray
};

/// Samples the terrain in the yaw-aligned robot frame. Cells ahead of the
/// base whose line of sight from the sensor is blocked are marked occluded.
/// Throws Errc::OutOfExtent when any cell falls outside the terrain extent.
Heightfield extract_heightfield(const TerrainField& field, const Pose2p5D& pose,
                                const ExtractionOptions& options = {});

/// Adds U(-half_width, half_width) to every visible cell. One draw is
/// consumed per cell regardless of occlusion so streams stay aligned.
Heightfield inject_noise(Heightfield hf, Rng& rng, double half_width = 0.1);

/// Subtracts the center value. Throws Errc::OccludedCenter.
Heightfield normalize(Heightfield hf);

/// Replaces occluded cells, back row to front row per column, with the last
/// visible value behind them. Throws Errc::FullyOccludedColumn when a column
/// has no visible cell behind an occluded one.
Heightfield forward_fill(Heightfield hf);

/// extract -> inject_noise -> forward_fill -> normalize.
Heightfield observe(const TerrainField& field, const Pose2p5D& pose, Rng& rng,
                    double noise_half_width = 0.1, const ExtractionOptions& options = {});

std::string heightfield_csv(const HeightGrid& values);

}  // namespace locosel
