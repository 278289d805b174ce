#include "locosel/heightfield.hpp"

#include <cmath>
#include <numbers>

namespace locosel {

double normalize_angle(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double a = std::fmod(angle, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

Heightfield extract_heightfield(const TerrainField& field, const Pose2p5D& pose,
                                const ExtractionOptions& options) {
  const double c = std::cos(pose.yaw);
  const double s = std::sin(pose.yaw);
  auto world = [&](double fwd, double lat) {
    return Eigen::Vector2d(pose.x + fwd * c - lat * s, pose.y + fwd * s + lat * c);
  };

  for (int row : {0, kHfRows - 1})
    for (int col : {0, kHfCols - 1}) {
      const Eigen::Vector2d p = world(cell_forward(row), cell_lateral(col));
      if (!field.contains(p.x(), p.y(), 1e-6))
        throw Error(Errc::OutOfExtent, "heightfield corner (" + format_number(p.x()) + ", " +
                                           format_number(p.y()) + ") outside terrain extent");
    }

  Heightfield hf;
  const double sensor_z = pose.z + options.sensor_height;
  for (int row = 0; row < kHfRows; ++row) {
    for (int col = 0; col < kHfCols; ++col) {
      const double fwd = cell_forward(row);
      const double lat = cell_lateral(col);
      const Eigen::Vector2d p = world(fwd, lat);
      const double h = field.elevation(p.x(), p.y());
      hf.values(row, col) = h;
      // Ground at and behind the base has already been observed.
      if (row >= kHfCenterRow) continue;
      const double dist = std::hypot(fwd, lat);
      const int n = std::max(2, static_cast<int>(std::ceil(dist / options.ray_step)));
      for (int i = 1; i < n; ++i) {
        const double t = static_cast<double>(i) / n;
        const Eigen::Vector2d q = world(t * fwd, t * lat);
        const double line_z = sensor_z + t * (h - sensor_z);
        if (field.elevation(q.x(), q.y()) > line_z + 1e-9) {
          hf.mask(row, col) = true;
          break;
        }
      }
    }
  }
  return hf;
}

Heightfield inject_noise(Heightfield hf, Rng& rng, double half_width) {
  for (int row = 0; row < kHfRows; ++row)
    for (int col = 0; col < kHfCols; ++col) {
      const double u = rng.uniform(-half_width, half_width);
      if (!hf.mask(row, col)) hf.values(row, col) += u;
    }
  return hf;
}

Heightfield normalize(Heightfield hf) {
  if (hf.mask(kHfCenterRow, kHfCenterCol))
    throw Error(Errc::OccludedCenter, "center cell is occluded; forward_fill first");
  const double center = hf.center();
  hf.values.array() -= center;
  return hf;
}

Heightfield forward_fill(Heightfield hf) {
  for (int col = 0; col < kHfCols; ++col) {
    bool have_valid = false;
    double last = 0.0;
    for (int row = kHfRows - 1; row >= 0; --row) {
      if (!hf.mask(row, col)) {
        last = hf.values(row, col);
        have_valid = true;
      } else if (have_valid) {
        hf.values(row, col) = last;
      } else {
        throw Error(Errc::FullyOccludedColumn,
                    "column " + std::to_string(col) + " has no visible cell behind row " +
                        std::to_string(row));
      }
    }
  }
  hf.mask.setConstant(false);
  return hf;
}

Heightfield observe(const TerrainField& field, const Pose2p5D& pose, Rng& rng,
                    double noise_half_width, const ExtractionOptions& options) {
  return normalize(forward_fill(inject_noise(extract_heightfield(field, pose, options), rng,
                                             noise_half_width)));
}

std::string heightfield_csv(const HeightGrid& values) {
  std::string out;
  for (int row = 0; row < kHfRows; ++row) {
    for (int col = 0; col < kHfCols; ++col) {
      if (col) out += ',';
      out += format_number(values(row, col));
    }
    out += '\n';
  }
  return out;
}

}  // namespace locosel
