#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "armforge/model.hpp"

namespace armforge {

struct PointCloud {
  std::vector<Eigen::Vector3d> points;  // cm
  // Grid evaluations before deduplication (steps^4).
  std::size_t grid_points = 0;
};

// Tip positions on a regular grid over the limits of theta1..theta4, theta5
// held at its lower limit (roll does not move the tip). Points closer than
// 1e-6 cm collapse to one. Throws std::invalid_argument if steps < 2.
PointCloud sample_workspace(const ArmModel& m, int steps_per_joint);

struct WorkspaceExtent {
  double max_reach = 0.0;  // largest horizontal distance from the base axis
  double diameter = 0.0;   // largest pairwise distance
};

// Throws std::invalid_argument on an empty cloud.
WorkspaceExtent workspace_extent(const PointCloud& pc);

// "x,y,z" header, six decimals.
void write_csv(std::ostream& out, const PointCloud& pc);
// ASCII PLY with float vertices.
void write_ply(std::ostream& out, const PointCloud& pc);

}  // namespace armforge
