#include "armforge/workspace.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <unordered_set>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "armforge/kinematics.hpp"

namespace armforge {

namespace {

struct CellKey {
  long long x, y, z;
  bool operator==(const CellKey&) const = default;
};

struct CellHash {
  std::size_t operator()(const CellKey& k) const noexcept {
    std::size_t h = std::hash<long long>{}(k.x);
    h ^= std::hash<long long>{}(k.y) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= std::hash<long long>{}(k.z) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};

CellKey quantize(const Eigen::Vector3d& p) {
  constexpr double kCell = 1e-6;
  return {std::llround(p.x() / kCell), std::llround(p.y() / kCell),
          std::llround(p.z() / kCell)};
}

double grid_value(const std::array<double, 2>& lim, int i, int steps) {
  if (i == steps - 1) return lim[1];
  return lim[0] + (lim[1] - lim[0]) * static_cast<double>(i) / (steps - 1);
}

}  // namespace

PointCloud sample_workspace(const ArmModel& m, int steps) {
  if (steps < 2) {
    throw std::invalid_argument("steps_per_joint must be >= 2");
  }
  PointCloud pc;
  std::unordered_set<CellKey, CellHash> seen;
  JointState q;
  q.theta[4] = m.joint_limits[4][0];

  for (int i1 = 0; i1 < steps; ++i1) {
    q.theta[0] = grid_value(m.joint_limits[0], i1, steps);
    for (int i2 = 0; i2 < steps; ++i2) {
      q.theta[1] = grid_value(m.joint_limits[1], i2, steps);
      for (int i3 = 0; i3 < steps; ++i3) {
        q.theta[2] = grid_value(m.joint_limits[2], i3, steps);
        for (int i4 = 0; i4 < steps; ++i4) {
          q.theta[3] = grid_value(m.joint_limits[3], i4, steps);
          const Eigen::Vector3d p = link_frames(m, q).back().translation;
          ++pc.grid_points;
          if (seen.insert(quantize(p)).second) pc.points.push_back(p);
        }
      }
    }
  }
  return pc;
}

WorkspaceExtent workspace_extent(const PointCloud& pc) {
  const auto& pts = pc.points;
  if (pts.empty()) throw std::invalid_argument("workspace_extent: empty cloud");

  WorkspaceExtent ext;
  Eigen::Vector3d lo = pts.front(), hi = pts.front();
  for (const auto& p : pts) {
    ext.max_reach = std::max(ext.max_reach, std::hypot(p.x(), p.y()));
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }

  // Exact diameter with radius pruning about the box center: a pair (i, j)
  // can only beat the incumbent if r_i + r_j exceeds it.
  const Eigen::Vector3d center = 0.5 * (lo + hi);
  std::vector<double> r(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) r[i] = (pts[i] - center).norm();
  std::vector<std::size_t> order(pts.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return r[a] > r[b]; });

  // Incumbent from a few farthest-point hops.
  double best = 0.0;
  std::size_t from = order.front();
  for (int hop = 0; hop < 4; ++hop) {
    std::size_t far = from;
    double far_d = 0.0;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      const double d = (pts[j] - pts[from]).squaredNorm();
      if (d > far_d) {
        far_d = d;
        far = j;
      }
    }
    best = std::max(best, std::sqrt(far_d));
    from = far;
  }

  const double r_max = r[order.front()];
  double best_sq = best * best;
  for (std::size_t a = 0; a < order.size(); ++a) {
    const std::size_t i = order[a];
    if (r[i] + r_max <= best) break;
    for (std::size_t b = 0; b < a; ++b) {
      const std::size_t j = order[b];
      if (r[i] + r[j] <= best) break;
      const double d = (pts[i] - pts[j]).squaredNorm();
      if (d > best_sq) {
        best_sq = d;
        best = std::sqrt(d);
      }
    }
  }
  ext.diameter = best;
  return ext;
}

void write_csv(std::ostream& out, const PointCloud& pc) {
  out << "x,y,z\n";
  for (const auto& p : pc.points) {
    fmt::print(out, "{:.6f},{:.6f},{:.6f}\n", p.x(), p.y(), p.z());
  }
}

void write_ply(std::ostream& out, const PointCloud& pc) {
  fmt::print(out,
             "ply\nformat ascii 1.0\ncomment units cm\nelement vertex {}\n"
             "property float x\nproperty float y\nproperty float z\n"
             "end_header\n",
             pc.points.size());
  for (const auto& p : pc.points) {
    fmt::print(out, "{:.6f} {:.6f} {:.6f}\n", p.x(), p.y(), p.z());
  }
}

}  // namespace armforge
