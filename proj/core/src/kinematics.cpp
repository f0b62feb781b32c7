#include "armforge/kinematics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace armforge {

namespace {

constexpr double kLimitTol = 1e-9;      // deg
constexpr double kReachSlack = 1e-9;    // acos argument slack at the boundary
constexpr double kUnitSnap = 1e-15;

// Returns value shifted by a multiple of 360 into [lo, hi] (snapping within
// tolerance), or nullopt.
std::optional<double> fit_into(double value, const std::array<double, 2>& lim) {
  const double base = wrap_deg(value);
  for (const double shift : {0.0, 360.0, -360.0}) {
    const double v = base + shift;
    if (v >= lim[0] - kLimitTol && v <= lim[1] + kLimitTol) {
      return std::clamp(v, lim[0], lim[1]);
    }
  }
  return std::nullopt;
}

}  // namespace

double wrap_deg(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r <= -180.0) r += 360.0;
  if (r > 180.0) r -= 360.0;
  return r;
}

Eigen::Matrix4d HomogeneousTransform::matrix() const {
  Eigen::Matrix4d h = Eigen::Matrix4d::Identity();
  h.topLeftCorner<3, 3>() = rotation;
  h.topRightCorner<3, 1>() = translation;
  return h;
}

bool HomogeneousTransform::is_rigid(double tol) const {
  const double ortho =
      (rotation.transpose() * rotation - Eigen::Matrix3d::Identity())
          .cwiseAbs()
          .maxCoeff();
  return ortho <= tol && std::abs(rotation.determinant() - 1.0) <= tol;
}

bool within_limits(const ArmModel& m, const JointState& q, double tol) {
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    const auto& [lo, hi] = m.joint_limits[j];
    if (!(q.theta[j] >= lo - tol && q.theta[j] <= hi + tol)) return false;
  }
  return q.grip_opening >= -tol && q.grip_opening <= 1.0 + tol;
}

void check_joint_limits(const ArmModel& m, const JointState& q) {
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    const auto& [lo, hi] = m.joint_limits[j];
    if (!(q.theta[j] >= lo && q.theta[j] <= hi)) {
      throw JointLimitError(fmt::format(
          "theta{} = {} deg outside [{}, {}]", j + 1, q.theta[j], lo, hi));
    }
  }
  if (!(q.grip_opening >= 0.0 && q.grip_opening <= 1.0)) {
    throw JointLimitError(
        fmt::format("grip_opening = {} outside [0, 1]", q.grip_opening));
  }
}

HomogeneousTransform dh_transform(const DHRow& row, double theta_deg) {
  const double th = deg2rad(theta_deg + row.theta_offset);
  const double al = deg2rad(row.alpha);
  const double ct = std::cos(th), st = std::sin(th);
  const double ca = std::cos(al), sa = std::sin(al);

  HomogeneousTransform t;
  t.rotation << ct, -st * ca, st * sa,
                st, ct * ca, -ct * sa,
                0.0, sa, ca;
  t.translation << row.a * ct, row.a * st, row.d;
  return t;
}

std::array<HomogeneousTransform, 6> link_frames(const ArmModel& m,
                                                const JointState& q) {
  std::array<HomogeneousTransform, 6> frames;
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    frames[i + 1] = frames[i] * dh_transform(m.dh_table.at(i), q.theta[i]);
  }
  return frames;
}

HomogeneousTransform forward_kinematics(const ArmModel& m, const JointState& q) {
  check_joint_limits(m, q);
  return link_frames(m, q).back();
}

Eigen::Vector3d closed_form_position(const ArmModel& m, const JointState& q) {
  const double d1 = m.base_height();
  const double a3 = m.upper_arm();
  const double a4 = m.forearm();
  const double d5 = m.grip_length();

  const double t1 = deg2rad(q.theta[0]);
  const double t2 = deg2rad(q.theta[1]);
  const double t3 = deg2rad(q.theta[2]);
  const double t4 = deg2rad(q.theta[3] + m.wrist_offset());
  const double c1 = std::cos(t1), s1 = std::sin(t1);
  const double c2 = std::cos(t2), s2 = std::sin(t2);
  const double c3 = std::cos(t3), s3 = std::sin(t3);
  const double c4 = std::cos(t4), s4 = std::sin(t4);

  const double dx = (-(c1 * c2 * c3 - c1 * s2 * s3) * s4 +
                     (-c1 * c2 * s3 - c1 * s2 * c3) * c4) * d5 +
                    (c1 * c2 * c3 - c1 * s2 * s3) * a4 + c1 * c2 * a3;
  const double dy = (-(s1 * c2 * c3 - s1 * s2 * s3) * s4 +
                     (-s1 * c2 * s3 - s1 * s2 * c3) * c4) * d5 +
                    (s1 * c2 * c3 - s1 * s2 * s3) * a4 + s1 * c2 * a3;
  const double dz = (-(s2 * c3 + c2 * s3) * s4 + (-s2 * s3 + c2 * c3) * c4) * d5 +
                    (s2 * c3 + c2 * s3) * a4 + s2 * a3 + d1;
  return {dx, dy, dz};
}

std::string to_string(IkFailure f) {
  switch (f) {
    case IkFailure::kUnreachable: return "unreachable";
    case IkFailure::kSingular: return "singular: theta1 indeterminate";
    case IkFailure::kJointLimit: return "joint limit violated";
  }
  return "unknown";
}

IkResult inverse_kinematics(const ArmModel& m, const PoseTarget& target,
                            ElbowBranch branch) {
  const double x = target.position.x();
  const double y = target.position.y();
  const double z = target.position.z();
  const double radial = std::hypot(x, y);
  if (radial < 1e-12) return IkFailure::kSingular;

  const double d1 = m.base_height();
  const double a3 = m.upper_arm();
  const double a4 = m.forearm();
  const double d5 = m.grip_length();
  const double yaw = std::atan2(y, x);
  const double psi = deg2rad(target.psi);

  struct Plane {
    double yaw, rho, psi;
  };
  // Direct yaw, then the yaw turned half a revolution with the arm plane
  // mirrored (radial coordinate and pitch reflected).
  const std::array<Plane, 2> planes{{{yaw, radial, psi},
                                     {yaw + kPi, -radial, kPi - psi}}};

  // The mirrored plane sees the same wrist distance, so reachability is
  // decided once.
  const double rho_w0 = radial - d5 * std::cos(psi);
  const double h0 = z - d5 * std::sin(psi) - d1;
  const double c = std::hypot(rho_w0, h0);
  if (a3 <= 0.0 || a4 <= 0.0 || c <= 0.0) return IkFailure::kUnreachable;
  double cos_a2 = (a3 * a3 + c * c - a4 * a4) / (2.0 * a3 * c);
  double cos_beta = (a3 * a3 + a4 * a4 - c * c) / (2.0 * a3 * a4);
  if (std::abs(cos_a2) > 1.0 + kReachSlack ||
      std::abs(cos_beta) > 1.0 + kReachSlack) {
    return IkFailure::kUnreachable;
  }
  // acos is ill-conditioned at +-1; a few ulps of rounding there would
  // otherwise bend a straight arm by ~1e-6 deg and trip the joint limits.
  const auto snap = [](double v) {
    v = std::clamp(v, -1.0, 1.0);
    if (1.0 - std::abs(v) < kUnitSnap) v = std::copysign(1.0, v);
    return v;
  };
  cos_a2 = snap(cos_a2);
  cos_beta = snap(cos_beta);
  const double a2 = std::acos(cos_a2);
  const double elbow = kPi - std::acos(cos_beta);

  for (const auto& p : planes) {
    const double rho_w = p.rho - d5 * std::cos(p.psi);
    const double h = z - d5 * std::sin(p.psi) - d1;
    const double a1 = std::atan2(h, rho_w);
    const double t2 = branch == ElbowBranch::kUp ? a1 + a2 : a1 - a2;
    const double t3 = branch == ElbowBranch::kUp ? -elbow : elbow;
    const double t4 = p.psi - t2 - t3 - deg2rad(m.wrist_offset()) - kPi / 2.0;

    const std::array<double, 5> raw{rad2deg(p.yaw), rad2deg(t2), rad2deg(t3),
                                    rad2deg(t4), target.roll};
    JointState q;
    q.grip_opening = 0.0;
    bool ok = true;
    for (std::size_t j = 0; j < kNumJoints && ok; ++j) {
      const auto fitted = fit_into(raw[j], m.joint_limits[j]);
      if (fitted) {
        q.theta[j] = *fitted;
      } else {
        ok = false;
      }
    }
    if (ok) return q;
  }
  return IkFailure::kJointLimit;
}

PoseTarget achieved_pose(const ArmModel& m, const JointState& q) {
  const auto tip = link_frames(m, q).back();
  const Eigen::Vector3d& p = tip.translation;
  const Eigen::Vector3d approach = tip.rotation.col(2);
  const double yaw = std::atan2(p.y(), p.x());
  const double outward = approach.x() * std::cos(yaw) + approach.y() * std::sin(yaw);

  PoseTarget pose;
  pose.position = p;
  pose.psi = rad2deg(std::atan2(approach.z(), outward));
  pose.roll = q.theta[4];
  return pose;
}

int degrees_of_freedom(int n_links, int j1, int j2) {
  if (n_links < 1 || j1 < 0 || j2 < 0) {
    throw std::invalid_argument("degrees_of_freedom: n_links >= 1, j1, j2 >= 0");
  }
  return 3 * (n_links - 1) - 2 * j1 - j2;
}

}  // namespace armforge
