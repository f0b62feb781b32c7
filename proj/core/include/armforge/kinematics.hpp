#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

#include <Eigen/Dense>

#include "armforge/model.hpp"

namespace armforge {

inline constexpr double kPi = 3.14159265358979323846;
inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }
// Wraps into (-180, 180].
double wrap_deg(double deg);

struct JointState {
  std::array<double, 5> theta{};  // deg
  double grip_opening = 0.0;      // 0 closed .. 1 open

  bool operator==(const JointState&) const = default;
};

// Rigid transform; rotation orthonormal with det +1.
struct HomogeneousTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static HomogeneousTransform identity() { return {}; }

  HomogeneousTransform operator*(const HomogeneousTransform& rhs) const {
    return {rotation * rhs.rotation, rotation * rhs.translation + translation};
  }
  Eigen::Matrix4d matrix() const;
  // |R^T R - I| and |det R - 1| both below tol (max-norm).
  bool is_rigid(double tol = 1e-9) const;
};

class JointLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Throws JointLimitError naming the first offending joint.
void check_joint_limits(const ArmModel& m, const JointState& q);
bool within_limits(const ArmModel& m, const JointState& q, double tol = 0.0);

HomogeneousTransform dh_transform(const DHRow& row, double theta_deg);

// Frames 0..5: base, then the frame after each of the five links.
std::array<HomogeneousTransform, 6> link_frames(const ArmModel& m,
                                                const JointState& q);

// Base-to-grip-tip transform. Joint limits are enforced.
HomogeneousTransform forward_kinematics(const ArmModel& m, const JointState& q);

// Tip position from the expanded scalar expressions of the five-link product
// (valid for the default chain structure). No limit check.
Eigen::Vector3d closed_form_position(const ArmModel& m, const JointState& q);

struct PoseTarget {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // cm
  // Grip pitch, deg: elevation of the approach axis measured in the vertical
  // plane through the target, 0 = pointing radially outward, -90 = down.
  double psi = 0.0;
  // Roll about the approach axis; IK passes it straight through to theta5.
  double roll = 90.0;
};

enum class ElbowBranch { kUp, kDown };

enum class IkFailure { kUnreachable, kSingular, kJointLimit };
std::string to_string(IkFailure f);

using IkResult = std::variant<JointState, IkFailure>;

// Geometric solver: base yaw from atan2, wrist center back-off along the
// approach axis, law-of-cosines shoulder/elbow, wrist closes the pitch sum.
// When the direct base yaw is outside its limits the solver also tries the
// yaw rotated by 180 deg with the arm leaning back over the base.
IkResult inverse_kinematics(const ArmModel& m, const PoseTarget& target,
                            ElbowBranch branch);

// Position + grip pitch actually achieved by q, in PoseTarget conventions.
PoseTarget achieved_pose(const ArmModel& m, const JointState& q);

// Gruebler-Kutzbach mobility for a planar-counted mechanism.
int degrees_of_freedom(int n_links, int j1, int j2);

}  // namespace armforge
