#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace armforge {

// Units used throughout: cm, gram-force (gf), kg*cm torque, mA, degrees.

// One row of the standard Denavit-Hartenberg table:
//   A_i = Rot_z(theta + theta_offset) * Trans_z(d) * Trans_x(a) * Rot_x(alpha)
struct DHRow {
  double a = 0.0;             // cm
  double alpha = 0.0;         // deg
  double d = 0.0;             // cm
  double theta_offset = 0.0;  // deg, added to the commanded joint angle
  int joint_index = 1;

  bool operator==(const DHRow&) const = default;
};

// A link of the static torque chain, stored grip-outward: entry 0 is the grip
// (L1, W1) and its actuator is the servo that sits at the far end of the link
// (A2 for entry 0, ..., A6 for entry 4).
struct LinkMass {
  std::string name;
  double length = 0.0;    // L, cm
  double weight = 0.0;    // W, gf
  double actuator = 0.0;  // A, gf

  bool operator==(const LinkMass&) const = default;
};

struct ServoSpec {
  std::string model_name;
  double rated_torque = 0.0;  // kg*cm
  int stall_current = 0;      // mA
  int comm_current = 0;       // mA
  double slew_rate = 250.0;   // deg/s
  std::array<double, 2> angle_range{0.0, 180.0};
  // Command channel driven by this servo: 1..5 are joints theta1..theta5,
  // 6 is the gripper.
  int channel = 1;

  bool operator==(const ServoSpec&) const = default;
};

struct SensorModelParams {
  double K = 27.0;   // V*cm
  double d0 = 1.0;   // cm
  std::array<double, 2> valid_range{10.0, 80.0};
  std::array<double, 2> best_accuracy_band{10.0, 15.0};
  double empty_area_distance = 13.8;
  double tall_threshold = 10.0;
  double noise_sigma = 0.0;
  // Reported distance when the sensor axis never meets the work plane.
  double no_return_distance = 100.0;
  int supply_current = 30;  // mA
  int comm_current = 40;    // mA

  bool operator==(const SensorModelParams&) const = default;
};

struct Rail {
  double volts = 0.0;
  int max_current = 0;  // mA

  bool operator==(const Rail&) const = default;
};

struct SupplyRatings {
  Rail servo_supply{6.0, 2250};
  Rail logic_supply{5.0, 1500};

  bool operator==(const SupplyRatings&) const = default;
};

using JointLimits = std::array<std::array<double, 2>, 5>;

inline constexpr std::size_t kNumJoints = 5;
inline constexpr std::size_t kNumServos = 6;
inline constexpr int kGripChannel = 6;

struct ArmModel {
  std::vector<DHRow> dh_table;
  std::vector<LinkMass> mass_chain;
  std::vector<ServoSpec> servos;
  SensorModelParams sensor;
  SupplyRatings supply;
  JointLimits joint_limits{};

  bool operator==(const ArmModel&) const = default;

  // Geometry by role. The default table is the standard-convention form of a
  // base / shoulder / elbow / wrist / roll chain, so the upper arm length lives
  // on row 2 and the forearm on row 3.
  double base_height() const { return row(0).d; }
  double upper_arm() const { return row(1).a; }
  double forearm() const { return row(2).a; }
  double grip_length() const { return row(4).d; }
  double wrist_offset() const { return row(3).theta_offset; }
  double reach() const { return upper_arm() + forearm() + grip_length(); }

  // Servo driving a command channel (1..6); throws std::out_of_range.
  const ServoSpec& servo_for_channel(int channel) const;

 private:
  const DHRow& row(std::size_t i) const;
};

// Built-in description of the five-joint sorting arm.
ArmModel default_arm_model();

// Empty iff every invariant holds. Each entry reads "<field> <rule>".
std::vector<std::string> validate_model(const ArmModel& m);

// Raised when a config document cannot be parsed or fails validation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace armforge
