#include "armforge/model.hpp"

#include <cmath>
#include <set>

#include <fmt/format.h>

namespace armforge {

const DHRow& ArmModel::row(std::size_t i) const {
  if (i >= dh_table.size()) {
    throw std::out_of_range(fmt::format("dh_table has no row {}", i + 1));
  }
  return dh_table[i];
}

const ServoSpec& ArmModel::servo_for_channel(int channel) const {
  for (const auto& s : servos) {
    if (s.channel == channel) return s;
  }
  throw std::out_of_range(fmt::format("no servo on channel {}", channel));
}

ArmModel default_arm_model() {
  ArmModel m;

  // Grip-side lengths L1 + L2 + L3 end up as the grip offset d5.
  const double grip_offset = 2.8 + 2.8 + 2.85;
  m.dh_table = {
      {0.0, 90.0, 7.0, 0.0, 1},
      {14.6, 0.0, 0.0, 0.0, 2},
      {18.73, 0.0, 0.0, 0.0, 3},
      {0.0, -90.0, 0.0, 90.0, 4},
      {0.0, 0.0, grip_offset, 0.0, 5},
  };

  m.mass_chain = {
      {"grip", 2.8, 15.7, 45.5},
      {"sensor bracket", 2.8, 10.0, 31.0},
      {"wrist bracket", 2.85, 9.0, 55.2 + 7.0},
      {"forearm", 18.73, 10.0 + 6.0 + 8.0, 110.0 + 13.0},
      {"upper arm", 14.6, 16.0 + 15.0, 197.0 + 18.0},
  };

  // Index k in 1..5 backs torque equation k of the static chain; index 0 is
  // the base rotation servo, which carries no gravity load.
  m.servos = {
      {"HS-485HB", 6.0, 180, 40, 250.0, {0.0, 180.0}, 1},
      {"HS-422", 4.1, 180, 40, 250.0, {0.0, 180.0}, 6},
      {"HS-225MG", 4.8, 340, 40, 250.0, {0.0, 180.0}, 5},
      {"HS-645MG", 9.6, 450, 40, 250.0, {0.0, 180.0}, 4},
      {"HS-755HB", 13.2, 285, 40, 250.0, {0.0, 180.0}, 3},
      {"HS-805BB", 24.7, 830, 40, 250.0, {0.0, 180.0}, 2},
  };

  m.joint_limits = {{
      {0.0, 180.0},
      {0.0, 180.0},
      {-180.0, 0.0},
      {0.0, 180.0},
      {0.0, 180.0},
  }};
  return m;
}

namespace {

class Checker {
 public:
  void require(bool ok, std::string message) {
    if (!ok) out_.push_back(std::move(message));
  }
  std::vector<std::string> take() { return std::move(out_); }

 private:
  std::vector<std::string> out_;
};

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

}  // namespace

std::vector<std::string> validate_model(const ArmModel& m) {
  Checker c;

  c.require(m.dh_table.size() == kNumJoints, "dh_table must have 5 rows");
  std::set<int> seen_joints;
  for (std::size_t i = 0; i < m.dh_table.size(); ++i) {
    const auto& r = m.dh_table[i];
    const auto f = [i](const char* field) {
      return fmt::format("dh_table[{}].{}", i, field);
    };
    c.require(finite_nonneg(r.a), f("a") + " must be finite and >= 0");
    c.require(finite_nonneg(r.d), f("d") + " must be finite and >= 0");
    c.require(std::isfinite(r.alpha) && r.alpha >= -180.0 && r.alpha <= 180.0,
              f("alpha") + " must lie within [-180, 180]");
    c.require(std::isfinite(r.theta_offset),
              f("theta_offset") + " must be finite");
    c.require(r.joint_index >= 1 && r.joint_index <= 5,
              f("joint_index") + " must lie within 1..5");
    c.require(seen_joints.insert(r.joint_index).second,
              f("joint_index") + " must be unique");
  }

  c.require(m.mass_chain.size() == kNumJoints, "mass_chain must have 5 links");
  for (std::size_t i = 0; i < m.mass_chain.size(); ++i) {
    const auto& l = m.mass_chain[i];
    const auto f = [i](const char* field) {
      return fmt::format("mass_chain[{}].{}", i, field);
    };
    c.require(std::isfinite(l.length) && l.length > 0.0,
              f("length") + " must be > 0");
    c.require(finite_nonneg(l.weight), f("weight") + " must be >= 0");
    c.require(finite_nonneg(l.actuator), f("actuator") + " must be >= 0");
  }

  c.require(m.servos.size() == kNumServos, "servos must have 6 entries");
  std::set<int> seen_channels;
  for (std::size_t i = 0; i < m.servos.size(); ++i) {
    const auto& s = m.servos[i];
    const auto f = [i](const char* field) {
      return fmt::format("servos[{}].{}", i, field);
    };
    c.require(std::isfinite(s.rated_torque) && s.rated_torque > 0.0,
              f("rated_torque") + " must be > 0");
    c.require(s.stall_current > 0, f("stall_current") + " must be > 0");
    c.require(s.comm_current >= 0, f("comm_current") + " must be >= 0");
    c.require(std::isfinite(s.slew_rate) && s.slew_rate > 0.0,
              f("slew_rate") + " must be > 0");
    c.require(s.angle_range[0] < s.angle_range[1],
              f("angle_range") + " must satisfy lower < upper");
    c.require(s.channel >= 1 && s.channel <= 6,
              f("channel") + " must lie within 1..6");
    c.require(seen_channels.insert(s.channel).second,
              f("channel") + " must be unique");
  }

  const auto& p = m.sensor;
  c.require(std::isfinite(p.K) && p.K > 0.0, "sensor.K must be > 0");
  c.require(std::isfinite(p.d0), "sensor.d0 must be finite");
  c.require(p.valid_range[0] < p.valid_range[1],
            "sensor.valid_range must satisfy lower < upper");
  c.require(p.best_accuracy_band[0] < p.best_accuracy_band[1],
            "sensor.best_accuracy_band must satisfy lower < upper");
  c.require(p.tall_threshold < p.empty_area_distance,
            "sensor.tall_threshold must be < sensor.empty_area_distance");
  c.require(finite_nonneg(p.noise_sigma), "sensor.noise_sigma must be >= 0");
  c.require(p.no_return_distance > 0.0,
            "sensor.no_return_distance must be > 0");
  c.require(p.supply_current >= 0, "sensor.supply_current must be >= 0");
  c.require(p.comm_current >= 0, "sensor.comm_current must be >= 0");

  c.require(m.supply.servo_supply.max_current > 0,
            "supply.servo.max_current must be > 0");
  c.require(m.supply.logic_supply.max_current > 0,
            "supply.logic.max_current must be > 0");
  c.require(m.supply.servo_supply.volts > 0.0, "supply.servo.volts must be > 0");
  c.require(m.supply.logic_supply.volts > 0.0, "supply.logic.volts must be > 0");

  for (std::size_t j = 0; j < m.joint_limits.size(); ++j) {
    const auto& [lo, hi] = m.joint_limits[j];
    c.require(std::isfinite(lo) && std::isfinite(hi) && lo < hi,
              fmt::format("joint_limits[{}] must satisfy lower < upper", j));
    c.require(lo >= -180.0 && lo <= 180.0 && hi >= -180.0 && hi <= 180.0,
              fmt::format("joint_limits[{}] must lie within [-180, 180]", j));
  }

  if (m.dh_table.size() == kNumJoints) {
    const double reach = m.reach();
    c.require(std::isfinite(reach) && reach > 0.0,
              "reach (a3 + a4 + d5) must be finite and > 0");
  }
  return c.take();
}

}  // namespace armforge
