#pragma once

#include <string>
#include <utility>
#include <vector>

#include "armforge/model.hpp"

namespace armforge {

// Current budget, integer mA throughout.
struct BudgetReport {
  int total_stall = 0;  // every servo at stall simultaneously
  int servo_supply_limit = 0;
  bool simultaneous_feasible = false;
  int worst_single_servo = 0;
  int logic_total = 0;  // servo signal lines + sensor supply + sensor signal
  int logic_limit = 0;
  bool logic_feasible = false;
};

BudgetReport stall_budget(const ArmModel& m);

// One servo moving over [start, end) seconds.
struct MotionInterval {
  int servo = 0;
  double start = 0.0;
  double end = 0.0;

  bool operator==(const MotionInterval&) const = default;
};

struct MotionViolation {
  MotionInterval first;   // earlier start (ties: lower servo, then end)
  MotionInterval second;
  std::string describe() const;
};

// Empty iff no two intervals overlap; touching endpoints are allowed.
// Pairs are reported in canonical order so the result does not depend on
// the order of `plan`. Throws std::invalid_argument if any start >= end.
std::vector<MotionViolation> validate_motion_plan(std::vector<MotionInterval> plan);

// Largest summed stall current over any instant of the plan; servo indices
// are command channels 1..6.
int peak_stall_demand(const ArmModel& m, const std::vector<MotionInterval>& plan);

}  // namespace armforge
