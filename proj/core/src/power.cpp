#include "armforge/power.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

#include <fmt/format.h>

namespace armforge {

BudgetReport stall_budget(const ArmModel& m) {
  BudgetReport r;
  for (const auto& s : m.servos) {
    r.total_stall += s.stall_current;
    r.worst_single_servo = std::max(r.worst_single_servo, s.stall_current);
    r.logic_total += s.comm_current;
  }
  r.logic_total += m.sensor.supply_current + m.sensor.comm_current;
  r.servo_supply_limit = m.supply.servo_supply.max_current;
  r.logic_limit = m.supply.logic_supply.max_current;
  r.simultaneous_feasible = r.total_stall <= r.servo_supply_limit;
  r.logic_feasible = r.logic_total <= r.logic_limit;
  return r;
}

std::string MotionViolation::describe() const {
  return fmt::format("servo {} [{}, {}) overlaps servo {} [{}, {})", first.servo,
                     first.start, first.end, second.servo, second.start,
                     second.end);
}

namespace {

bool canonical_less(const MotionInterval& a, const MotionInterval& b) {
  return std::tie(a.start, a.servo, a.end) < std::tie(b.start, b.servo, b.end);
}

}  // namespace

std::vector<MotionViolation> validate_motion_plan(std::vector<MotionInterval> plan) {
  for (const auto& iv : plan) {
    if (!(std::isfinite(iv.start) && std::isfinite(iv.end) && iv.start < iv.end)) {
      throw std::invalid_argument(fmt::format(
          "malformed interval for servo {}: [{}, {})", iv.servo, iv.start, iv.end));
    }
  }
  std::sort(plan.begin(), plan.end(), canonical_less);

  std::vector<MotionViolation> out;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    for (std::size_t j = i + 1; j < plan.size() && plan[j].start < plan[i].end; ++j) {
      out.push_back({plan[i], plan[j]});
    }
  }
  return out;
}

int peak_stall_demand(const ArmModel& m, const std::vector<MotionInterval>& plan) {
  // Sweep: ends sort before starts at the same instant (half-open intervals).
  std::vector<std::tuple<double, int, int>> events;
  for (const auto& iv : plan) {
    int ma = 0;
    for (const auto& s : m.servos) {
      if (s.channel == iv.servo) ma = s.stall_current;
    }
    events.emplace_back(iv.start, 1, ma);
    events.emplace_back(iv.end, 0, -ma);
  }
  std::sort(events.begin(), events.end());
  int current = 0;
  int peak = 0;
  for (const auto& [t, kind, delta] : events) {
    current += delta;
    peak = std::max(peak, current);
  }
  return peak;
}

}  // namespace armforge
