#include "armforge/statics.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace armforge {

namespace {

constexpr double kGfToKg = 1e-3;

// Torque equations for the five servos, gf*cm, in grip-outward order.
// Each equation sums lever * mass over the links beyond the servo. The
// elbow-side equation (k = 3) carries a (L4 + L5) lever on A4 as published.
std::array<double, 5> torque_terms(const ArmModel& m, double a1) {
  const auto& c = m.mass_chain;
  if (c.size() != kNumJoints) {
    throw std::invalid_argument("mass_chain must have 5 links");
  }
  const double L1 = c[0].length, L2 = c[1].length, L3 = c[2].length,
               L4 = c[3].length, L5 = c[4].length;
  const double W1 = c[0].weight, W2 = c[1].weight, W3 = c[2].weight,
               W4 = c[3].weight, W5 = c[4].weight;
  const double A2 = c[0].actuator, A3 = c[1].actuator, A4 = c[2].actuator,
               A5 = c[3].actuator;

  const double t2 = L1 * a1 + 0.5 * L1 * W1;
  const double t3 = (L1 + L2) * a1 + (0.5 * L1 + L2) * W1 + L2 * A2 +
                    0.5 * L2 * W2;
  const double t4 = (L1 + L2 + L3) * a1 + (0.5 * L1 + L2 + L3) * W1 +
                    (L2 + L3) * A2 + (0.5 * L2 + L3) * W2 + L3 * A3 +
                    0.5 * L3 * W3;
  const double t5 = (L1 + L2 + L3 + L4) * a1 + (0.5 * L1 + L2 + L3 + L4) * W1 +
                    (L2 + L3 + L4) * A2 + (0.5 * L2 + L3 + L4) * W2 +
                    (L3 + L4) * A3 + (0.5 * L3 + L4) * W3 + (L4 + L5) * A4 +
                    (0.5 * L4 + L5) * W4;
  const double t6 = (L1 + L2 + L3 + L4 + L5) * a1 +
                    (0.5 * L1 + L2 + L3 + L4 + L5) * W1 +
                    (L2 + L3 + L4 + L5) * A2 + (0.5 * L2 + L3 + L4 + L5) * W2 +
                    (L3 + L4 + L5) * A3 + (0.5 * L3 + L4 + L5) * W3 +
                    (L4 + L5) * A4 + (0.5 * L4 + L5) * W4 + L5 * A5 +
                    0.5 * L5 * W5;
  return {t2, t3, t4, t5, t6};
}

TorqueReport finish(const ArmModel& m, double load,
                    const std::array<double, 5>& torques) {
  TorqueReport r;
  r.load = load;
  r.torques = torques;
  r.feasible = true;
  for (std::size_t k = 0; k < 5; ++k) {
    r.rated[k] = k + 1 < m.servos.size() ? m.servos[k + 1].rated_torque : 0.0;
    r.margins[k] = r.rated[k] - r.torques[k];
    if (!(r.margins[k] >= 0.0)) r.feasible = false;
  }
  return r;
}

void check_load(double load) {
  if (!(load >= 0.0)) {
    throw std::invalid_argument(fmt::format("load must be >= 0 gf, got {}", load));
  }
}

}  // namespace

TorqueReport joint_torques(const ArmModel& m, double load) {
  check_load(load);
  auto t = torque_terms(m, load);
  for (auto& v : t) v *= kGfToKg;
  return finish(m, load, t);
}

TorqueReport joint_torques_with_intercepts(const ArmModel& m, double load,
                                           const TorqueIntercepts& intercepts) {
  check_load(load);
  std::array<double, 5> t{};
  for (std::size_t k = 0; k < 5; ++k) {
    t[k] = intercepts[k] + load / 100.0 * torque_load_increment(m, k);
  }
  return finish(m, load, t);
}

double torque_load_increment(const ArmModel& m, std::size_t index) {
  if (index >= 5) {
    throw std::out_of_range(fmt::format("torque index {} outside 0..4", index));
  }
  // The load enters every equation as (L1 + ... + L_{k+1}) * A1.
  double lever = 0.0;
  for (std::size_t i = 0; i <= index; ++i) lever += m.mass_chain.at(i).length;
  return lever * 100.0 * kGfToKg;
}

PayloadResult max_payload(const ArmModel& m,
                          const std::optional<TorqueIntercepts>& overrides) {
  const auto report = [&](double load) {
    return overrides ? joint_torques_with_intercepts(m, load, *overrides)
                     : joint_torques(m, load);
  };

  PayloadResult result;
  const auto binding_at = [&](double load) -> std::optional<std::size_t> {
    const auto r = report(load);
    for (std::size_t k = 0; k < 5; ++k) {
      if (!(r.margins[k] >= 0.0)) return k;
    }
    return std::nullopt;
  };

  if (auto b = binding_at(0.0)) {
    result.binding = b;
    return result;
  }

  // Grow an infeasible upper bound, then bisect on whole grams.
  long long lo = 0;
  long long hi = 1;
  while (!binding_at(static_cast<double>(hi))) {
    lo = hi;
    hi *= 2;
    if (hi > (1LL << 40)) return {static_cast<double>(lo), std::nullopt};
  }
  while (hi - lo > 1) {
    const long long mid = lo + (hi - lo) / 2;
    if (binding_at(static_cast<double>(mid))) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  result.load = static_cast<double>(lo);
  result.binding = binding_at(static_cast<double>(hi));
  return result;
}

const std::array<ReferenceTorques, 3>& reference_torque_tables() {
  static const std::array<ReferenceTorques, 3> tables{{
      {0.0, {0.021, 0.207, 0.511, 5.122, 12.25}},
      {100.0, {0.3, 0.767, 1.356, 7.84, 16.43}},
      {300.0, {0.86, 1.887, 3.04, 13.27, 24.79}},
  }};
  return tables;
}

const TorqueIntercepts& published_zero_load_torques() {
  return reference_torque_tables()[0].torques;
}

std::vector<InterceptCheck> intercept_discrepancies(const ArmModel& m) {
  const auto computed = joint_torques(m, 0.0);
  const auto& published = published_zero_load_torques();
  std::vector<InterceptCheck> out;
  for (std::size_t k = 0; k < 5; ++k) {
    const double diff = published[k] - computed.torques[k];
    out.push_back({k, computed.torques[k], published[k], diff,
                   std::abs(diff) > 0.01});
  }
  return out;
}

}  // namespace armforge
