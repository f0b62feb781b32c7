#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "armforge/model.hpp"

namespace armforge {

// Static holding torques with the arm horizontal and fully extended.
//
// Index k (0-based) is the k-th servo counted from the grip: k = 0 is the
// joint nearest the load, k = 4 the shoulder. Torques are in kg*cm; weights
// multiply lever arms directly (gram-force), so no g factor appears.
struct TorqueReport {
  double load = 0.0;                 // A1, gf
  std::array<double, 5> torques{};   // required
  std::array<double, 5> rated{};     // servos[k + 1].rated_torque
  std::array<double, 5> margins{};   // rated - required
  bool feasible = false;             // every margin >= 0
};

using TorqueIntercepts = std::array<double, 5>;

// Throws std::invalid_argument for a negative load.
TorqueReport joint_torques(const ArmModel& m, double load);

// Same as joint_torques but with the unloaded torques replaced by `intercepts`
// (the load-dependent part is unchanged).
TorqueReport joint_torques_with_intercepts(const ArmModel& m, double load,
                                           const TorqueIntercepts& intercepts);

// Required-torque increase per 100 gf of load for servo `index` (0..4), kg*cm.
// Throws std::out_of_range.
double torque_load_increment(const ArmModel& m, std::size_t index);

struct PayloadResult {
  double load = 0.0;  // gf, largest integer load that every servo can hold
  std::optional<std::size_t> binding;  // servo index that fails first
};

// Bisection over whole grams (every torque is affine in load, so the
// feasible set is an interval [0, L*]).
PayloadResult max_payload(const ArmModel& m,
                          const std::optional<TorqueIntercepts>& zero_load_overrides = {});

// Published reference torques (kg*cm) for loads 0, 100 and 300 gf.
struct ReferenceTorques {
  double load;
  std::array<double, 5> torques;
};
const std::array<ReferenceTorques, 3>& reference_torque_tables();

// Unloaded intercepts as published; differ from the equations for k = 3, 4.
const TorqueIntercepts& published_zero_load_torques();

struct InterceptCheck {
  std::size_t index;
  double computed;     // joint_torques(m, 0).torques[index]
  double published;
  double difference;   // published - computed
  bool discrepant;     // |difference| > 0.01 kg*cm
};
std::vector<InterceptCheck> intercept_discrepancies(const ArmModel& m);

}  // namespace armforge
