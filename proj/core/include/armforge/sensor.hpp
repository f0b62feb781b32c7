#pragma once

#include <cstdint>
#include <string_view>

#include "armforge/model.hpp"

namespace armforge {

// IR ranger, modelled as V = K / (d + d0).

struct SensorReading {
  double distance = 0.0;  // cm
  double voltage = 0.0;   // V
  bool in_valid_range = false;

  bool operator==(const SensorReading&) const = default;
};

enum class ObjectClass { kEmpty, kShort, kTall };
std::string_view to_string(ObjectClass c);

// Throws std::invalid_argument for d <= 0.
double distance_to_voltage(const SensorModelParams& p, double distance);
// Throws std::invalid_argument for v <= 0.
double voltage_to_distance(const SensorModelParams& p, double voltage);

bool in_valid_range(const SensorModelParams& p, double distance);

// Reading reconstructed from a raw voltage; range flag set from the
// recovered distance.
SensorReading reading_from_voltage(const SensorModelParams& p, double voltage);

// d >= empty_area_distance -> Empty; [tall_threshold, empty) -> Short;
// below tall_threshold -> Tall (closer surface = taller object).
ObjectClass classify_object(const SensorModelParams& p, double distance);

// Adds N(0, noise_sigma) from a generator seeded with `seed`.
SensorReading measure(const SensorModelParams& p, double true_distance,
                      std::uint64_t seed);

}  // namespace armforge
