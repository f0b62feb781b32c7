#include "armforge/sensor.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

namespace armforge {

std::string_view to_string(ObjectClass c) {
  switch (c) {
    case ObjectClass::kEmpty: return "Empty";
    case ObjectClass::kShort: return "Short";
    case ObjectClass::kTall: return "Tall";
  }
  return "Unknown";
}

double distance_to_voltage(const SensorModelParams& p, double distance) {
  if (!(distance > 0.0)) {
    throw std::invalid_argument(
        fmt::format("distance must be > 0 cm, got {}", distance));
  }
  return p.K / (distance + p.d0);
}

double voltage_to_distance(const SensorModelParams& p, double voltage) {
  if (!(voltage > 0.0)) {
    throw std::invalid_argument(
        fmt::format("voltage must be > 0 V, got {}", voltage));
  }
  return p.K / voltage - p.d0;
}

bool in_valid_range(const SensorModelParams& p, double distance) {
  return distance >= p.valid_range[0] && distance <= p.valid_range[1];
}

SensorReading reading_from_voltage(const SensorModelParams& p, double voltage) {
  SensorReading r;
  r.voltage = voltage;
  r.distance = voltage_to_distance(p, voltage);
  r.in_valid_range = in_valid_range(p, r.distance);
  return r;
}

ObjectClass classify_object(const SensorModelParams& p, double distance) {
  if (distance >= p.empty_area_distance) return ObjectClass::kEmpty;
  if (distance >= p.tall_threshold) return ObjectClass::kShort;
  return ObjectClass::kTall;
}

SensorReading measure(const SensorModelParams& p, double true_distance,
                      std::uint64_t seed) {
  if (!(true_distance > 0.0)) {
    throw std::invalid_argument(
        fmt::format("distance must be > 0 cm, got {}", true_distance));
  }
  double d = true_distance;
  if (p.noise_sigma > 0.0) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> noise(0.0, p.noise_sigma);
    d += noise(gen);
  }
  // Noise cannot push the surface behind the sensor window.
  d = std::max(d, 1e-6);

  SensorReading r;
  r.distance = d;
  r.voltage = distance_to_voltage(p, d);
  r.in_valid_range = in_valid_range(p, d);
  return r;
}

}  // namespace armforge
