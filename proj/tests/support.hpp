#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "armforge/kinematics.hpp"
#include "armforge/model.hpp"

namespace test {

inline std::filesystem::path data_path(const std::string& rel) {
  return std::filesystem::path(ARMFORGE_TEST_DATA) / rel;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Uniform joint state inside the model's limits.
inline armforge::JointState random_joints(const armforge::ArmModel& m, std::mt19937_64& rng) {
  armforge::JointState q;
  for (std::size_t j = 0; j < armforge::kNumJoints; ++j) {
    std::uniform_real_distribution<double> u(m.joint_limits[j][0], m.joint_limits[j][1]);
    q.theta[j] = u(rng);
  }
  return q;
}

}  // namespace test
