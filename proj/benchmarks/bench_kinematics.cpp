#include <random>

#include <benchmark/benchmark.h>

#include "armforge/kinematics.hpp"
#include "armforge/statics.hpp"
#include "armforge/workspace.hpp"

using namespace armforge;

namespace {

std::vector<JointState> poses(const ArmModel& m, std::size_t n) {
  std::mt19937_64 rng(7);
  std::vector<JointState> out(n);
  for (auto& q : out) {
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      std::uniform_real_distribution<double> u(m.joint_limits[j][0], m.joint_limits[j][1]);
      q.theta[j] = u(rng);
    }
  }
  return out;
}

void BM_ForwardKinematics(benchmark::State& state) {
  const ArmModel m = default_arm_model();
  const auto qs = poses(m, 1024);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(forward_kinematics(m, qs[i++ & 1023]));
}
BENCHMARK(BM_ForwardKinematics);

void BM_ClosedFormPosition(benchmark::State& state) {
  const ArmModel m = default_arm_model();
  const auto qs = poses(m, 1024);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(closed_form_position(m, qs[i++ & 1023]));
}
BENCHMARK(BM_ClosedFormPosition);

void BM_InverseKinematics(benchmark::State& state) {
  const ArmModel m = default_arm_model();
  std::vector<PoseTarget> targets;
  for (const auto& q : poses(m, 1024)) targets.push_back(achieved_pose(m, q));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(inverse_kinematics(m, targets[i++ & 1023], ElbowBranch::kUp));
  }
}
BENCHMARK(BM_InverseKinematics);

void BM_WorkspaceSample(benchmark::State& state) {
  const ArmModel m = default_arm_model();
  const int steps = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sample_workspace(m, steps));
}
BENCHMARK(BM_WorkspaceSample)->Arg(9)->Arg(25)->Unit(benchmark::kMillisecond);

void BM_MaxPayload(benchmark::State& state) {
  const ArmModel m = default_arm_model();
  for (auto _ : state) benchmark::DoNotOptimize(max_payload(m));
}
BENCHMARK(BM_MaxPayload);

}  // namespace
