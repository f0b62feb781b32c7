// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "../tools/cli.hpp"
#include "armforge/kinematics.hpp"
#include "armforge/power.hpp"
#include "armforge/scenario.hpp"
#include "armforge/sensor.hpp"
#include "armforge/sim.hpp"
#include "armforge/statics.hpp"
#include "armforge/workspace.hpp"

using namespace armforge;

namespace {

constexpr double kTorqueTol = 0.01;        // kg*cm
constexpr double kPayloadTarget = 298.0;   // gf
constexpr double kPayloadTol = 5.0;        // gf
constexpr int kFkSamples = 10000;
constexpr double kFkTol = 1e-9;            // cm, and rigidity
constexpr int kIkSamples = 1000;
constexpr double kIkPosTol = 1e-6;         // cm
constexpr double kIkPsiTol = 1e-6;         // deg
constexpr double kIkBudget = 5.0;          // s
constexpr int kWorkspaceSteps = 25;
constexpr double kReach = 41.78;           // cm
constexpr double kReachTol = 0.01;         // cm
constexpr double kNominal = 40.0;          // cm
constexpr double kNominalFraction = 0.10;
constexpr double kSensorRelTol = 1e-12;
constexpr double kProgramBudget = 10.0;    // s

struct Verdict {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

JointState random_joints(const ArmModel& m, std::mt19937_64& rng) {
  JointState q;
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    std::uniform_real_distribution<double> u(m.joint_limits[j][0], m.joint_limits[j][1]);
    q.theta[j] = u(rng);
  }
  return q;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict torque_table(const ArmModel& m) {
  Verdict v;
  for (const auto& ref : reference_torque_tables()) {
    const TorqueReport r = joint_torques(m, ref.load);
    for (std::size_t k = 0; k < 3; ++k) {
      const double d = r.torques[k] - ref.torques[k];
      v.require(std::abs(d) <= kTorqueTol,
                fmt::format("T{} at {} gf off by {:+.4f}", k + 1, ref.load, d));
    }
  }
  v.detail = v.pass ? "T1..T3 at 0/100/300 gf within 0.01 kg*cm" : v.detail;
  return v;
}

Verdict torque_increments(const ArmModel& m) {
  Verdict v;
  const auto& t = reference_torque_tables();
  for (std::size_t k = 0; k < 5; ++k) {
    const double printed = t[1].torques[k] - t[0].torques[k];
    const double d = torque_load_increment(m, k) - printed;
    v.require(std::abs(d) <= kTorqueTol, fmt::format("T{} increment off by {:+.4f}", k + 1, d));
  }
  const auto checks = intercept_discrepancies(m);
  v.require(checks[4].discrepant, "T5 intercept not flagged");
  v.require(std::abs(checks[4].computed - 8.888) <= kTorqueTol,
            fmt::format("T5 intercept computes to {:.4f}", checks[4].computed));
  if (v.pass) {
    v.detail = fmt::format("all five within 0.01; T5 intercept {:.3f} vs {:.2f} flagged",
                           checks[4].computed, checks[4].published);
  }
  return v;
}

double scan_payload(const ArmModel& m, const TorqueIntercepts& c) {
  double load = 0;
  while (joint_torques_with_intercepts(m, load + 1, c).feasible) load += 1;
  return load;
}

Verdict payload(const ArmModel& m) {
  Verdict v;
  const auto& c = published_zero_load_torques();
  const PayloadResult r = max_payload(m, c);
  const double scan = scan_payload(m, c);
  v.require(std::abs(r.load - kPayloadTarget) <= kPayloadTol,
            fmt::format("payload {} gf", r.load));
  v.require(r.load == scan, fmt::format("bisection {} vs scan {}", r.load, scan));
  if (v.pass) v.detail = fmt::format("{} gf with published intercepts, scan agrees", r.load);
  return v;
}

Verdict dof() {
  Verdict v;
  const int n = degrees_of_freedom(6, 5, 0);
  v.require(n == 5, fmt::format("got {}", n));
  if (v.pass) v.detail = "mobility 5";
  return v;
}

Verdict fk(const ArmModel& m) {
  Verdict v;
  std::mt19937_64 rng(1);
  double worst = 0;
  int not_rigid = 0;
  for (int i = 0; i < kFkSamples; ++i) {
    const JointState q = random_joints(m, rng);
    const HomogeneousTransform T = forward_kinematics(m, q);
    worst = std::max(worst, (T.translation - closed_form_position(m, q)).cwiseAbs().maxCoeff());
    for (const auto& F : link_frames(m, q)) not_rigid += !F.is_rigid(kFkTol);
  }
  v.require(worst <= kFkTol, fmt::format("max deviation {:.3g} cm", worst));
  v.require(not_rigid == 0, fmt::format("{} non-rigid frames", not_rigid));
  if (v.pass) v.detail = fmt::format("{} states, max deviation {:.2g} cm", kFkSamples, worst);
  return v;
}

Verdict ik(const ArmModel& m) {
  Verdict v;
  std::mt19937_64 rng(2);
  const auto t0 = std::chrono::steady_clock::now();
  double worst_pos = 0, worst_psi = 0;
  int unsolved = 0, both = 0;
  for (int i = 0; i < kIkSamples; ++i) {
    const PoseTarget t = achieved_pose(m, random_joints(m, rng));
    int solved = 0;
    for (ElbowBranch b : {ElbowBranch::kUp, ElbowBranch::kDown}) {
      const IkResult r = inverse_kinematics(m, t, b);
      if (!std::holds_alternative<JointState>(r)) continue;
      ++solved;
      const PoseTarget got = achieved_pose(m, std::get<JointState>(r));
      worst_pos = std::max(worst_pos, (got.position - t.position).norm());
      worst_psi = std::max(worst_psi, std::abs(wrap_deg(got.psi - t.psi)));
    }
    unsolved += solved == 0;
    both += solved == 2;
  }
  const double elapsed = seconds_since(t0);

  v.require(unsolved == 0, fmt::format("{} targets unsolved", unsolved));
  v.require(worst_pos < kIkPosTol, fmt::format("position error {:.3g} cm", worst_pos));
  v.require(worst_psi < kIkPsiTol, fmt::format("psi error {:.3g} deg", worst_psi));
  v.require(elapsed < kIkBudget, fmt::format("{:.2f} s", elapsed));

  const IkResult far = inverse_kinematics(m, {{100, 0, 0}, 0, 90}, ElbowBranch::kUp);
  v.require(std::holds_alternative<IkFailure>(far) &&
                std::get<IkFailure>(far) == IkFailure::kUnreachable,
            "far target not unreachable");
  const IkResult axis = inverse_kinematics(m, {{0, 0, 20}, -90, 90}, ElbowBranch::kUp);
  v.require(std::holds_alternative<IkFailure>(axis) &&
                std::get<IkFailure>(axis) == IkFailure::kSingular,
            "on-axis target not singular");
  if (v.pass) {
    v.detail = fmt::format("{} targets, {} with both branches, pos {:.2g} cm, psi {:.2g} deg, {:.2f} s",
                           kIkSamples, both, worst_pos, worst_psi, elapsed);
  }
  return v;
}

Verdict workspace(const ArmModel& m) {
  Verdict v;
  const PointCloud pc = sample_workspace(m, kWorkspaceSteps);
  const WorkspaceExtent e = workspace_extent(pc);
  const Eigen::Vector3d shoulder(0, 0, m.base_height());
  int outside = 0;
  for (const auto& p : pc.points) outside += (p - shoulder).norm() > kReach + 1e-9;
  v.require(std::abs(e.max_reach - kReach) <= kReachTol,
            fmt::format("max reach {:.4f} cm", e.max_reach));
  v.require(outside == 0, fmt::format("{} points outside the reach sphere", outside));
  v.require(std::abs(e.max_reach - kNominal) <= kNominalFraction * kNominal,
            "max reach not within 10% of nominal");

  std::ostringstream out, err;
  cli::run({"workspace", "--steps", "5"}, out, err);
  const std::string text = out.str();
  v.require(text.find("note:") != std::string::npos && text.find("diameter") != std::string::npos &&
                text.find("radius") != std::string::npos,
            "radius/diameter note missing from output");
  if (v.pass) {
    v.detail = fmt::format("steps {}, max reach {:.4f} cm, {:.1f}% from nominal, diameter {:.2f} cm",
                           kWorkspaceSteps, e.max_reach,
                           100 * std::abs(e.max_reach - kNominal) / kNominal, e.diameter);
  }
  return v;
}

struct ProgramCase {
  const char* name;
  sim::Program program;
  std::vector<double> heights;
  const char* expect_location;  // nullptr: nothing is picked
};

const std::vector<ProgramCase>& program_cases() {
  static const std::vector<ProgramCase> cases{
      {"op1_empty", sim::Program::kOp1, {}, nullptr},
      {"op1_object", sim::Program::kOp1, {2.0}, "LeftBucket"},
      {"op2_short", sim::Program::kOp2, {2.0}, "LeftBucket"},
      {"op2_tall", sim::Program::kOp2, {5.0}, "RightBucket"},
      {"op3_short", sim::Program::kOp3, {2.0}, "AreaShort"},
      {"op3_tall", sim::Program::kOp3, {5.0}, "AreaTall"},
  };
  return cases;
}

struct CaseRun {
  sim::ProgramOutcome outcome;
  sim::SimState state;
  bool conserved = true;
};

CaseRun run_case(const ArmModel& m, const ProgramCase& c) {
  sim::Simulator s(m);
  for (double h : c.heights) s.add_object(h, sim::Location::kSortingArea);
  CaseRun out;
  const std::size_t n = s.state().scene.size();
  if (!s.submit(sim::RunProgram{c.program}).accepted) return out;
  while (s.program_running() && s.state().clock < 600) {
    s.step(0.02);
    int gripped = 0;
    for (const auto& o : s.state().scene) gripped += o.location == sim::Location::kGripped;
    out.conserved = out.conserved && s.state().scene.size() == n && gripped <= 1;
  }
  out.outcome.final_phase = s.state().program ? s.state().program->phase : sim::Phase::kFailed;
  out.outcome.completed = out.outcome.final_phase == sim::Phase::kDone;
  out.state = s.state();
  return out;
}

std::string log_text(const std::vector<sim::Event>& events) {
  std::ostringstream ss;
  sim::write_event_log(ss, events);
  return ss.str();
}

Verdict power(const ArmModel& m) {
  Verdict v;
  const BudgetReport b = stall_budget(m);
  v.require(b.total_stall == 2265 && b.servo_supply_limit == 2250 && !b.simultaneous_feasible,
            fmt::format("servo rail {} / {} mA", b.total_stall, b.servo_supply_limit));
  v.require(b.logic_total == 310 && b.logic_limit == 1500 && b.logic_feasible,
            fmt::format("logic rail {} / {} mA", b.logic_total, b.logic_limit));
  int plans = 0;
  for (const auto& c : program_cases()) {
    const CaseRun r = run_case(m, c);
    const auto violations = validate_motion_plan(r.state.motion_log);
    v.require(violations.empty(),
              fmt::format("{}: {}", c.name, violations.empty() ? "" : violations[0].describe()));
    ++plans;
  }
  if (v.pass) {
    v.detail = fmt::format("{} / {} mA infeasible, {} / {} mA feasible, {} sim plans valid",
                           b.total_stall, b.servo_supply_limit, b.logic_total, b.logic_limit,
                           plans);
  }
  return v;
}

Verdict sensor(const ArmModel& m) {
  Verdict v;
  const SensorModelParams& p = m.sensor;
  double worst = 0;
  for (double d = 0.05; d < 500; d *= 1.01) {
    worst = std::max(worst, std::abs(voltage_to_distance(p, distance_to_voltage(p, d)) - d) / d);
  }
  v.require(worst <= kSensorRelTol, fmt::format("round trip {:.3g} relative", worst));
  v.require(classify_object(p, 13.8) == ObjectClass::kEmpty, "13.8 not Empty");
  v.require(classify_object(p, std::nextafter(13.8, 0.0)) == ObjectClass::kShort,
            "below 13.8 not Short");
  v.require(classify_object(p, 10.0) == ObjectClass::kShort, "10.0 not Short");
  v.require(classify_object(p, std::nextafter(10.0, 0.0)) == ObjectClass::kTall,
            "below 10.0 not Tall");
  int prev = static_cast<int>(classify_object(p, 1.0));
  bool monotone = true;
  for (int i = 11; i <= 200; ++i) {
    const int c = static_cast<int>(classify_object(p, i / 10.0));
    monotone = monotone && c <= prev;
    prev = c;
  }
  v.require(monotone, "classifier not monotone over 1..20 cm");
  if (v.pass) v.detail = fmt::format("round trip {:.2g}, boundaries 10.0/13.8, monotone", worst);
  return v;
}

Verdict programs(const ArmModel& m, const std::filesystem::path& golden_dir) {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& c : program_cases()) {
    const CaseRun a = run_case(m, c), b = run_case(m, c);
    const std::string log = log_text(a.state.event_log);
    v.require(a.outcome.completed, fmt::format("{} did not finish", c.name));
    v.require(a.conserved, fmt::format("{} lost an object", c.name));
    v.require(log == log_text(b.state.event_log), fmt::format("{} not repeatable", c.name));
    v.require(log == read_file(golden_dir / (std::string(c.name) + ".jsonl")),
              fmt::format("{} differs from golden log", c.name));
    bool picked = false;
    for (const auto& e : a.state.event_log) picked = picked || e.kind == "pick";
    if (c.expect_location) {
      v.require(picked, fmt::format("{} never picked", c.name));
      v.require(a.state.scene.size() == 1 &&
                    sim::to_string(a.state.scene[0].location) == c.expect_location,
                fmt::format("{} placed elsewhere", c.name));
    } else {
      v.require(!picked, fmt::format("{} picked from an empty area", c.name));
    }
  }
  const double elapsed = seconds_since(t0);
  v.require(elapsed < kProgramBudget, fmt::format("{:.2f} s", elapsed));
  if (v.pass) v.detail = fmt::format("6 golden logs, repeatable, conserved, {:.2f} s", elapsed);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path golden =
      argc > 1 ? std::filesystem::path(argv[1]) : std::filesystem::path(ARMFORGE_TEST_DATA) / "golden";
  const ArmModel m = default_arm_model();

  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"torque-table", [&] { return torque_table(m); }},
      {"torque-increments", [&] { return torque_increments(m); }},
      {"max-payload", [&] { return payload(m); }},
      {"dof", [] { return dof(); }},
      {"fk-consistency", [&] { return fk(m); }},
      {"ik-round-trip", [&] { return ik(m); }},
      {"workspace", [&] { return workspace(m); }},
      {"power", [&] { return power(m); }},
      {"sensor", [&] { return sensor(m); }},
      {"programs", [&] { return programs(m, golden); }},
  };

  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = fmt::format("threw: {}", e.what());
    }
    failed += !v.pass;
    std::cout << fmt::format("{} {}: {}\n", v.pass ? "PASS" : "FAIL", name, v.detail);
  }
  std::cout << fmt::format("{}/{} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
