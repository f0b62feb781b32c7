#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "armforge/kinematics.hpp"
#include "armforge/model.hpp"
#include "armforge/power.hpp"
#include "armforge/sensor.hpp"

namespace armforge::sim {

enum class Location {
  kSortingArea,
  kLeftBucket,
  kRightBucket,
  kAreaShort,
  kAreaTall,
  kGripped,
};
std::string_view to_string(Location l);
std::optional<Location> location_from_string(std::string_view s);

struct SceneObject {
  std::string id;
  double height = 0.0;  // cm
  Location location = Location::kSortingArea;

  bool operator==(const SceneObject&) const = default;
};

enum class Program { kOp1, kOp2, kOp3 };
std::string_view to_string(Program p);
std::optional<Program> program_from_string(std::string_view s);

enum class Phase {
  kMoveToStart,
  kMoveToMeasure,
  kMeasure,
  kMoveAbovePick,
  kDescend,
  kCloseGrip,
  kLift,
  kMoveToDestination,
  kOpenGrip,
  kReturnToStart,
  kDone,
  kFailed,
};
std::string_view to_string(Phase p);

struct ProgramRun {
  Program program = Program::kOp1;
  Phase phase = Phase::kMoveToStart;
  double started_at = 0.0;
  std::optional<ObjectClass> classification;
  std::optional<Location> destination;
  int samples = 0;
  double sample_sum = 0.0;

  bool running() const { return phase != Phase::kDone && phase != Phase::kFailed; }
  bool operator==(const ProgramRun&) const = default;
};

struct Event {
  double t = 0.0;
  std::string kind;
  nlohmann::json detail;

  bool operator==(const Event&) const = default;
};

struct Waypoint {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // cm, tip
  double psi = -90.0;                                  // deg

  bool operator==(const Waypoint&) const = default;
};

// Scene geometry. The work plane is z = 0; every pose is a Cartesian tip
// target solved through IK.
struct SimConfig {
  Waypoint start{{0.0, 15.0, 25.0}, 0.0};
  Eigen::Vector2d sorting_area{0.0, 20.0};
  // Sensor-to-area distance at the measuring pose (empty reading).
  double sensor_mount_height = 13.8;
  double approach_clearance = 5.0;  // cm above the object top
  std::map<Location, Waypoint> drop_points{
      {Location::kLeftBucket, {{-20.0, 10.0, 12.0}, -90.0}},
      {Location::kRightBucket, {{20.0, 10.0, 12.0}, -90.0}},
      {Location::kAreaShort, {{-12.0, 22.0, 4.0}, -90.0}},
      {Location::kAreaTall, {{12.0, 22.0, 6.0}, -90.0}},
  };
  Location op1_destination = Location::kLeftBucket;
  ElbowBranch branch = ElbowBranch::kUp;
  double measuring_tolerance = 1.0;  // deg per joint
  double grasp_tolerance = 1.0;      // cm
  int measure_samples = 5;
  std::uint64_t seed = 0;
  double initial_grip_opening = 1.0;

  bool operator==(const SimConfig&) const = default;
};

class SimConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Commands. Servo channels: 1..5 joints theta1..theta5, 6 gripper.
struct SetJointTargets {
  JointState targets;
};
struct Jog {
  int servo = 1;
  double delta = 0.0;  // deg (for the gripper: servo degrees over its range)
};
struct Grip {
  bool open = true;
};
struct RunProgram {
  Program program = Program::kOp1;
};
struct PlaceObject {
  double height = 0.0;
};
struct Reset {};

using Command =
    std::variant<SetJointTargets, Jog, Grip, RunProgram, PlaceObject, Reset>;

nlohmann::json command_to_json(const Command& c);
// Throws std::invalid_argument with a JSON-pointer-style field path.
Command command_from_json(const nlohmann::json& j);

struct CommandResult {
  bool accepted = false;
  std::string reason;
};

struct PendingMove {
  int servo = 1;
  double target = 0.0;  // deg, or opening fraction for the gripper

  bool operator==(const PendingMove&) const = default;
};

struct SimState {
  double clock = 0.0;
  std::uint64_t ticks = 0;
  JointState joints;
  JointState joint_targets;  // where every servo ends once the queue drains
  std::optional<int> active_servo;
  double active_target = 0.0;
  double active_since = 0.0;
  std::deque<PendingMove> queue;
  std::vector<SceneObject> scene;
  double sensor_mount_height = 13.8;
  std::optional<ProgramRun> program;
  std::vector<Event> event_log;
  std::vector<MotionInterval> motion_log;
  int next_object_id = 1;

  bool operator==(const SimState&) const = default;
};

// Single-owner stepped simulator. Exactly one servo moves at a time; all
// mutation goes through submit() and step().
class Simulator {
 public:
  // Throws SimConfigError if the start or measuring pose is unreachable.
  explicit Simulator(ArmModel model, SimConfig config = {});

  const SimState& state() const { return state_; }
  const ArmModel& model() const { return model_; }
  const SimConfig& config() const { return config_; }
  const JointState& start_pose() const { return start_pose_; }
  const JointState& measuring_pose() const { return measuring_pose_; }

  // Throws std::invalid_argument if dt <= 0.
  void step(double dt);
  CommandResult submit(const Command& c);

  // Seeded from the tick count, so repeated reads within a tick agree.
  SensorReading read_sensor() const;
  bool at_measuring_pose() const;
  bool motion_idle() const { return !state_.active_servo && state_.queue.empty(); }
  bool program_running() const { return state_.program && state_.program->running(); }

  // Places an object directly, bypassing the command path (scenario setup).
  void add_object(double height, Location where, std::string id = {});

 private:
  void log(std::string kind, nlohmann::json detail);
  CommandResult reject(const Command& c, std::string reason);
  void queue_pose(const JointState& q);
  void queue_move(int servo, double target);
  void queue_grip(bool open);
  double channel_value(const JointState& q, int servo) const;
  void set_channel(JointState& q, int servo, double value) const;
  double channel_rate(int servo) const;
  void on_motion_done(int servo);
  void advance_program();
  void enter(Phase next);
  void fail_program(const std::string& why);
  std::optional<JointState> solve(const Waypoint& w) const;
  SceneObject* object_at(Location l);
  Location nearest_spot(const Eigen::Vector3d& tip) const;
  Eigen::Vector3d tip_position() const;

  ArmModel model_;
  SimConfig config_;
  JointState start_pose_;
  JointState measuring_pose_;
  // Per-run poses solved when the program starts or after classification.
  std::map<Location, JointState> drop_poses_;
  JointState above_pick_;
  JointState grasp_pose_;
  SimState state_;
};

struct ProgramOutcome {
  bool completed = false;  // reached Done
  Phase final_phase = Phase::kFailed;
};

// Submits the program and steps until it finishes (or a 600 s sim-time cap).
ProgramOutcome run_program_to_completion(Simulator& sim, Program p,
                                         double dt = 0.02);

// JSON-lines, one {"t","kind","detail"} object per line.
std::string event_to_json_line(const Event& e);
void write_event_log(std::ostream& out, const std::vector<Event>& events);

}  // namespace armforge::sim
