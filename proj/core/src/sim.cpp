#include "armforge/sim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

namespace armforge::sim {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<Location, std::string_view>, 6> kLocationNames{{
    {Location::kSortingArea, "SortingArea"},
    {Location::kLeftBucket, "LeftBucket"},
    {Location::kRightBucket, "RightBucket"},
    {Location::kAreaShort, "AreaShort"},
    {Location::kAreaTall, "AreaTall"},
    {Location::kGripped, "Gripped"},
}};

constexpr std::array<std::pair<Program, std::string_view>, 3> kProgramNames{{
    {Program::kOp1, "op1"},
    {Program::kOp2, "op2"},
    {Program::kOp3, "op3"},
}};

// Microsecond rounding keeps the JSON rendering of the clock short and stable.
double log_time(double t) { return std::round(t * 1e6) / 1e6; }

}  // namespace

std::string_view to_string(Location l) {
  for (const auto& [k, v] : kLocationNames) {
    if (k == l) return v;
  }
  return "Unknown";
}

std::optional<Location> location_from_string(std::string_view s) {
  for (const auto& [k, v] : kLocationNames) {
    if (v == s) return k;
  }
  return std::nullopt;
}

std::string_view to_string(Program p) {
  for (const auto& [k, v] : kProgramNames) {
    if (k == p) return v;
  }
  return "unknown";
}

std::optional<Program> program_from_string(std::string_view s) {
  for (const auto& [k, v] : kProgramNames) {
    if (v == s) return k;
  }
  return std::nullopt;
}

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::kMoveToStart: return "MoveToStart";
    case Phase::kMoveToMeasure: return "MoveToMeasure";
    case Phase::kMeasure: return "Measure";
    case Phase::kMoveAbovePick: return "MoveAbovePick";
    case Phase::kDescend: return "Descend";
    case Phase::kCloseGrip: return "CloseGrip";
    case Phase::kLift: return "Lift";
    case Phase::kMoveToDestination: return "MoveToDestination";
    case Phase::kOpenGrip: return "OpenGrip";
    case Phase::kReturnToStart: return "ReturnToStart";
    case Phase::kDone: return "Done";
    case Phase::kFailed: return "Failed";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// Command JSON

json command_to_json(const Command& c) {
  return std::visit(
      [](const auto& cmd) -> json {
        using T = std::decay_t<decltype(cmd)>;
        if constexpr (std::is_same_v<T, SetJointTargets>) {
          return {{"type", "set_joint_targets"},
                  {"theta", cmd.targets.theta},
                  {"grip_opening", cmd.targets.grip_opening}};
        } else if constexpr (std::is_same_v<T, Jog>) {
          return {{"type", "jog"}, {"servo", cmd.servo}, {"delta", cmd.delta}};
        } else if constexpr (std::is_same_v<T, Grip>) {
          return {{"type", "grip"}, {"action", cmd.open ? "open" : "close"}};
        } else if constexpr (std::is_same_v<T, RunProgram>) {
          return {{"type", "run_program"},
                  {"program", std::string(to_string(cmd.program))}};
        } else if constexpr (std::is_same_v<T, PlaceObject>) {
          return {{"type", "place_object"}, {"height", cmd.height}};
        } else {
          return {{"type", "reset"}};
        }
      },
      c);
}

namespace {

const json& field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw std::invalid_argument(fmt::format("/{}: required field missing", key));
  }
  return *it;
}

double number_field(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number()) {
    throw std::invalid_argument(
        fmt::format("/{}: expected number, got {}", key, v.type_name()));
  }
  return v.get<double>();
}

int integer_field(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number_integer()) {
    throw std::invalid_argument(
        fmt::format("/{}: expected integer, got {}", key, v.type_name()));
  }
  return v.get<int>();
}

std::string string_field(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_string()) {
    throw std::invalid_argument(
        fmt::format("/{}: expected string, got {}", key, v.type_name()));
  }
  return v.get<std::string>();
}

}  // namespace

Command command_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("/: expected object");
  const std::string type = string_field(j, "type");
  if (type == "jog") {
    return Jog{integer_field(j, "servo"), number_field(j, "delta")};
  }
  if (type == "grip") {
    const std::string action = string_field(j, "action");
    if (action != "open" && action != "close") {
      throw std::invalid_argument("/action: expected \"open\" or \"close\"");
    }
    return Grip{action == "open"};
  }
  if (type == "run_program") {
    const auto p = program_from_string(string_field(j, "program"));
    if (!p) throw std::invalid_argument("/program: expected op1, op2 or op3");
    return RunProgram{*p};
  }
  if (type == "place_object") {
    return PlaceObject{number_field(j, "height")};
  }
  if (type == "reset") return Reset{};
  if (type == "set_joint_targets") {
    const json& th = field(j, "theta");
    if (!th.is_array() || th.size() != kNumJoints) {
      throw std::invalid_argument("/theta: expected array of 5 numbers");
    }
    SetJointTargets cmd;
    for (std::size_t i = 0; i < kNumJoints; ++i) {
      if (!th[i].is_number()) {
        throw std::invalid_argument(fmt::format("/theta/{}: expected number", i));
      }
      cmd.targets.theta[i] = th[i].get<double>();
    }
    cmd.targets.grip_opening = number_field(j, "grip_opening");
    return cmd;
  }
  throw std::invalid_argument(fmt::format("/type: unknown command '{}'", type));
}

// ---------------------------------------------------------------------------
// Simulator

Simulator::Simulator(ArmModel model, SimConfig config)
    : model_(std::move(model)), config_(std::move(config)) {
  const auto start = solve(config_.start);
  if (!start) {
    throw SimConfigError("start pose is unreachable");
  }
  const Waypoint measure{{config_.sorting_area.x(), config_.sorting_area.y(),
                          config_.sensor_mount_height},
                         -90.0};
  const auto meas = solve(measure);
  if (!meas) {
    throw SimConfigError("measuring pose is unreachable");
  }
  start_pose_ = *start;
  start_pose_.grip_opening = config_.initial_grip_opening;
  measuring_pose_ = *meas;

  state_.joints = start_pose_;
  state_.joint_targets = start_pose_;
  state_.sensor_mount_height = config_.sensor_mount_height;
}

std::optional<JointState> Simulator::solve(const Waypoint& w) const {
  PoseTarget t;
  t.position = w.position;
  t.psi = w.psi;
  t.roll = std::clamp(90.0, model_.joint_limits[4][0], model_.joint_limits[4][1]);
  const auto r = inverse_kinematics(model_, t, config_.branch);
  if (const auto* q = std::get_if<JointState>(&r)) return *q;
  return std::nullopt;
}

void Simulator::log(std::string kind, json detail) {
  state_.event_log.push_back({log_time(state_.clock), std::move(kind), std::move(detail)});
}

CommandResult Simulator::reject(const Command& c, std::string reason) {
  log("reject", {{"command", command_to_json(c)}, {"reason", reason}});
  return {false, std::move(reason)};
}

double Simulator::channel_value(const JointState& q, int servo) const {
  return servo == kGripChannel ? q.grip_opening : q.theta[servo - 1];
}

void Simulator::set_channel(JointState& q, int servo, double value) const {
  if (servo == kGripChannel) {
    q.grip_opening = value;
  } else {
    q.theta[servo - 1] = value;
  }
}

double Simulator::channel_rate(int servo) const {
  const auto& s = model_.servo_for_channel(servo);
  if (servo == kGripChannel) {
    return s.slew_rate / (s.angle_range[1] - s.angle_range[0]);
  }
  return s.slew_rate;
}

void Simulator::queue_move(int servo, double target) {
  if (channel_value(state_.joint_targets, servo) == target) return;
  state_.queue.push_back({servo, target});
  set_channel(state_.joint_targets, servo, target);
}

void Simulator::queue_pose(const JointState& q) {
  for (int servo = 1; servo <= static_cast<int>(kNumJoints); ++servo) {
    queue_move(servo, q.theta[servo - 1]);
  }
}

void Simulator::queue_grip(bool open) { queue_move(kGripChannel, open ? 1.0 : 0.0); }

Eigen::Vector3d Simulator::tip_position() const {
  return link_frames(model_, state_.joints).back().translation;
}

SceneObject* Simulator::object_at(Location l) {
  for (auto& o : state_.scene) {
    if (o.location == l) return &o;
  }
  return nullptr;
}

Location Simulator::nearest_spot(const Eigen::Vector3d& tip) const {
  Location best = Location::kSortingArea;
  double best_d = (tip.head<2>() - config_.sorting_area).norm();
  for (const auto& [loc, w] : config_.drop_points) {
    const double d = (tip.head<2>() - w.position.head<2>()).norm();
    if (d < best_d) {
      best_d = d;
      best = loc;
    }
  }
  return best;
}

bool Simulator::at_measuring_pose() const {
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    if (std::abs(state_.joints.theta[j] - measuring_pose_.theta[j]) >
        config_.measuring_tolerance) {
      return false;
    }
  }
  return true;
}

SensorReading Simulator::read_sensor() const {
  const auto& p = model_.sensor;
  double distance = 0.0;
  if (at_measuring_pose()) {
    distance = state_.sensor_mount_height;
    for (const auto& o : state_.scene) {
      if (o.location == Location::kSortingArea) distance -= o.height;
    }
  } else {
    const auto tip = link_frames(model_, state_.joints).back();
    const Eigen::Vector3d axis = tip.rotation.col(2);
    distance = axis.z() < -1e-9 ? tip.translation.z() / -axis.z()
                                : p.no_return_distance;
  }
  const std::uint64_t seed = config_.seed * 0x9e3779b97f4a7c15ULL + state_.ticks;
  return measure(p, std::max(distance, 1e-6), seed);
}

void Simulator::add_object(double height, Location where, std::string id) {
  if (!(height > 0.0)) throw std::invalid_argument("object height must be > 0");
  if (where == Location::kGripped) {
    throw std::invalid_argument("objects cannot start gripped");
  }
  if (where == Location::kSortingArea && object_at(Location::kSortingArea)) {
    throw std::invalid_argument("sorting area already occupied");
  }
  if (id.empty()) id = fmt::format("obj-{}", state_.next_object_id);
  ++state_.next_object_id;
  state_.scene.push_back({id, height, where});
  log("object_added", {{"id", id}, {"height", height},
                       {"location", std::string(to_string(where))}});
}

CommandResult Simulator::submit(const Command& c) {
  const bool is_manual = !std::holds_alternative<RunProgram>(c) &&
                         !std::holds_alternative<Reset>(c);
  if (is_manual && program_running()) {
    return reject(c, "program running; manual commands are disabled");
  }

  CommandResult ok{true, {}};
  if (const auto* cmd = std::get_if<Jog>(&c)) {
    if (cmd->servo < 1 || cmd->servo > static_cast<int>(kNumServos)) {
      return reject(c, "unknown servo");
    }
    if (!std::isfinite(cmd->delta)) return reject(c, "delta must be finite");
    log("command", command_to_json(c));
    double lo = 0.0, hi = 1.0, delta = cmd->delta;
    if (cmd->servo == kGripChannel) {
      const auto& s = model_.servo_for_channel(kGripChannel);
      delta /= (s.angle_range[1] - s.angle_range[0]);
    } else {
      lo = model_.joint_limits[cmd->servo - 1][0];
      hi = model_.joint_limits[cmd->servo - 1][1];
    }
    const double wanted = channel_value(state_.joint_targets, cmd->servo) + delta;
    const double target = std::clamp(wanted, lo, hi);
    if (target != wanted) {
      log("clamp", {{"servo", cmd->servo}, {"requested", wanted}, {"target", target}});
    }
    queue_move(cmd->servo, target);
    return ok;
  }
  if (const auto* cmd = std::get_if<SetJointTargets>(&c)) {
    if (!within_limits(model_, cmd->targets)) {
      try {
        check_joint_limits(model_, cmd->targets);
      } catch (const JointLimitError& e) {
        return reject(c, fmt::format("limit violation: {}", e.what()));
      }
      return reject(c, "limit violation");
    }
    log("command", command_to_json(c));
    queue_pose(cmd->targets);
    queue_move(kGripChannel, cmd->targets.grip_opening);
    return ok;
  }
  if (const auto* cmd = std::get_if<Grip>(&c)) {
    log("command", command_to_json(c));
    queue_grip(cmd->open);
    return ok;
  }
  if (const auto* cmd = std::get_if<PlaceObject>(&c)) {
    if (!(cmd->height > 0.0) || !std::isfinite(cmd->height)) {
      return reject(c, "object height must be > 0");
    }
    if (object_at(Location::kSortingArea)) return reject(c, "sorting area occupied");
    if (object_at(Location::kGripped)) return reject(c, "an object is held");
    log("command", command_to_json(c));
    add_object(cmd->height, Location::kSortingArea);
    return ok;
  }
  if (const auto* cmd = std::get_if<RunProgram>(&c)) {
    if (program_running()) return reject(c, "program already running");
    log("command", command_to_json(c));
    ProgramRun run;
    run.program = cmd->program;
    run.phase = Phase::kMoveToStart;
    run.started_at = state_.clock;
    state_.program = run;
    log("program_start", {{"program", std::string(to_string(cmd->program))}});

    drop_poses_.clear();
    std::vector<Location> needed;
    switch (cmd->program) {
      case Program::kOp1: needed = {config_.op1_destination}; break;
      case Program::kOp2: needed = {Location::kLeftBucket, Location::kRightBucket}; break;
      case Program::kOp3: needed = {Location::kAreaShort, Location::kAreaTall}; break;
    }
    for (const Location l : needed) {
      const auto it = config_.drop_points.find(l);
      const auto q = it == config_.drop_points.end() ? std::nullopt : solve(it->second);
      if (!q) {
        fail_program(fmt::format("destination {} unreachable", to_string(l)));
        return ok;
      }
      drop_poses_[l] = *q;
    }
    queue_grip(true);
    queue_pose(start_pose_);
    return ok;
  }
  // Reset: abort, clear the scene, drive back to the start pose.
  log("command", command_to_json(c));
  if (program_running()) {
    state_.program->phase = Phase::kFailed;
    log("program_end", {{"program", std::string(to_string(state_.program->program))},
                        {"result", "aborted"}});
  }
  state_.queue.clear();
  state_.joint_targets = state_.joints;
  if (state_.active_servo) {
    state_.motion_log.push_back({*state_.active_servo, state_.active_since, state_.clock});
    state_.active_servo.reset();
  }
  state_.scene.clear();
  queue_pose(start_pose_);
  queue_move(kGripChannel, start_pose_.grip_opening);
  return ok;
}

void Simulator::step(double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");

  // Activate the next queued move; moves that are already satisfied are
  // dropped without consuming the tick.
  while (!state_.active_servo && !state_.queue.empty()) {
    const PendingMove next = state_.queue.front();
    state_.queue.pop_front();
    if (channel_value(state_.joints, next.servo) != next.target) {
      state_.active_servo = next.servo;
      state_.active_target = next.target;
      state_.active_since = state_.clock;
    }
  }

  std::optional<int> finished;
  if (state_.active_servo) {
    const int servo = *state_.active_servo;
    const double current = channel_value(state_.joints, servo);
    const double remaining = state_.active_target - current;
    const double step_size = channel_rate(servo) * dt;
    if (std::abs(remaining) <= step_size) {
      set_channel(state_.joints, servo, state_.active_target);
      finished = servo;
    } else {
      set_channel(state_.joints, servo, current + std::copysign(step_size, remaining));
    }
  }

  state_.clock += dt;
  ++state_.ticks;

  if (finished) {
    state_.motion_log.push_back({*finished, state_.active_since, state_.clock});
    state_.active_servo.reset();
    on_motion_done(*finished);
  }
  advance_program();
}

void Simulator::on_motion_done(int servo) {
  if (servo != kGripChannel) return;
  const double opening = state_.joints.grip_opening;
  const Eigen::Vector3d tip = tip_position();

  if (opening < 0.5) {
    if (object_at(Location::kGripped)) return;
    SceneObject* o = object_at(Location::kSortingArea);
    if (!o) {
      log("grasp_miss", {{"reason", "sorting area empty"}});
      return;
    }
    const Eigen::Vector3d pick_point(config_.sorting_area.x(), config_.sorting_area.y(),
                                     0.5 * o->height);
    const double miss = (tip - pick_point).norm();
    if (miss > config_.grasp_tolerance) {
      log("grasp_miss", {{"id", o->id}, {"distance", miss}});
      return;
    }
    o->location = Location::kGripped;
    log("pick", {{"id", o->id}, {"height", o->height}});
  } else {
    SceneObject* o = object_at(Location::kGripped);
    if (!o) return;
    Location where = nearest_spot(tip);
    if (where == Location::kSortingArea && object_at(Location::kSortingArea)) {
      log("place_blocked", {{"id", o->id}});
      return;
    }
    o->location = where;
    log("place", {{"id", o->id}, {"location", std::string(to_string(where))}});
  }
}

void Simulator::enter(Phase next) {
  auto& run = *state_.program;
  log("phase", {{"program", std::string(to_string(run.program))},
                {"from", std::string(to_string(run.phase))},
                {"to", std::string(to_string(next))}});
  run.phase = next;
  if (next == Phase::kDone) {
    log("program_end", {{"program", std::string(to_string(run.program))},
                        {"result", "done"}});
  }
}

void Simulator::fail_program(const std::string& why) {
  auto& run = *state_.program;
  log("program_error", {{"program", std::string(to_string(run.program))},
                        {"reason", why}});
  run.phase = Phase::kFailed;
  log("program_end", {{"program", std::string(to_string(run.program))},
                      {"result", "failed"}});
}

void Simulator::advance_program() {
  if (!program_running() || !motion_idle()) return;
  auto& run = *state_.program;

  switch (run.phase) {
    case Phase::kMoveToStart:
      queue_pose(measuring_pose_);
      enter(Phase::kMoveToMeasure);
      break;
    case Phase::kMoveToMeasure:
      run.samples = 0;
      run.sample_sum = 0.0;
      enter(Phase::kMeasure);
      break;
    case Phase::kMeasure: {
      const SensorReading r = read_sensor();
      run.samples += 1;
      run.sample_sum += r.distance;
      log("sensor", {{"distance", r.distance}, {"voltage", r.voltage},
                     {"in_valid_range", r.in_valid_range}});
      if (run.samples < std::max(1, config_.measure_samples)) break;

      const double mean = run.sample_sum / run.samples;
      const ObjectClass cls = classify_object(model_.sensor, mean);
      run.classification = cls;
      log("classify", {{"distance", mean}, {"class", std::string(to_string(cls))}});
      if (cls == ObjectClass::kEmpty) {
        log("verdict", {{"result", "empty area"}});
        queue_pose(start_pose_);
        enter(Phase::kReturnToStart);
        break;
      }

      switch (run.program) {
        case Program::kOp1: run.destination = config_.op1_destination; break;
        case Program::kOp2:
          run.destination = cls == ObjectClass::kShort ? Location::kLeftBucket
                                                       : Location::kRightBucket;
          break;
        case Program::kOp3:
          run.destination = cls == ObjectClass::kShort ? Location::kAreaShort
                                                       : Location::kAreaTall;
          break;
      }
      const double height = std::max(0.0, state_.sensor_mount_height - mean);
      const Eigen::Vector2d& area = config_.sorting_area;
      const auto above = solve({{area.x(), area.y(), height + config_.approach_clearance}, -90.0});
      const auto grasp = solve({{area.x(), area.y(), 0.5 * height}, -90.0});
      if (!above || !grasp) {
        fail_program("pick pose unreachable");
        break;
      }
      above_pick_ = *above;
      grasp_pose_ = *grasp;
      log("verdict", {{"result", "object present"},
                      {"estimated_height", height},
                      {"destination", std::string(to_string(*run.destination))}});
      queue_pose(above_pick_);
      enter(Phase::kMoveAbovePick);
      break;
    }
    case Phase::kMoveAbovePick:
      queue_pose(grasp_pose_);
      enter(Phase::kDescend);
      break;
    case Phase::kDescend:
      queue_grip(false);
      enter(Phase::kCloseGrip);
      break;
    case Phase::kCloseGrip:
      queue_pose(above_pick_);
      enter(Phase::kLift);
      break;
    case Phase::kLift:
      queue_pose(drop_poses_.at(*run.destination));
      enter(Phase::kMoveToDestination);
      break;
    case Phase::kMoveToDestination:
      queue_grip(true);
      enter(Phase::kOpenGrip);
      break;
    case Phase::kOpenGrip:
      queue_pose(start_pose_);
      enter(Phase::kReturnToStart);
      break;
    case Phase::kReturnToStart:
      enter(Phase::kDone);
      break;
    case Phase::kDone:
    case Phase::kFailed:
      break;
  }
}

ProgramOutcome run_program_to_completion(Simulator& sim, Program p, double dt) {
  const auto verdict = sim.submit(RunProgram{p});
  if (!verdict.accepted) return {false, Phase::kFailed};
  const double deadline = sim.state().clock + 600.0;
  while (sim.program_running() && sim.state().clock < deadline) {
    sim.step(dt);
  }
  const Phase final_phase = sim.state().program->phase;
  return {final_phase == Phase::kDone, final_phase};
}

std::string event_to_json_line(const Event& e) {
  json j{{"t", e.t}, {"kind", e.kind}, {"detail", e.detail}};
  return j.dump();
}

void write_event_log(std::ostream& out, const std::vector<Event>& events) {
  for (const auto& e : events) out << event_to_json_line(e) << '\n';
}

}  // namespace armforge::sim
