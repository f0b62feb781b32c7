#include "cli.hpp"

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <nlohmann/json.hpp>

#include "armforge/config.hpp"
#include "armforge/kinematics.hpp"
#include "armforge/power.hpp"
#include "armforge/scenario.hpp"
#include "armforge/service.hpp"
#include "armforge/statics.hpp"
#include "armforge/workspace.hpp"

namespace armforge::cli {

using nlohmann::json;

namespace {

constexpr double kNominalWorkspace = 40.0;  // cm

// Raised by failures that are the caller's fault after parsing succeeded.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  bool json = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config,
                  "Arm config JSON (falls back to $ARMFORGE_CONFIG, then defaults)");
  sub->add_flag("--json", c.json, "Machine-readable output");
}

ArmModel load_model(const Common& c) {
  std::string path = c.config;
  if (path.empty()) {
    if (const char* env = std::getenv("ARMFORGE_CONFIG"); env && *env) path = env;
  }
  return path.empty() ? default_arm_model() : load_arm_config_file(path);
}

std::string fixed(double v, int decimals = 4) {
  // Avoid "-0.0000" so identical poses print identically.
  std::string s = fmt::format("{:.{}f}", v, decimals);
  if (s.find_first_not_of("-0.") == std::string::npos && s[0] == '-') s.erase(0, 1);
  return s;
}

json matrix_json(const Eigen::Matrix4d& M) {
  json rows = json::array();
  for (int r = 0; r < 4; ++r) {
    rows.push_back(json::array({M(r, 0), M(r, 1), M(r, 2), M(r, 3)}));
  }
  return rows;
}

// ---- fk -------------------------------------------------------------------

struct FkArgs {
  Common common;
  std::vector<double> theta;
  double grip = 0.0;
};

int cmd_fk(const FkArgs& a, std::ostream& out) {
  if (a.theta.size() != kNumJoints) {
    throw UsageError(fmt::format("--theta needs {} comma-separated angles, got {}",
                                 kNumJoints, a.theta.size()));
  }
  const ArmModel m = load_model(a.common);
  JointState q;
  std::copy(a.theta.begin(), a.theta.end(), q.theta.begin());
  q.grip_opening = a.grip;
  const HomogeneousTransform T = forward_kinematics(m, q);
  const Eigen::Vector3d& p = T.translation;
  const Eigen::Vector3d shoulder(0.0, 0.0, m.base_height());
  const PoseTarget pose = achieved_pose(m, q);

  if (a.common.json) {
    json j{{"theta_deg", q.theta},
           {"position_cm", json::array({p.x(), p.y(), p.z()})},
           {"distance_from_base_cm", p.norm()},
           {"distance_from_shoulder_cm", (p - shoulder).norm()},
           {"psi_deg", pose.psi},
           {"transform", matrix_json(T.matrix())}};
    out << j.dump(2) << '\n';
    return kExitOk;
  }
  out << fmt::format("theta (deg): {}\n", fmt::join(a.theta, ", "));
  out << fmt::format("tip position (cm): x={} y={} z={}\n", fixed(p.x()), fixed(p.y()),
                     fixed(p.z()));
  out << fmt::format("distance from base origin (cm): {}\n", fixed(p.norm()));
  out << fmt::format("distance from shoulder axis point (cm): {}\n",
                     fixed((p - shoulder).norm()));
  out << fmt::format("grip pitch psi (deg): {}\n", fixed(pose.psi));
  out << "transform (rotation | translation cm):\n";
  const Eigen::Matrix4d M = T.matrix();
  for (int r = 0; r < 4; ++r) {
    out << fmt::format("  {:>9} {:>9} {:>9} {:>10}\n", fixed(M(r, 0), 6), fixed(M(r, 1), 6),
                       fixed(M(r, 2), 6), fixed(M(r, 3)));
  }
  return kExitOk;
}

// ---- ik -------------------------------------------------------------------

struct IkArgs {
  Common common;
  std::vector<double> target;
  double psi = -90.0;
  double roll = 90.0;
  std::string branch = "up";
};

int cmd_ik(const IkArgs& a, std::ostream& out) {
  if (a.target.size() != 3) {
    throw UsageError(
        fmt::format("--target needs x,y,z (cm), got {} values", a.target.size()));
  }
  const ArmModel m = load_model(a.common);
  PoseTarget t;
  t.position = {a.target[0], a.target[1], a.target[2]};
  t.psi = a.psi;
  t.roll = a.roll;
  const ElbowBranch b = a.branch == "down" ? ElbowBranch::kDown : ElbowBranch::kUp;
  const IkResult r = inverse_kinematics(m, t, b);

  if (const auto* f = std::get_if<IkFailure>(&r)) {
    if (a.common.json) {
      out << json{{"ok", false}, {"error", to_string(*f)}}.dump(2) << '\n';
    } else {
      out << to_string(*f) << '\n';
    }
    return kExitError;
  }
  const JointState& q = std::get<JointState>(r);
  const Eigen::Vector3d p = forward_kinematics(m, q).translation;
  const double err = (p - t.position).norm();
  if (a.common.json) {
    out << json{{"ok", true},
                {"branch", a.branch},
                {"theta_deg", q.theta},
                {"fk_position_cm", json::array({p.x(), p.y(), p.z()})},
                {"position_error_cm", err}}
               .dump(2)
        << '\n';
    return kExitOk;
  }
  std::vector<std::string> th;
  for (double v : q.theta) th.push_back(fixed(v, 6));
  out << fmt::format("branch: elbow-{}\n", a.branch);
  out << fmt::format("theta (deg): {}\n", fmt::join(th, ","));
  out << fmt::format("fk check (cm): x={} y={} z={} error={:.2e}\n", fixed(p.x()),
                     fixed(p.y()), fixed(p.z()), err);
  return kExitOk;
}

// ---- torque ---------------------------------------------------------------

struct TorqueArgs {
  Common common;
  double load = 0.0;
  bool max_payload = false;
  bool published_offsets = false;
};

json report_json(const TorqueReport& r, const ArmModel& m) {
  json rows = json::array();
  for (std::size_t k = 0; k < 5; ++k) {
    rows.push_back({{"equation", fmt::format("T{}", k + 1)},
                    {"servo", m.servos[k + 1].model_name},
                    {"required", r.torques[k]},
                    {"rated", r.rated[k]},
                    {"margin", r.margins[k]}});
  }
  return {{"load", r.load}, {"rows", rows}, {"feasible", r.feasible}};
}

json discrepancy_json(const ArmModel& m) {
  json arr = json::array();
  for (const auto& c : intercept_discrepancies(m)) {
    arr.push_back({{"equation", fmt::format("T{}", c.index + 1)},
                   {"computed", c.computed},
                   {"published", c.published},
                   {"difference", c.difference},
                   {"discrepant", c.discrepant}});
  }
  return arr;
}

json increments_json(const ArmModel& m) {
  const auto& tables = reference_torque_tables();
  json arr = json::array();
  for (std::size_t k = 0; k < 5; ++k) {
    const double ref = tables[1].torques[k] - tables[0].torques[k];
    arr.push_back({{"equation", fmt::format("T{}", k + 1)},
                   {"computed", torque_load_increment(m, k)},
                   {"published", ref}});
  }
  return arr;
}

void print_discrepancies(const ArmModel& m, std::ostream& out) {
  out << "zero-load intercepts vs published table (kg*cm):\n";
  for (const auto& c : intercept_discrepancies(m)) {
    out << fmt::format("  T{}  computed {:>8}  published {:>8}  diff {:>+8.4f}{}\n",
                       c.index + 1, fixed(c.computed), fixed(c.published), c.difference,
                       c.discrepant ? "  DISCREPANT" : "");
  }
  out << "load increment per 100 gf (kg*cm):\n";
  const auto& tables = reference_torque_tables();
  for (std::size_t k = 0; k < 5; ++k) {
    out << fmt::format("  T{}  computed {:>8}  published {:>8}\n", k + 1,
                       fixed(torque_load_increment(m, k)),
                       fixed(tables[1].torques[k] - tables[0].torques[k]));
  }
  out << "note: increments agree; the flagged intercepts differ by a constant offset.\n";
}

int cmd_torque(const TorqueArgs& a, std::ostream& out) {
  if (!(a.load >= 0.0)) throw UsageError("--load must be >= 0 gf");
  const ArmModel m = load_model(a.common);
  const std::optional<TorqueIntercepts> overrides =
      a.published_offsets ? std::optional(published_zero_load_torques()) : std::nullopt;

  if (a.max_payload) {
    const PayloadResult p = max_payload(m, overrides);
    const std::string servo =
        p.binding ? m.servos[*p.binding + 1].model_name : std::string("none");
    if (a.common.json) {
      json j{{"max_payload_gf", p.load},
             {"intercepts", a.published_offsets ? "published" : "equations"},
             {"binding", p.binding ? json{{"equation", fmt::format("T{}", *p.binding + 1)},
                                          {"servo", servo}}
                                   : json(nullptr)},
             {"intercept_checks", discrepancy_json(m)}};
      out << j.dump(2) << '\n';
      return kExitOk;
    }
    out << fmt::format("max payload (gf): {:.0f}  [{} intercepts]\n", p.load,
                       a.published_offsets ? "published" : "equation");
    if (p.binding) out << fmt::format("binding: T{} ({})\n", *p.binding + 1, servo);
    print_discrepancies(m, out);
    return kExitOk;
  }

  const TorqueReport r = overrides ? joint_torques_with_intercepts(m, a.load, *overrides)
                                   : joint_torques(m, a.load);
  if (a.common.json) {
    json j = report_json(r, m);
    j["intercepts"] = a.published_offsets ? "published" : "equations";
    j["intercept_checks"] = discrepancy_json(m);
    j["increment_checks"] = increments_json(m);
    out << j.dump(2) << '\n';
    return kExitOk;
  }
  out << fmt::format("torque report: load {} gf, torques in kg*cm{}\n", fixed(a.load, 1),
                     a.published_offsets ? " (published intercepts)" : "");
  out << fmt::format("{:<9} {:<9} {:>9} {:>8} {:>9}\n", "equation", "servo", "required",
                     "rated", "margin");
  for (std::size_t k = 0; k < 5; ++k) {
    out << fmt::format("{:<9} {:<9} {:>9} {:>8} {:>9}\n", fmt::format("T{}", k + 1),
                       m.servos[k + 1].model_name, fixed(r.torques[k], 3),
                       fixed(r.rated[k], 2), fixed(r.margins[k], 3));
  }
  out << fmt::format("feasible: {}\n", r.feasible ? "yes" : "no");
  print_discrepancies(m, out);
  return kExitOk;
}

// ---- power-budget ---------------------------------------------------------

int cmd_power(const Common& c, std::ostream& out) {
  const ArmModel m = load_model(c);
  const BudgetReport b = stall_budget(m);
  if (c.json) {
    json servos = json::array();
    for (const auto& s : m.servos) {
      servos.push_back({{"model", s.model_name},
                        {"channel", s.channel},
                        {"stall_current", s.stall_current},
                        {"comm_current", s.comm_current}});
    }
    out << json{{"total_stall", b.total_stall},
                {"servo_supply_limit", b.servo_supply_limit},
                {"simultaneous_feasible", b.simultaneous_feasible},
                {"worst_single_servo", b.worst_single_servo},
                {"logic_total", b.logic_total},
                {"logic_limit", b.logic_limit},
                {"logic_feasible", b.logic_feasible},
                {"servos", servos}}
               .dump(2)
        << '\n';
    return kExitOk;
  }
  out << "power budget (currents in mA)\n";
  out << fmt::format("{:<9} {:>7} {:>6} {:>5}\n", "servo", "channel", "stall", "comm");
  for (const auto& s : m.servos) {
    out << fmt::format("{:<9} {:>7} {:>6} {:>5}\n", s.model_name, s.channel,
                       s.stall_current, s.comm_current);
  }
  out << fmt::format("servo rail {} V: all-stall total {} / limit {} -> {}\n",
                     m.supply.servo_supply.volts, b.total_stall, b.servo_supply_limit,
                     b.simultaneous_feasible ? "simultaneous motion feasible"
                                             : "simultaneous motion infeasible");
  out << fmt::format("worst single servo: {} -> one-at-a-time motion {}\n",
                     b.worst_single_servo,
                     b.worst_single_servo <= b.servo_supply_limit ? "feasible" : "infeasible");
  out << fmt::format("logic rail {} V: {} / limit {} -> {}\n", m.supply.logic_supply.volts,
                     b.logic_total, b.logic_limit,
                     b.logic_feasible ? "feasible" : "infeasible");
  return kExitOk;
}

// ---- workspace ------------------------------------------------------------

struct WorkspaceArgs {
  Common common;
  int steps = 25;
  std::string out_path;
  std::string format;
};

int cmd_workspace(const WorkspaceArgs& a, std::ostream& out) {
  if (a.steps < 2) throw UsageError("--steps must be >= 2");
  std::string format = a.format;
  if (format.empty()) {
    format = a.out_path.size() >= 4 && a.out_path.substr(a.out_path.size() - 4) == ".ply"
                 ? "ply"
                 : "csv";
  }
  const ArmModel m = load_model(a.common);
  const PointCloud pc = sample_workspace(m, a.steps);
  const WorkspaceExtent e = workspace_extent(pc);

  if (!a.out_path.empty()) {
    std::ofstream f(a.out_path);
    if (!f) throw std::runtime_error(fmt::format("cannot write '{}'", a.out_path));
    if (format == "ply") {
      write_ply(f, pc);
    } else {
      write_csv(f, pc);
    }
  }

  const double reach_dev = (e.max_reach - kNominalWorkspace) / kNominalWorkspace;
  const double diam_dev = (e.diameter - kNominalWorkspace) / kNominalWorkspace;
  const std::string note = fmt::format(
      "the nominal {:.0f} cm workspace size is ambiguous between radius and diameter: "
      "read as a radius it is within {:.1f}% of max_reach; read as a diameter it is "
      "{:.1f}% off the largest pairwise extent",
      kNominalWorkspace, std::abs(reach_dev) * 100.0, std::abs(diam_dev) * 100.0);

  if (a.common.json) {
    json j{{"steps", a.steps},
           {"grid_points", pc.grid_points},
           {"points", pc.points.size()},
           {"max_reach_cm", e.max_reach},
           {"diameter_cm", e.diameter},
           {"nominal_cm", kNominalWorkspace},
           {"max_reach_vs_nominal", reach_dev},
           {"diameter_vs_nominal", diam_dev},
           {"note", note}};
    if (!a.out_path.empty()) j["file"] = {{"path", a.out_path}, {"format", format}};
    out << j.dump(2) << '\n';
    return kExitOk;
  }
  out << fmt::format("workspace: {} steps per joint, {} grid poses, {} distinct points\n",
                     a.steps, pc.grid_points, pc.points.size());
  out << fmt::format("max_reach (cm): {}  (horizontal distance from the base axis)\n",
                     fixed(e.max_reach));
  out << fmt::format("diameter (cm): {}  (largest distance between two points)\n",
                     fixed(e.diameter));
  out << "note: " << note << '\n';
  if (!a.out_path.empty()) out << fmt::format("wrote {} ({})\n", a.out_path, format);
  return kExitOk;
}

// ---- simulate -------------------------------------------------------------

struct SimulateArgs {
  Common common;
  std::string scenario;
  std::string log_path;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  const ArmModel base = load_model(a.common);
  const sim::Scenario s = sim::load_scenario_file(a.scenario, base);
  if (!s.program) throw UsageError("scenario has no program to run");
  const sim::ScenarioRun run = sim::run_scenario(s);

  const bool log_to_stdout = a.log_path.empty() || a.log_path == "-";
  if (log_to_stdout) {
    sim::write_event_log(out, run.events);
  } else {
    std::ofstream f(a.log_path);
    if (!f) throw std::runtime_error(fmt::format("cannot write '{}'", a.log_path));
    sim::write_event_log(f, run.events);
  }
  std::ostream& summary = log_to_stdout ? err : out;

  json objects = json::array();
  for (const auto& o : run.final_scene) {
    objects.push_back({{"id", o.id},
                       {"height", o.height},
                       {"location", std::string(sim::to_string(o.location))}});
  }
  if (a.common.json) {
    summary << json{{"program", std::string(sim::to_string(*s.program))},
                    {"completed", run.outcome.completed},
                    {"final_phase", std::string(sim::to_string(run.outcome.final_phase))},
                    {"events", run.events.size()},
                    {"objects", objects}}
                   .dump(2)
            << '\n';
  } else {
    summary << fmt::format("program {}: {} ({} events)\n", sim::to_string(*s.program),
                           sim::to_string(run.outcome.final_phase), run.events.size());
    for (const auto& o : run.final_scene) {
      summary << fmt::format("  object {} height {} cm -> {}\n", o.id, fixed(o.height, 2),
                             sim::to_string(o.location));
    }
  }
  return run.outcome.completed ? kExitOk : kExitError;
}

// ---- serve ----------------------------------------------------------------

struct ServeArgs {
  Common common;
  int port = service::kDefaultPort;
  std::string host = "127.0.0.1";
  std::string scenario;
};

std::atomic<bool> g_signal_stop{false};
extern "C" void on_signal(int) { g_signal_stop = true; }

int cmd_serve(const ServeArgs& a, std::ostream& out, const Context& ctx) {
  if (a.port < 1 || a.port > 65535) throw UsageError("--port must be in 1..65535");
  const ArmModel base = load_model(a.common);
  sim::Scenario s;
  if (!a.scenario.empty()) {
    s = sim::load_scenario_file(a.scenario, base);
  } else {
    s.model = base;
  }

  std::atomic<bool>* stop = ctx.stop;
  if (!stop) {
    g_signal_stop = false;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    stop = &g_signal_stop;
  }

  service::ServiceCore core(sim::make_simulator(s), s.dt);
  core.start();
  if (s.program) core.post(sim::RunProgram{*s.program}).get();
  service::Server server(core, static_cast<std::uint16_t>(a.port), a.host);

  if (a.common.json) {
    out << json{{"listening", fmt::format("http://{}:{}", a.host, server.port())}}.dump()
        << std::endl;
  } else {
    out << fmt::format("listening on http://{}:{} (dt {} s)", a.host, server.port(), s.dt)
        << std::endl;
  }
  if (ctx.on_listening) ctx.on_listening(server.port());
  while (!*stop) std::this_thread::sleep_for(std::chrono::milliseconds(20));
  server.stop();
  core.stop();
  return kExitOk;
}

std::vector<std::string> reversed(std::vector<std::string> v) {
  std::reverse(v.begin(), v.end());
  return v;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const Context& ctx) {
  CLI::App app{"armforge: 5-DOF sorting arm toolkit"};
  app.name("armforge");
  app.require_subcommand(1);

  FkArgs fk;
  auto* fk_cmd = app.add_subcommand("fk", "Forward kinematics (angles deg, positions cm)");
  add_common(fk_cmd, fk.common);
  fk_cmd->add_option("--theta", fk.theta, "t1,t2,t3,t4,t5 in deg")
      ->delimiter(',')
      ->required();
  fk_cmd->add_option("--grip", fk.grip, "Grip opening 0..1");

  IkArgs ik;
  auto* ik_cmd = app.add_subcommand("ik", "Inverse kinematics (positions cm, angles deg)");
  add_common(ik_cmd, ik.common);
  ik_cmd->add_option("--target", ik.target, "x,y,z in cm")->delimiter(',')->required();
  ik_cmd->add_option("--psi", ik.psi, "Grip pitch in deg (0 radial, -90 down)");
  ik_cmd->add_option("--roll", ik.roll, "Roll theta5 in deg");
  ik_cmd->add_option("--branch", ik.branch, "Elbow branch")
      ->check(CLI::IsMember({"up", "down"}));

  TorqueArgs tq;
  auto* tq_cmd = app.add_subcommand("torque", "Static holding torques (gf, kg*cm)");
  add_common(tq_cmd, tq.common);
  tq_cmd->add_option("--load", tq.load, "Payload in gram-force");
  tq_cmd->add_flag("--max-payload", tq.max_payload, "Solve the largest holdable payload");
  tq_cmd->add_flag("--published-offsets,--paper-offsets", tq.published_offsets,
                   "Use the published zero-load torques as intercepts");

  Common pw;
  auto* pw_cmd = app.add_subcommand("power-budget", "Supply current budget (mA)");
  add_common(pw_cmd, pw);

  WorkspaceArgs ws;
  auto* ws_cmd = app.add_subcommand("workspace", "Sample the reachable workspace (cm)");
  add_common(ws_cmd, ws.common);
  ws_cmd->add_option("--steps", ws.steps, "Grid steps per joint (>= 2)");
  ws_cmd->add_option("--out", ws.out_path, "Write the point cloud (.csv or .ply)");
  ws_cmd->add_option("--format", ws.format, "Override the file format")
      ->check(CLI::IsMember({"csv", "ply"}));

  SimulateArgs sm;
  auto* sm_cmd = app.add_subcommand("simulate", "Run a scenario headless");
  add_common(sm_cmd, sm.common);
  sm_cmd->add_option("scenario", sm.scenario, "Scenario JSON")->required();
  sm_cmd->add_option("--log", sm.log_path, "Event log (JSON lines); default stdout");

  ServeArgs sv;
  auto* sv_cmd = app.add_subcommand("serve", "Run the HTTP/WebSocket service");
  add_common(sv_cmd, sv.common);
  sv_cmd->add_option("--port", sv.port, "TCP port");
  sv_cmd->add_option("--host", sv.host, "Bind address");
  sv_cmd->add_option("--scenario", sv.scenario, "Preload a scenario");

  try {
    auto rargs = reversed(args);
    app.parse(rargs);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (fk_cmd->parsed()) return cmd_fk(fk, out);
    if (ik_cmd->parsed()) return cmd_ik(ik, out);
    if (tq_cmd->parsed()) return cmd_torque(tq, out);
    if (pw_cmd->parsed()) return cmd_power(pw, out);
    if (ws_cmd->parsed()) return cmd_workspace(ws, out);
    if (sm_cmd->parsed()) return cmd_simulate(sm, out, err);
    if (sv_cmd->parsed()) return cmd_serve(sv, out, ctx);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitUsage;
}

}  // namespace armforge::cli
