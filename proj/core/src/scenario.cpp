#include "armforge/scenario.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "armforge/config.hpp"

namespace armforge::sim {

using nlohmann::json;

namespace {

Eigen::Vector3d vec3(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() ||
      !v[2].is_number()) {
    throw ConfigError(fmt::format("{}: expected [x, y, z]", path));
  }
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

Waypoint waypoint(const json& v, Waypoint w, const std::string& path) {
  if (!v.is_object()) throw ConfigError(fmt::format("{}: expected object", path));
  if (auto it = v.find("position"); it != v.end()) {
    w.position = vec3(*it, path + ".position");
  }
  if (auto it = v.find("psi"); it != v.end()) {
    if (!it->is_number()) throw ConfigError(path + ".psi: expected number");
    w.psi = it->get<double>();
  }
  return w;
}

Location location(const json& v, const std::string& path) {
  const auto l = v.is_string() ? location_from_string(v.get<std::string>())
                               : std::nullopt;
  if (!l) throw ConfigError(fmt::format("{}: unknown location", path));
  return *l;
}

template <typename T>
void number(const json& obj, const char* key, T& out, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_number()) {
    throw ConfigError(fmt::format("{}.{}: expected number", path, key));
  }
  out = it->get<T>();
}

void apply_scene(const json& s, SimConfig& c) {
  if (!s.is_object()) throw ConfigError("scene: expected object");
  if (auto it = s.find("start"); it != s.end()) c.start = waypoint(*it, c.start, "scene.start");
  if (auto it = s.find("sorting_area"); it != s.end()) {
    if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() ||
        !(*it)[1].is_number()) {
      throw ConfigError("scene.sorting_area: expected [x, y]");
    }
    c.sorting_area = {(*it)[0].get<double>(), (*it)[1].get<double>()};
  }
  number(s, "sensor_mount_height", c.sensor_mount_height, "scene");
  number(s, "approach_clearance", c.approach_clearance, "scene");
  number(s, "measuring_tolerance", c.measuring_tolerance, "scene");
  number(s, "grasp_tolerance", c.grasp_tolerance, "scene");
  number(s, "measure_samples", c.measure_samples, "scene");
  if (auto it = s.find("drop_points"); it != s.end()) {
    if (!it->is_object()) throw ConfigError("scene.drop_points: expected object");
    for (const auto& [name, v] : it->items()) {
      const std::string path = "scene.drop_points." + name;
      const Location l = location(json(name), path);
      if (l == Location::kSortingArea || l == Location::kGripped) {
        throw ConfigError(path + ": not a drop location");
      }
      c.drop_points[l] = waypoint(v, c.drop_points[l], path);
    }
  }
  if (auto it = s.find("op1_destination"); it != s.end()) {
    c.op1_destination = location(*it, "scene.op1_destination");
  }
}

}  // namespace

Scenario load_scenario(std::string_view text, const ArmModel& base) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("scenario parse error at {}: {}",
                                  describe_offset(text, e.byte == 0 ? 0 : e.byte - 1),
                                  e.what()));
  }
  if (!doc.is_object()) throw ConfigError("scenario: expected object");

  Scenario s;
  s.model = base;
  if (auto it = doc.find("model"); it != doc.end()) {
    s.model = apply_arm_overrides(*it, base);
    if (auto v = validate_model(s.model); !v.empty()) throw ConfigError(v.front());
  }
  if (auto it = doc.find("program"); it != doc.end()) {
    const auto p = it->is_string() ? program_from_string(it->get<std::string>())
                                   : std::nullopt;
    if (!p) throw ConfigError("program: expected op1, op2 or op3");
    s.program = p;
  }
  number(doc, "dt", s.dt, "scenario");
  if (!(s.dt > 0.0)) throw ConfigError("dt must be > 0");
  number(doc, "seed", s.config.seed, "scenario");
  if (auto it = doc.find("scene"); it != doc.end()) apply_scene(*it, s.config);

  if (auto it = doc.find("objects"); it != doc.end()) {
    if (!it->is_array()) throw ConfigError("objects: expected array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const json& o = (*it)[i];
      const std::string path = fmt::format("objects[{}]", i);
      if (!o.is_object()) throw ConfigError(path + ": expected object");
      InitialObject obj;
      number(o, "height", obj.height, path);
      if (!(obj.height > 0.0)) throw ConfigError(path + ".height must be > 0");
      if (auto l = o.find("location"); l != o.end()) {
        obj.location = location(*l, path + ".location");
      }
      if (auto id = o.find("id"); id != o.end() && id->is_string()) {
        obj.id = id->get<std::string>();
      }
      s.objects.push_back(obj);
    }
  }
  return s;
}

Scenario load_scenario_file(const std::filesystem::path& path, const ArmModel& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open scenario '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_scenario(ss.str(), base);
}

Simulator make_simulator(const Scenario& s) {
  Simulator sim(s.model, s.config);
  for (const auto& o : s.objects) {
    try {
      sim.add_object(o.height, o.location, o.id);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(fmt::format("objects: {}", e.what()));
    }
  }
  return sim;
}

ScenarioRun run_scenario(const Scenario& s) {
  Simulator sim = make_simulator(s);
  ScenarioRun run;
  if (s.program) {
    run.outcome = run_program_to_completion(sim, *s.program, s.dt);
  } else {
    run.outcome = {true, Phase::kDone};
  }
  run.events = sim.state().event_log;
  run.final_scene = sim.state().scene;
  run.motion_log = sim.state().motion_log;
  return run;
}

}  // namespace armforge::sim
