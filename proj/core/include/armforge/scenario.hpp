#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "armforge/model.hpp"
#include "armforge/sim.hpp"

namespace armforge::sim {

// Scenario file:
//   {
//     "program": "op1" | "op2" | "op3",          optional
//     "objects": [{"height": 2.0, "location": "SortingArea", "id": "a"}],
//     "dt": 0.02, "seed": 0,
//     "model": { ...arm config overrides... },    optional
//     "scene": {                                   optional SimConfig overrides
//       "start": {"position": [x, y, z], "psi": 0},
//       "sorting_area": [x, y],
//       "sensor_mount_height": 13.8,
//       "approach_clearance": 5.0,
//       "drop_points": {"LeftBucket": {"position": [...], "psi": -90}, ...},
//       "op1_destination": "LeftBucket",
//       "measure_samples": 5
//     }
//   }
struct InitialObject {
  std::string id;
  double height = 0.0;
  Location location = Location::kSortingArea;
};

struct Scenario {
  ArmModel model;
  SimConfig config;
  std::optional<Program> program;
  std::vector<InitialObject> objects;
  double dt = 0.02;
};

// Throws ConfigError.
Scenario load_scenario(std::string_view text, const ArmModel& base);
Scenario load_scenario_file(const std::filesystem::path& path, const ArmModel& base);

// Simulator with the scenario's objects placed.
Simulator make_simulator(const Scenario& s);

struct ScenarioRun {
  ProgramOutcome outcome;
  std::vector<Event> events;
  std::vector<SceneObject> final_scene;
  std::vector<MotionInterval> motion_log;
};

// Runs the scenario's program headless (as fast as possible).
ScenarioRun run_scenario(const Scenario& s);

}  // namespace armforge::sim
