#include <doctest.h>

#include "armforge/scenario.hpp"
#include "support.hpp"

using namespace armforge;
using namespace armforge::sim;

TEST_SUITE("scenario") {

TEST_CASE("minimal scenario") {
  const Scenario s = load_scenario(R"({"program": "op2", "objects": [{"height": 2.0}]})",
                                   default_arm_model());
  REQUIRE(s.program);
  CHECK(*s.program == Program::kOp2);
  REQUIRE(s.objects.size() == 1);
  CHECK(s.objects[0].height == 2.0);
  CHECK(s.objects[0].location == Location::kSortingArea);
  CHECK(s.dt == 0.02);
  CHECK(s.model == default_arm_model());
  CHECK(s.config == SimConfig{});
}

TEST_CASE("overrides") {
  const Scenario s = load_scenario(R"({
    "program": "op1", "dt": 0.01, "seed": 9,
    "model": {"sensor": {"noise_sigma": 0.1}},
    "scene": {
      "op1_destination": "RightBucket",
      "measure_samples": 3,
      "drop_points": {"RightBucket": {"position": [18, 12, 10]}}
    },
    "objects": [{"height": 4, "id": "box", "location": "AreaTall"}]
  })", default_arm_model());
  CHECK(s.dt == 0.01);
  CHECK(s.config.seed == 9);
  CHECK(s.model.sensor.noise_sigma == 0.1);
  CHECK(s.config.op1_destination == Location::kRightBucket);
  CHECK(s.config.measure_samples == 3);
  const Waypoint& w = s.config.drop_points.at(Location::kRightBucket);
  CHECK(w.position == Eigen::Vector3d(18, 12, 10));
  CHECK(w.psi == -90.0);
  CHECK(s.objects[0].id == "box");
  CHECK(s.objects[0].location == Location::kAreaTall);
}

TEST_CASE("errors") {
  const ArmModel m = default_arm_model();
  CHECK_THROWS_WITH_AS(load_scenario(R"({"program": "op7"})", m),
                       "program: expected op1, op2 or op3", ConfigError);
  CHECK_THROWS_WITH_AS(load_scenario(R"({"objects": [{"height": -1}]})", m),
                       "objects[0].height must be > 0", ConfigError);
  CHECK_THROWS_WITH_AS(load_scenario(R"({"objects": [{"height": 1, "location": "Moon"}]})", m),
                       "objects[0].location: unknown location", ConfigError);
  CHECK_THROWS_WITH_AS(load_scenario(R"({"dt": 0})", m), "dt must be > 0", ConfigError);
  CHECK_THROWS_WITH_AS(load_scenario(R"({"scene": {"drop_points": {"SortingArea": {}}}})", m),
                       "scene.drop_points.SortingArea: not a drop location", ConfigError);
  CHECK_THROWS_WITH_AS(load_scenario("{\n\"program\": }", m),
                       doctest::Contains("line 2"), ConfigError);
  CHECK_THROWS_WITH_AS(load_scenario(R"({"model": {"servos": [{}, {}]}})", m),
                       "servos must have 6 entries", ConfigError);
}

TEST_CASE("two objects in the sorting area are rejected at build time") {
  const Scenario s = load_scenario(R"({"objects": [{"height": 1}, {"height": 2}]})",
                                   default_arm_model());
  CHECK_THROWS_AS(make_simulator(s), ConfigError);
}

TEST_CASE("run_scenario") {
  const Scenario s = load_scenario_file(test::data_path("scenarios/op3_tall.json"),
                                        default_arm_model());
  const ScenarioRun r = run_scenario(s);
  CHECK(r.outcome.completed);
  REQUIRE(r.final_scene.size() == 1);
  CHECK(r.final_scene[0].location == Location::kAreaTall);
  CHECK(r.events.back().kind == "program_end");
  CHECK(validate_motion_plan(r.motion_log).empty());
}

}  // TEST_SUITE
